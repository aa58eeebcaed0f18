#pragma once

// Extended-precision scalar used by every solver internal.
//
// The regularized system couples an order-4k operator with an O(1) mass
// term. On a grid with n cells the stiffness-to-mass ratio grows like n^(4k),
// which is ~1e20 for k = 2, n = 200: far past what double precision can
// resolve. All assembly, factorization and residual evaluation therefore runs
// in IEEE binary128 (__float128, ~34 significant digits). Public fields stay
// in double.

#include <quadmath.h>

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace mfg {

using hreal = __float128;
using HVec = std::vector<hreal>;

namespace hp {

inline hreal sqrt(hreal x) { return sqrtq(x); }
inline hreal pow(hreal x, hreal y) { return powq(x, y); }
inline hreal log(hreal x) { return logq(x); }
inline hreal abs(hreal x) { return fabsq(x); }
inline hreal sin(hreal x) { return sinq(x); }
inline hreal cos(hreal x) { return cosq(x); }
inline bool isfinite(hreal x) { return finiteq(x) != 0; }
inline hreal pi() {
  static const hreal value = acosq(hreal(-1));
  return value;
}

inline hreal max(hreal a, hreal b) { return a > b ? a : b; }
inline hreal min(hreal a, hreal b) { return a < b ? a : b; }

inline std::string to_string(hreal x, int digits = 20) {
  char buf[128];
  quadmath_snprintf(buf, sizeof buf, "%.*Qg", digits, x);
  return buf;
}

}  // namespace hp

/// Scalar-generic math so model evaluators can be written once for double
/// and hreal.
namespace num {

inline double sqrt(double x) { return std::sqrt(x); }
inline double pow(double x, double y) { return std::pow(x, y); }
inline double log(double x) { return std::log(x); }
inline double abs(double x) { return std::abs(x); }
inline hreal sqrt(hreal x) { return hp::sqrt(x); }
inline hreal pow(hreal x, hreal y) { return hp::pow(x, y); }
inline hreal log(hreal x) { return hp::log(x); }
inline hreal abs(hreal x) { return hp::abs(x); }

}  // namespace num

inline HVec to_h(const Eigen::VectorXd& v) {
  HVec out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v[i];
  return out;
}

inline Eigen::VectorXd to_d(std::span<const hreal> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = static_cast<double>(v[i]);
  return out;
}

inline hreal max_abs(std::span<const hreal> v) {
  hreal r = 0;
  for (hreal x : v) r = hp::max(r, hp::abs(x));
  return r;
}

}  // namespace mfg
