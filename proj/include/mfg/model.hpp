#pragma once

// Problem data: Hamiltonian, coupling, potentials and boundary data.
//
//   H(x, p) = a(x) (1 + |p + s(x)|^2)^(gamma/2) + b(x) (p + s(x))
//
// where s is the p-shift carried by the hat transform.

#include "mfg/discretization.hpp"
#include "mfg/errors.hpp"
#include "mfg/precision.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mfg {

struct HamiltonianSpec {
  Field a;        ///< strictly positive
  Field b;
  double gamma = 2.0;
  Field p_shift;  ///< zero unless the problem was hat-transformed

  /// H at node i for the shifted momentum. Generic in the scalar type.
  template <class T>
  T value(int i, T p) const {
    const T q = p + T(p_shift[i]);
    return T(a[i]) * num::pow(T(1) + q * q, T(gamma) / T(2)) + T(b[i]) * q;
  }

  /// D_p H at node i.
  template <class T>
  T dp(int i, T p) const {
    const T q = p + T(p_shift[i]);
    return T(a[i]) * T(gamma) * num::pow(T(1) + q * q, T(gamma) / T(2) - T(1)) * q + T(b[i]);
  }

  /// D_pp H at node i (> 0 for gamma > 1).
  template <class T>
  T dpp(int i, T p) const {
    const T q = p + T(p_shift[i]);
    const T s = T(1) + q * q;
    return T(a[i]) * T(gamma) * num::pow(s, T(gamma) / T(2) - T(2)) * (s + (T(gamma) - T(2)) * q * q);
  }

  void validate(int nodes) const;
};

struct CouplingSpec {
  enum class Kind { power, log };
  Kind kind = Kind::power;
  double alpha = 1.0;   ///< power exponent
  double floor = 1e-8;  ///< log offset

  static CouplingSpec power(double alpha) { return {Kind::power, alpha, 1e-8}; }
  static CouplingSpec log(double floor = 1e-8) { return {Kind::log, 1.0, floor}; }

  /// g(m) for m >= 0. No domain check; callers clamp.
  template <class T>
  T value(T m) const {
    if (kind == Kind::power) return m > T(0) ? num::pow(m, T(alpha)) : T(0);
    return num::log(T(floor) + m);
  }

  /// g'(m). For power couplings with alpha < 1 the derivative at 0 is
  /// replaced by its value at a tiny positive density.
  template <class T>
  T derivative(T m) const {
    if (kind == Kind::power) {
      if (alpha == 1.0) return T(1);
      const T mm = m > T(1e-30) ? m : T(1e-30);
      return T(alpha) * num::pow(mm, T(alpha) - T(1));
    }
    return T(1) / (T(floor) + (m > T(0) ? m : T(0)));
  }

  bool unbounded() const { return kind == Kind::log || alpha > 0.0; }
  std::string describe() const;
  void validate() const;
};

struct MfgProblem {
  GridInterval grid;
  HamiltonianSpec H;
  CouplingSpec g;
  Field V, phi, h, xi;
  double normalization_tolerance = 1e-8;

  double phi_mass = 1.0;              ///< quadrature of phi, recorded at construction
  std::vector<std::string> warnings;  ///< non-fatal validation findings

  int nodes() const { return grid.nodes(); }
  bool homogeneous() const;  ///< h identically zero
};

double eval_hamiltonian(const HamiltonianSpec& spec, int node_index, double p);
double eval_dp_hamiltonian(const HamiltonianSpec& spec, int node_index, double p);

/// Throws InputError for m < 0.
double eval_coupling(const CouplingSpec& g, double m);

/// Validates field lengths, a > 0, gamma > 1, phi >= 0 and records the mass of
/// phi. A mass differing from 1 by more than normalization_tolerance only adds
/// a warning. Empty p_shift / xi are filled with zeros / -h.
MfgProblem make_problem(GridInterval grid, HamiltonianSpec H, CouplingSpec g, Field V, Field phi, Field h,
                        Field xi, const DiscreteOperators& ops, double normalization_tolerance = 1e-8);

/// Shift to homogeneous boundary data: p_shift += G h, V += h, xi += h, h = 0.
MfgProblem hat_transform(const MfgProblem& problem, const DiscreteOperators& ops);

struct ManufacturedProblem {
  MfgProblem problem;
  Field m_exact;
  Field u_exact;
};

/// Builds V and phi so that (m_star, u_star) solves the unregularized discrete
/// system exactly. h is u_star itself, so the homogeneous exact value function
/// is zero. Throws InputError if phi comes out negative at some node.
ManufacturedProblem manufactured_problem(const Field& m_star, const Field& u_star, const HamiltonianSpec& H,
                                         const CouplingSpec& g, const GridInterval& grid,
                                         const DiscreteOperators& ops);

/// The sine-perturbed manufactured pair on the grid:
/// m = (1 + 0.2 sin^2(pi x~)) normalized to unit mass, u = 0.1 sin(pi x~),
/// with x~ the grid coordinate mapped to [0, 1].
std::pair<Field, Field> sine_manufactured_pair(const DiscreteOperators& ops);

/// Residuals of the unregularized discrete system at (m, u):
/// first = -u - H(Du) + g(m) - V, second = m - div(m DpH(Du)) - phi.
std::pair<Field, Field> equation_residuals(const MfgProblem& problem, const DiscreteOperators& ops, const Field& m,
                                           const Field& u);

}  // namespace mfg
