#pragma once

// Density subproblem: minimize I(w) = 1/2 w^T A w + q^T w over w >= 0, i.e. the
// linear complementarity problem  m >= 0,  A m + q >= 0,  m^T (A m + q) = 0.

#include "mfg/banded.hpp"
#include "mfg/discretization.hpp"
#include "mfg/model.hpp"

#include <cstdint>
#include <vector>

namespace mfg {

struct ObstacleQp {
  BandMatrix<hreal> A;  ///< eps (M + K_m), symmetric positive definite
  HVec q;               ///< M c
  double epsilon = 0.0;

  int size() const { return A.size(); }
  Eigen::MatrixXd dense_A() const { return to_dense(A); }
  Field q_field() const { return to_d(q); }

  /// Gradient A w + q.
  HVec gradient(std::span<const hreal> w) const;
  /// I(w).
  hreal objective(std::span<const hreal> w) const;
  double objective(const Field& w) const;

  /// Builds an instance from a dense symmetric matrix (testing and small demos).
  static ObstacleQp from_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& q, int half_band);
};

/// c = -u0 - H(Du0) + g(m0) - V, A = eps (M + K_m), q = M c (times lambda).
/// Throws InputError for m0 < 0 or eps outside (0, 1).
ObstacleQp assemble_obstacle_qp(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                                const Field& m0, const Field& u0, double lambda = 1.0);
ObstacleQp assemble_obstacle_qp(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                                std::span<const hreal> m0, std::span<const hreal> u0, double lambda = 1.0);

enum class LcpMethod {
  active_set,  ///< primal-dual active set, falling back to a primal active-set method
  pgs,         ///< projected Gauss-Seidel
};

struct LcpOptions {
  LcpMethod method = LcpMethod::active_set;
  double tol = 1e-10;
  int max_iter = 0;  ///< 0 selects the default (200 n sweeps for PGS, 50 n pivots for active set)
};

struct LcpResult {
  Field m;
  HVec m_h;
  int iterations = 0;
  double residual = 0.0;          ///< max_i |min(m_i, (A m + q)_i)|
  std::vector<double> history;    ///< residual after each sweep / pivot
};

/// ||min(m, A m + q)||_max.
hreal complementarity_residual(const ObstacleQp& qp, std::span<const hreal> m);

/// Throws InputError for a negative m_init and NonconvergenceError when the
/// iteration cap is hit.
LcpResult solve_lcp(const ObstacleQp& qp, const Field& m_init, const LcpOptions& options = {});
LcpResult solve_lcp(const ObstacleQp& qp, std::span<const hreal> m_init, const LcpOptions& options = {});

struct ViReport {
  double min_probe = 0.0;        ///< min over probes of (A m + q)^T (w - m)
  double min_gradient = 0.0;     ///< min_i (A m + q)_i
  double max_active_gradient = 0.0;  ///< max |(A m + q)_i| over {m_i > threshold}
  double threshold = 0.0;
  double scale = 1.0;            ///< max_i |q_i|, for relative tolerances
};

/// Evaluates the variational inequality and its pointwise split. Probes must
/// be nonnegative (InputError otherwise).
ViReport check_variational_inequality(const ObstacleQp& qp, const Field& m, const std::vector<Field>& probes);
ViReport check_variational_inequality(const ObstacleQp& qp, std::span<const hreal> m,
                                      const std::vector<Field>& probes);

/// Unit bumps at every node plus `random_count` squared trigonometric
/// polynomials (seeded).
std::vector<Field> vi_probe_set(const Field& m, const DiscreteOperators& ops, int random_count, std::uint64_t seed);

}  // namespace mfg
