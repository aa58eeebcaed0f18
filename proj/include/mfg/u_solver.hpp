#pragma once

// Value-function subproblem: find u_hat in the homogeneous space with
//   eps (<u, v> + <D_cl u, D_cl v>) = <f0, v>   for all homogeneous v,
//   f0 = -m0 + div(m0 DpH(Du0)) + phi - eps (xi + Delta^{2k} xi).

#include "mfg/banded.hpp"
#include "mfg/discretization.hpp"
#include "mfg/model.hpp"

#include <vector>

namespace mfg {

struct CoerciveSystem {
  BandMatrix<hreal> A;  ///< eps (M + K_u) on interior nodes (endpoints removed)
  HVec rhs;             ///< interior entries of M f0, xi term in weak form
  std::vector<int> interior;
  int nodes = 0;
  double epsilon = 0.0;

  Eigen::MatrixXd dense_A() const { return to_dense(A); }
  /// rhs lifted back to all nodes (zero at the endpoints).
  Field rhs_field() const;
  /// A u restricted to the interior, for a full-length u.
  HVec apply(std::span<const hreal> u_full) const;
};

/// Throws InputError if the problem is not hat-transformed, m0 < 0, or eps is
/// outside (0, 1). lambda scales the non-eps part of f0.
CoerciveSystem assemble_rhs(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon, const Field& m0,
                            const Field& u0, double lambda = 1.0);
CoerciveSystem assemble_rhs(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                            std::span<const hreal> m0, std::span<const hreal> u0, double lambda = 1.0);

enum class SpdMethod { cholesky, cg };

struct SpdOptions {
  SpdMethod method = SpdMethod::cholesky;
  double tol = 1e-12;
  int max_iter = 0;  ///< CG cap; 0 selects 20 * size
};

struct SpdResult {
  Field u_hat;  ///< all nodes, zero at the endpoints
  HVec u_h;
  int iterations = 0;
  double residual = 0.0;  ///< ||A u - rhs|| / max(||rhs||, tiny)
};

/// Relative residual of a full-length candidate.
hreal relative_residual(const CoerciveSystem& system, std::span<const hreal> u_full);

/// Largest |v^T (A u - rhs)| over the homogeneous nodal basis, divided by the
/// same scale used by relative_residual.
double galerkin_defect(const CoerciveSystem& system, std::span<const hreal> u_full);
double galerkin_defect(const CoerciveSystem& system, const Field& u_full);

/// Throws FactorizationError on a non-positive pivot and NonconvergenceError
/// when CG stalls.
SpdResult solve_spd(const CoerciveSystem& system, const SpdOptions& options = {});

}  // namespace mfg
