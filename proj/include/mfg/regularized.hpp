#pragma once

// Extended-precision kernels of the regularized system for a hat-transformed
// problem (h = 0). With c = -u - H(Du) + g(m) - V and the flux m DpH(Du):
//
//   R1 = eps (M + K_m) m + lambda M c                     (complementarity with m >= 0)
//   R2 = eps (M + K_u) u + lambda (M m + G^T Q flux - M phi) + eps L xi   (interior rows)
//
// where L xi = M xi + D_cl^T Q D_data xi is the weak form of xi + Delta^{2k} xi.
// lambda = 1 is the actual problem; lambda < 1 is the homotopy used to probe
// boundedness of the fixed-point family.

#include "mfg/banded.hpp"
#include "mfg/discretization.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// c = -u - H(Du) + g(max(m, 0)) - V, nodewise.
HVec coupling_term(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> m,
                   std::span<const hreal> u);

/// m DpH(Du), nodewise.
HVec transport_flux(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> m,
                    std::span<const hreal> u);

/// eps (M xi + D_cl^T Q D_data xi).
HVec xi_load(const MfgProblem& problem, const DiscreteOperators& ops, hreal eps);

/// G^T Q f.
HVec weighted_gradient_transpose(const DiscreteOperators& ops, std::span<const hreal> f);

class RegularizedSystem {
 public:
  RegularizedSystem(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                    double lambda = 1.0);

  int nodes() const { return ops_.nodes(); }
  hreal epsilon() const { return eps_; }
  hreal lambda() const { return lambda_; }
  const BandMatrix<hreal>& a_m() const { return a_m_; }
  const BandMatrix<hreal>& a_u() const { return a_u_; }
  const HVec& xi_term() const { return xi_; }
  const MfgProblem& problem() const { return problem_; }
  const DiscreteOperators& ops() const { return ops_; }

  HVec r1(std::span<const hreal> m, std::span<const hreal> u) const;
  /// Full length; boundary entries hold u itself.
  HVec r2(std::span<const hreal> m, std::span<const hreal> u) const;

  /// Interleaved semismooth residual: row 2i = min(m_i, R1_i / q_i),
  /// row 2i+1 = R2_i / q_i (interior) or u_i (boundary).
  HVec merit_residual(std::span<const hreal> m, std::span<const hreal> u) const;

  /// Generalized Jacobian of merit_residual, same interleaving.
  BandMatrix<hreal> jacobian(std::span<const hreal> m, std::span<const hreal> u) const;

  /// Half bandwidth of the interleaved Jacobian.
  int interleaved_half_band() const { return 2 * ops_.half_band() + 1; }

 private:
  const MfgProblem& problem_;
  const DiscreteOperators& ops_;
  hreal eps_, lambda_;
  BandMatrix<hreal> a_m_, a_u_;
  HVec xi_;
  HVec scale_m_, scale_u_;
};

}  // namespace mfg
