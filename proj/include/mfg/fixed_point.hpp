#pragma once

// Fixed-point map A(m0, u0) = (LCP solution, coercive solve), stage solvers at
// fixed eps, eps-continuation and the a priori monitors.

#include "mfg/discretization.hpp"
#include "mfg/m_solver.hpp"
#include "mfg/model.hpp"
#include "mfg/u_solver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mfg {

struct AprioriReport {
  double E_coupling = 0.0;    ///< int m g(m)
  double E_kinetic = 0.0;     ///< int m |Du|^gamma
  double E_source = 0.0;      ///< int phi |Du|^gamma
  double E_reg = 0.0;         ///< eps int (m^2 + u_hat^2 + (D2k m)^2 + (D2k u_hat)^2)
  double W1gamma_u = 0.0;     ///< (int |u|^gamma + |Du|^gamma)^(1/gamma)
  double sqrt_eps_H2k = 0.0;  ///< sqrt(eps) (|m|^2 + |D2k m|^2 + |u_hat|^2 + |D2k u_hat|^2)^(1/2)
};

enum class StageMethod {
  newton,  ///< semismooth Newton on the coupled complementarity system
  picard,  ///< damped iteration of the map A
};

struct RegularizedSolution {
  Field m;
  Field u_hat;
  HVec m_h, u_h;  ///< extended-precision iterate
  double epsilon = 0.0;
  double lambda = 1.0;
  int iterations = 0;
  bool converged = false;
  StageMethod method = StageMethod::newton;
  std::vector<double> update_history;
  std::vector<double> residual_history;  ///< merit residual (Newton) or fixed-point defect (Picard)
  double max_iterate_norm = 0.0;          ///< largest max-norm of (m, u_hat) seen
  double vi_residual = 0.0;               ///< min probe value of the density VI at the output
  double vi_scale = 1.0;                  ///< max |q| of that VI
  double galerkin_residual = 0.0;         ///< relative residual of the value-function equation
  double fixed_point_residual = 0.0;      ///< ||A(m, u_hat) - (m, u_hat)||_max
  AprioriReport monitors;
  std::string message;
};

struct StageOptions {
  StageMethod method = StageMethod::newton;
  double theta = 0.5;
  double tol = 1e-10;
  int max_iter = 0;  ///< 0 selects 100 (Newton) or 2000 (Picard)
  double lambda = 1.0;
  LcpOptions lcp;
  SpdOptions spd;
  int vi_random_probes = 20;
  std::uint64_t seed = 0;
};

/// Both solvers report through RegularizedSolution::converged; only input
/// errors throw.
std::pair<Field, Field> apply_A(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                const Field& m0, const Field& u0_hat, double lambda = 1.0);
std::pair<HVec, HVec> apply_A(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                              std::span<const hreal> m0, std::span<const hreal> u0_hat, const StageOptions& options);

RegularizedSolution picard_solve(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                 const std::pair<Field, Field>& init, double theta, double tol, int max_iter,
                                 const StageOptions& options = {});

RegularizedSolution newton_solve(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                 const std::pair<Field, Field>& init, double tol, int max_iter,
                                 const StageOptions& options = {});

RegularizedSolution solve_stage(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                const std::pair<HVec, HVec>& init, const StageOptions& options);

struct ContinuationResult {
  MfgProblem hat_problem;
  std::vector<RegularizedSolution> stages;
  Field m;  ///< final-stage density
  Field u;  ///< final-stage u_hat + h
  bool complete = false;
  std::string failure;
};

/// Throws InputError unless the schedule is strictly decreasing inside (0, 1).
void validate_schedule(const std::vector<double>& schedule);

/// Solves each stage warm-started from the previous one. The problem may carry
/// nonzero h; it is hat-transformed internally and u = u_hat + h is returned.
ContinuationResult epsilon_continuation(const MfgProblem& problem, const DiscreteOperators& ops,
                                        const std::vector<double>& schedule, const StageOptions& options = {},
                                        const std::pair<Field, Field>* init = nullptr);

/// Monitors for the original problem at u = u_hat + h.
AprioriReport compute_monitors(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                               const Field& m, const Field& u_hat);

/// Default schedule 1e-1, ..., 1e-6.
std::vector<double> default_schedule();

struct LambdaRow {
  double lambda = 1.0;
  bool converged = false;
  double norm_m = 0.0;     ///< max |m|
  double norm_u = 0.0;     ///< max |u_hat|
  double norm_h2k = 0.0;   ///< (|m|^2 + |D2k m|^2 + |u_hat|^2 + |D2k u_hat|^2)^(1/2)
};

/// Solves w = lambda A[w] for each lambda (non-eps data scaled by lambda) and
/// reports solution norms. Reported, not asserted.
std::vector<LambdaRow> lambda_boundedness(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                          const std::vector<double>& lambdas, const StageOptions& options = {});

}  // namespace mfg
