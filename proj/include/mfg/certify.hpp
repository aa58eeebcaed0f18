#pragma once

// Monotone functionals F and F_eps, the weak-solution inequality
//   <F[eta, v], (eta, v) - (m, u)> >= 0,
// numeric checks of the structural hypotheses, and the Minty-gap table.

#include "mfg/discretization.hpp"
#include "mfg/fixed_point.hpp"
#include "mfg/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

/// <F[eta, v], (w1, w2)>, plus the eps terms when eps is given. Fields are
/// extended precision; eta must be nonnegative (InputError otherwise).
hreal eval_F(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
             std::span<const hreal> v, std::span<const hreal> w1, std::span<const hreal> w2,
             std::optional<double> epsilon = std::nullopt);
double eval_F(const MfgProblem& problem, const DiscreteOperators& ops, const Field& eta, const Field& v,
              const Field& w1, const Field& w2, std::optional<double> epsilon = std::nullopt);

/// The eps terms alone: eps <eta, w1> + eps <D_nat eta, D_nat w1> + eps <v + xi, w2>
/// + eps <D2k(v + xi), D_cl w2>, with D2k(v + xi) = D_cl(v - h) + D_data(xi + h).
hreal eps_terms(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
                std::span<const hreal> v, std::span<const hreal> w1, std::span<const hreal> w2, hreal epsilon);

/// H^{2k}-type energy of a probe: |eta|^2 + |D_nat eta|^2 + |v - h|^2 + |D_cl(v - h)|^2.
hreal probe_energy(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
                   std::span<const hreal> v);

struct MonotonicityResult {
  int pairs = 0;
  std::uint64_t seed = 0;
  double min_value = 0.0;           ///< min <F(x1) - F(x2), x1 - x2>
  double min_scaled_value = 0.0;    ///< same, each divided by its evaluation scale
  double max_identity_defect = 0.0; ///< vs the coupling/convexity decomposition, relative
  std::optional<double> epsilon;
  double min_bound_margin = 0.0;    ///< eps only: min of (value - eps (|d eta|^2 + |d v|^2)) / scale
  double tolerance = 1e-10;
  bool pass = false;
};

/// Random admissible pairs: eta_i nonnegative trigonometric squares,
/// v_i = h + boundary bumps so that v_1 - v_2 vanishes at the endpoints.
MonotonicityResult check_monotonicity(const MfgProblem& problem, const DiscreteOperators& ops, int n_pairs,
                                      std::uint64_t seed, std::optional<double> epsilon = std::nullopt);

struct D2Result {
  int probes = 0;
  std::uint64_t seed = 0;
  double min_value = 0.0;     ///< min over probes of <F[eta, v], (eta, v) - (m, u)>
  double probe_scale = 1.0;   ///< max(1, max_probe max|eta|)
  double tolerance = 1e-3;    ///< base tolerance; the check uses tolerance * probe_scale
  bool pass = false;
};

/// candidate.second is the full value function (equal to h at the endpoints).
D2Result check_D2(const MfgProblem& problem, const DiscreteOperators& ops, const std::pair<HVec, HVec>& candidate,
                  int n_probes, std::uint64_t seed, double tol_d2 = 1e-3);
D2Result check_D2(const MfgProblem& problem, const DiscreteOperators& ops, const std::pair<Field, Field>& candidate,
                  int n_probes, std::uint64_t seed, double tol_d2 = 1e-3);

struct AssumptionResult {
  std::string id;
  std::string statement;
  double constant = 0.0;  ///< fitted C (or C_delta)
  double margin = 0.0;    ///< worst slack of the inequality with the fitted constant
  bool pass = false;
  std::string note;
};

/// Log-spaced |p| in [1e-3, 1e3] with both signs, plus 0.
std::vector<double> default_p_samples();
/// Log-spaced amplitudes in [1e-6, 1e8].
std::vector<double> default_m_samples();

std::vector<AssumptionResult> validate_assumptions(const MfgProblem& problem, const DiscreteOperators& ops,
                                                   const std::vector<double>& p_samples,
                                                   const std::vector<double>& m_samples);

struct MintyRow {
  double epsilon = 0.0;
  double c_eps_bound = 0.0;  ///< max over probes of |(F_eps - F)[probe](probe - x_eps)|
  double d2_residual = 0.0;  ///< min over probes of <F[probe], probe - x_eps>
  double min_corrected = 0.0;  ///< min over probes of <F_eps[probe], probe - x_eps>
  double probe_scale = 1.0;  ///< max probe energy
  bool pass = false;          ///< d2_residual >= -c_eps_bound - tol
};

struct MintyReport {
  std::vector<MintyRow> rows;
  bool decreasing = false;  ///< c_eps_bound[j+1] <= 1.1 c_eps_bound[j]
  double tolerance = 1e-8;
  int probes = 0;
  std::uint64_t seed = 0;
};

/// stages must be ordered by decreasing eps and carry extended-precision
/// fields for the hat-transformed problem; problem is the original problem.
MintyReport minty_gap_report(const std::vector<RegularizedSolution>& stages, const MfgProblem& problem,
                             const DiscreteOperators& ops, int n_probes, std::uint64_t seed);

struct CertificationReport {
  std::vector<AssumptionResult> assumptions;
  std::optional<MonotonicityResult> monotonicity;
  std::optional<MonotonicityResult> monotonicity_eps;
  std::optional<D2Result> d2;
  std::optional<MintyReport> minty;
  std::uint64_t seed = 0;

  bool pass() const;
};

nlohmann::ordered_json to_json(const CertificationReport& report);

}  // namespace mfg
