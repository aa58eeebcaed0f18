#include "mfg/fixed_point.hpp"

#include "mfg/errors.hpp"
#include "mfg/log.hpp"
#include "mfg/regularized.hpp"

#include <cmath>
#include <limits>
#include <tuple>

namespace mfg {

namespace {

constexpr int kMaxDensityLinearizations = 50;

auto abs_fn = [](hreal x) { return hp::abs(x); };

hreal max_abs_diff(std::span<const hreal> a, std::span<const hreal> b) {
  hreal r = 0;
  for (std::size_t i = 0; i < a.size(); ++i) r = hp::max(r, hp::abs(a[i] - b[i]));
  return r;
}

hreal half_sq(std::span<const hreal> v) {
  hreal s = 0;
  for (hreal x : v) s += x * x;
  return s / 2;
}

void check_init(const DiscreteOperators& ops, const std::pair<Field, Field>& init) {
  check_length(ops, init.first, "m_init");
  check_length(ops, init.second, "u_init");
  for (Eigen::Index i = 0; i < init.first.size(); ++i)
    if (init.first[i] < 0.0) throw InputError("initial density must be nonnegative");
}

HVec clamp_nonnegative(HVec m) {
  for (hreal& v : m) v = hp::max(v, hreal(0));
  return m;
}

// Residual checks shared by both stage solvers.
void finalize(const MfgProblem& hat, const DiscreteOperators& ops, const StageOptions& options,
              RegularizedSolution& sol) {
  sol.m_h = clamp_nonnegative(std::move(sol.m_h));
  sol.u_h.front() = 0;
  sol.u_h.back() = 0;
  sol.m = to_d(sol.m_h);
  sol.u_hat = to_d(sol.u_h);

  const ObstacleQp qp = assemble_obstacle_qp(hat, ops, sol.epsilon, sol.m_h, sol.u_h, sol.lambda);
  const ViReport vi = check_variational_inequality(
      qp, sol.m_h, vi_probe_set(sol.m, ops, options.vi_random_probes, options.seed));
  sol.vi_residual = vi.min_probe;
  sol.vi_scale = vi.scale;

  const CoerciveSystem cs = assemble_rhs(hat, ops, sol.epsilon, sol.m_h, sol.u_h, sol.lambda);
  sol.galerkin_residual = static_cast<double>(relative_residual(cs, sol.u_h));

  try {
    const auto [ma, ua] = apply_A(hat, ops, sol.epsilon, sol.m_h, sol.u_h, options);
    sol.fixed_point_residual = static_cast<double>(hp::max(max_abs_diff(ma, sol.m_h), max_abs_diff(ua, sol.u_h)));
  } catch (const std::exception& e) {
    sol.fixed_point_residual = std::numeric_limits<double>::infinity();
    spdlog::warn("fixed-point residual unavailable: {}", e.what());
  }
  sol.monitors = compute_monitors(hat, ops, sol.epsilon, sol.m, sol.u_hat);
}

// Density for fixed u: m >= 0, R1(m, u) >= 0, m R1 = 0. R1 is strongly
// monotone in m, so this has a unique solution; g is linearized at the current
// iterate and each linearization is an SPD obstacle problem (one solve for
// linear couplings).
HVec density_for(const RegularizedSystem& sys, std::span<const hreal> u, HVec m, const StageOptions& options) {
  const DiscreteOperators& ops = sys.ops();
  const MfgProblem& p = sys.problem();
  const int nn = ops.nodes();
  const hreal lambda = sys.lambda();
  const hreal tol = hreal(options.tol) * hreal(1e-2);
  const HVec du = ops.grad(u);
  HVec base(static_cast<std::size_t>(nn));
  for (int i = 0; i < nn; ++i) base[i] = -u[i] - p.H.value(i, du[i]) - hreal(p.V[i]);
  m = clamp_nonnegative(std::move(m));
  LcpOptions lo = options.lcp;
  lo.method = LcpMethod::active_set;
  for (int it = 0; it < kMaxDensityLinearizations; ++it) {
    ObstacleQp qp;
    qp.A = sys.a_m();
    qp.epsilon = static_cast<double>(sys.epsilon());
    qp.q.resize(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) {
      const hreal q = ops.quad_h[i];
      const hreal gp = p.g.derivative(m[i]);
      qp.A.add(i, i, lambda * q * gp);
      qp.q[i] = lambda * q * (base[i] + p.g.value(m[i]) - gp * m[i]);
    }
    // Complementarity is measured in units of q; far from the solution |q| is
    // large and an absolute tolerance would sit below the rounding floor.
    lo.tol = static_cast<double>(tol * hp::max(hreal(1), max_abs(qp.q)));
    HVec next = solve_lcp(qp, m, lo).m_h;
    const bool linear = p.g.kind == CouplingSpec::Kind::power && p.g.alpha == 1.0;
    m.swap(next);
    if (linear) break;
    const HVec r = sys.r1(m, u);
    hreal res = 0;
    for (int i = 0; i < nn; ++i) res = hp::max(res, hp::abs(hp::min(m[i], r[i] / ops.quad_h[i])));
    if (res <= tol * hp::max(hreal(1), max_abs(m))) break;
  }
  return m;
}

RegularizedSolution newton_core(const MfgProblem& hat, const DiscreteOperators& ops, double epsilon, HVec m, HVec u,
                                const StageOptions& options) {
  const int max_iter = options.max_iter > 0 ? options.max_iter : 100;
  const RegularizedSystem sys(hat, ops, epsilon, options.lambda);
  const int nn = ops.nodes();

  RegularizedSolution sol;
  sol.epsilon = epsilon;
  sol.lambda = options.lambda;
  sol.method = StageMethod::newton;

  // Newton on u with m eliminated through the density problem. Working on the
  // interleaved system directly lets a tiny step flip many min rows through
  // the stiff K_m coupling; here the active set always comes from an exact
  // density solve.
  u.front() = 0;
  u.back() = 0;
  m = density_for(sys, u, std::move(m), options);
  HVec phi = sys.merit_residual(m, u);
  hreal f = half_sq(phi);
  for (int it = 0; it < max_iter; ++it) {
    sol.residual_history.push_back(static_cast<double>(max_abs(phi)));
    HVec d;
    try {
      const BandLU<hreal, decltype(abs_fn)> lu(sys.jacobian(m, u), abs_fn);
      HVec rhs(phi.size());
      for (std::size_t i = 0; i < phi.size(); ++i) rhs[i] = -phi[i];
      d = lu.solve(rhs);
    } catch (const FactorizationError& e) {
      sol.message = std::string("singular Newton system: ") + e.what();
      break;
    }

    hreal alpha = 1;
    HVec mt(m.size()), ut(u.size()), phit;
    hreal ft = 0;
    bool accepted = false;
    while (alpha > hreal(1e-12)) {
      for (int i = 0; i < nn; ++i) {
        mt[i] = m[i] + alpha * d[2 * i];
        ut[i] = u[i] + alpha * d[2 * i + 1];
      }
      mt = density_for(sys, ut, std::move(mt), options);
      phit = sys.merit_residual(mt, ut);
      ft = half_sq(phit);
      if (ft <= (1 - hreal(2e-4) * alpha) * f || f == hreal(0)) {
        accepted = true;
        break;
      }
      alpha /= 2;
    }
    hreal znorm = 1;
    for (int i = 0; i < nn; ++i) znorm = hp::max(znorm, hp::max(hp::abs(m[i]), hp::abs(u[i])));
    if (!accepted) {
      // At the rounding floor of the order-8k operator the merit stops
      // decreasing; a full step below tolerance means we are already there.
      if (max_abs(d) <= hreal(options.tol) * znorm && sol.iterations > 0) {
        sol.converged = true;
      } else {
        sol.message = "line search stalled";
      }
      break;
    }

    znorm = 1;
    for (int i = 0; i < nn; ++i) znorm = hp::max(znorm, hp::max(hp::abs(mt[i]), hp::abs(ut[i])));
    hreal update = 0;
    for (int i = 0; i < nn; ++i) update = hp::max(update, hp::max(hp::abs(mt[i] - m[i]), hp::abs(ut[i] - u[i])));
    m.swap(mt);
    u.swap(ut);
    phi.swap(phit);
    f = ft;
    sol.iterations = it + 1;
    sol.update_history.push_back(static_cast<double>(update));
    sol.max_iterate_norm = std::max(sol.max_iterate_norm, static_cast<double>(znorm));
    spdlog::debug("newton eps={:.3g} it={} update={:.3e} merit={:.3e} step={:.3g}", epsilon, it + 1,
                  static_cast<double>(update), static_cast<double>(max_abs(phi)), static_cast<double>(alpha));
    if (alpha == hreal(1) && update <= hreal(options.tol) * znorm) {
      sol.converged = true;
      break;
    }
  }
  sol.residual_history.push_back(static_cast<double>(max_abs(phi)));
  if (!sol.converged && sol.message.empty()) sol.message = "iteration cap reached";
  sol.m_h = std::move(m);
  sol.u_h = std::move(u);
  return sol;
}

RegularizedSolution picard_core(const MfgProblem& hat, const DiscreteOperators& ops, double epsilon, HVec m, HVec u,
                                const StageOptions& options) {
  const int max_iter = options.max_iter > 0 ? options.max_iter : 2000;
  const hreal theta = options.theta;
  RegularizedSolution sol;
  sol.epsilon = epsilon;
  sol.lambda = options.lambda;
  sol.method = StageMethod::picard;
  m = clamp_nonnegative(std::move(m));
  for (int it = 0; it < max_iter; ++it) {
    HVec ma, ua;
    try {
      std::tie(ma, ua) = apply_A(hat, ops, epsilon, m, u, options);
    } catch (const NonconvergenceError& e) {
      sol.message = std::string("subsolver failed: ") + e.what();
      break;
    } catch (const FactorizationError& e) {
      sol.message = std::string("subsolver failed: ") + e.what();
      break;
    }
    const hreal defect = hp::max(max_abs_diff(ma, m), max_abs_diff(ua, u));
    hreal znorm = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = (1 - theta) * m[i] + theta * ma[i];
      u[i] = (1 - theta) * u[i] + theta * ua[i];
      znorm = hp::max(znorm, hp::max(hp::abs(m[i]), hp::abs(u[i])));
    }
    const hreal update = theta * defect;
    sol.iterations = it + 1;
    sol.update_history.push_back(static_cast<double>(update));
    sol.residual_history.push_back(static_cast<double>(defect));
    sol.max_iterate_norm = std::max(sol.max_iterate_norm, static_cast<double>(znorm));
    spdlog::debug("picard eps={:.3g} it={} update={:.3e}", epsilon, it + 1, static_cast<double>(update));
    if (!hp::isfinite(update) || update > hreal(1e12)) {
      sol.message = "iterates diverged";
      break;
    }
    if (update <= hreal(options.tol)) {
      sol.converged = true;
      break;
    }
  }
  if (!sol.converged && sol.message.empty()) sol.message = "iteration cap reached";
  sol.m_h = std::move(m);
  sol.u_h = std::move(u);
  return sol;
}

hreal h2k_norm_sq(const DiscreteOperators& ops, std::span<const hreal> m, std::span<const hreal> u) {
  return ops.inner(m, m) + ops.natural_energy(m) + ops.inner(u, u) + ops.clamped_energy(u);
}

}  // namespace

std::pair<HVec, HVec> apply_A(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                              std::span<const hreal> m0, std::span<const hreal> u0_hat, const StageOptions& options) {
  const ObstacleQp qp = assemble_obstacle_qp(hat_problem, ops, epsilon, m0, u0_hat, options.lambda);
  LcpResult lcp = solve_lcp(qp, m0, options.lcp);
  const CoerciveSystem cs = assemble_rhs(hat_problem, ops, epsilon, m0, u0_hat, options.lambda);
  SpdResult spd = solve_spd(cs, options.spd);
  return {std::move(lcp.m_h), std::move(spd.u_h)};
}

std::pair<Field, Field> apply_A(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                const Field& m0, const Field& u0_hat, double lambda) {
  check_init(ops, {m0, u0_hat});
  StageOptions options;
  options.lambda = lambda;
  const auto [m, u] = apply_A(hat_problem, ops, epsilon, to_h(m0), to_h(u0_hat), options);
  return {to_d(m), to_d(u)};
}

RegularizedSolution solve_stage(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                const std::pair<HVec, HVec>& init, const StageOptions& options) {
  configure_logging();
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (!hat_problem.homogeneous()) throw InputError("stage solvers require a hat-transformed problem (h = 0)");
  if (!(options.theta > 0.0 && options.theta <= 1.0)) throw InputError("theta must lie in (0, 1]");
  if (!(options.tol > 0.0)) throw InputError("tol must be positive");
  RegularizedSolution sol = options.method == StageMethod::newton
                                ? newton_core(hat_problem, ops, epsilon, init.first, init.second, options)
                                : picard_core(hat_problem, ops, epsilon, init.first, init.second, options);
  if (sol.converged) finalize(hat_problem, ops, options, sol);
  else {
    sol.m = to_d(sol.m_h);
    sol.u_hat = to_d(sol.u_h);
  }
  return sol;
}

RegularizedSolution picard_solve(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                 const std::pair<Field, Field>& init, double theta, double tol, int max_iter,
                                 const StageOptions& options) {
  check_init(ops, init);
  StageOptions o = options;
  o.method = StageMethod::picard;
  o.theta = theta;
  o.tol = tol;
  o.max_iter = max_iter;
  return solve_stage(hat_problem, ops, epsilon, {to_h(init.first), to_h(init.second)}, o);
}

RegularizedSolution newton_solve(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                 const std::pair<Field, Field>& init, double tol, int max_iter,
                                 const StageOptions& options) {
  check_length(ops, init.first, "m_init");
  check_length(ops, init.second, "u_init");
  StageOptions o = options;
  o.method = StageMethod::newton;
  o.tol = tol;
  o.max_iter = max_iter;
  return solve_stage(hat_problem, ops, epsilon, {to_h(init.first), to_h(init.second)}, o);
}

std::vector<double> default_schedule() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

void validate_schedule(const std::vector<double>& schedule) {
  if (schedule.empty()) throw InputError("eps_schedule must not be empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0 && schedule[i] < 1.0))
      throw InputError("eps_schedule entries must lie in (0, 1)");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw InputError("eps_schedule must be strictly decreasing");
  }
}

ContinuationResult epsilon_continuation(const MfgProblem& problem, const DiscreteOperators& ops,
                                        const std::vector<double>& schedule, const StageOptions& options,
                                        const std::pair<Field, Field>* init) {
  configure_logging();
  validate_schedule(schedule);
  ContinuationResult out;
  out.hat_problem = hat_transform(problem, ops);
  const int nn = ops.nodes();
  std::pair<HVec, HVec> state{HVec(static_cast<std::size_t>(nn), hreal(0)), HVec(static_cast<std::size_t>(nn), hreal(0))};
  if (init != nullptr) {
    check_init(ops, *init);
    state = {to_h(init->first), to_h(init->second)};
  }
  for (double eps : schedule) {
    RegularizedSolution sol = solve_stage(out.hat_problem, ops, eps, state, options);
    spdlog::info("stage eps={:.3g}: {} after {} iterations{}", eps, sol.converged ? "converged" : "FAILED",
                 sol.iterations, sol.message.empty() ? "" : " (" + sol.message + ")");
    if (!sol.converged) {
      out.failure = "stage eps=" + std::to_string(eps) + ": " + sol.message;
      out.stages.push_back(std::move(sol));
      return out;
    }
    sol.monitors = compute_monitors(problem, ops, eps, sol.m, sol.u_hat);
    state = {sol.m_h, sol.u_h};
    out.stages.push_back(std::move(sol));
  }
  out.complete = true;
  out.m = out.stages.back().m;
  out.u = to_d(out.stages.back().u_h) + problem.h;
  return out;
}

AprioriReport compute_monitors(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                               const Field& m, const Field& u_hat) {
  check_length(ops, m, "m");
  check_length(ops, u_hat, "u_hat");
  const int nn = ops.nodes();
  const HVec mh = clamp_nonnegative(to_h(m));
  const HVec uh = to_h(u_hat);
  HVec u(uh);
  for (int i = 0; i < nn; ++i) u[i] += hreal(problem.h[i]);
  const HVec du = ops.grad(u);
  const hreal gamma = problem.H.gamma;

  HVec coupling(mh.size()), kinetic(mh.size()), source(mh.size()), w1(mh.size());
  for (int i = 0; i < nn; ++i) {
    const hreal dg = hp::pow(hp::abs(du[i]), gamma);
    coupling[i] = mh[i] * problem.g.value(mh[i]);
    kinetic[i] = mh[i] * dg;
    source[i] = hreal(problem.phi[i]) * dg;
    w1[i] = hp::pow(hp::abs(u[i]), gamma) + dg;
  }
  const hreal eps = epsilon;
  const hreal h2k = h2k_norm_sq(ops, mh, uh);

  AprioriReport r;
  r.E_coupling = static_cast<double>(ops.integrate(coupling));
  r.E_kinetic = static_cast<double>(ops.integrate(kinetic));
  r.E_source = static_cast<double>(ops.integrate(source));
  r.E_reg = static_cast<double>(eps * h2k);
  r.W1gamma_u = static_cast<double>(hp::pow(ops.integrate(w1), 1 / gamma));
  r.sqrt_eps_H2k = static_cast<double>(hp::sqrt(eps * h2k));
  return r;
}

std::vector<LambdaRow> lambda_boundedness(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                          const std::vector<double>& lambdas, const StageOptions& options) {
  std::vector<LambdaRow> rows;
  const int nn = ops.nodes();
  std::pair<HVec, HVec> state{HVec(static_cast<std::size_t>(nn), hreal(0)), HVec(static_cast<std::size_t>(nn), hreal(0))};
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
    StageOptions o = options;
    o.lambda = lambda;
    const RegularizedSolution sol = solve_stage(hat_problem, ops, epsilon, state, o);
    LambdaRow row;
    row.lambda = lambda;
    row.converged = sol.converged;
    row.norm_m = static_cast<double>(max_abs(sol.m_h));
    row.norm_u = static_cast<double>(max_abs(sol.u_h));
    row.norm_h2k = static_cast<double>(hp::sqrt(h2k_norm_sq(ops, sol.m_h, sol.u_h)));
    rows.push_back(row);
    if (sol.converged) state = {sol.m_h, sol.u_h};
  }
  return rows;
}

}  // namespace mfg
