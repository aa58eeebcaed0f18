#include "mfg/u_solver.hpp"

#include "mfg/errors.hpp"
#include "mfg/regularized.hpp"

#include <cmath>

namespace mfg {

namespace {

auto sqrt_fn = [](hreal x) { return hp::sqrt(x); };

hreal norm2(std::span<const hreal> v) {
  hreal s = 0;
  for (hreal x : v) s += x * x;
  return hp::sqrt(s);
}

hreal rhs_scale(const CoerciveSystem& system) {
  return hp::max(norm2(system.rhs), hreal(1e-300));
}

HVec lift(const CoerciveSystem& system, std::span<const hreal> interior_values) {
  HVec out(static_cast<std::size_t>(system.nodes), hreal(0));
  for (std::size_t a = 0; a < system.interior.size(); ++a) out[system.interior[a]] = interior_values[a];
  return out;
}

SpdResult finish(const CoerciveSystem& system, HVec u_full, int iterations) {
  SpdResult r;
  r.iterations = iterations;
  r.residual = static_cast<double>(relative_residual(system, u_full));
  r.u_hat = to_d(u_full);
  r.u_h = std::move(u_full);
  return r;
}

SpdResult solve_cholesky(const CoerciveSystem& system) {
  const BandCholesky<hreal, decltype(sqrt_fn)> chol(system.A, sqrt_fn);
  return finish(system, lift(system, chol.solve(system.rhs)), 1);
}

SpdResult solve_cg(const CoerciveSystem& system, const SpdOptions& options) {
  const int n = system.A.size();
  const int cap = options.max_iter > 0 ? options.max_iter : 20 * n;
  const hreal tol = options.tol;
  const hreal scale = rhs_scale(system);
  HVec x(static_cast<std::size_t>(n), hreal(0)), r = system.rhs, z(r.size()), p;
  HVec dinv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dinv[i] = hreal(1) / system.A(i, i);
  for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  p = z;
  hreal rz = 0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];
  std::vector<double> history;
  for (int it = 0; it < cap; ++it) {
    const hreal rn = norm2(r) / scale;
    history.push_back(static_cast<double>(rn));
    if (rn <= tol) return finish(system, lift(system, x), it);
    const HVec ap = system.A.multiply(p);
    hreal pap = 0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (!(pap > hreal(0))) throw FactorizationError("conjugate gradients: matrix is not positive definite");
    const hreal alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      z[i] = dinv[i] * r[i];
    }
    hreal rz_new = 0;
    for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const hreal beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NonconvergenceError("conjugate gradients did not reach the tolerance", history);
}

}  // namespace

Field CoerciveSystem::rhs_field() const { return to_d(lift(*this, rhs)); }

HVec CoerciveSystem::apply(std::span<const hreal> u_full) const {
  HVec ui(interior.size());
  for (std::size_t a = 0; a < interior.size(); ++a) ui[a] = u_full[interior[a]];
  return A.multiply(ui);
}

CoerciveSystem assemble_rhs(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                            std::span<const hreal> m0, std::span<const hreal> u0, double lambda) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (!problem.homogeneous()) throw InputError("assemble_rhs requires a hat-transformed problem (h = 0)");
  const int nn = ops.nodes();
  if (static_cast<int>(m0.size()) != nn || static_cast<int>(u0.size()) != nn)
    throw InputError("assemble_rhs: field length mismatch");
  for (int i = 0; i < nn; ++i)
    if (!(m0[i] >= hreal(0))) throw InputError("m0 must be nonnegative (node " + std::to_string(i) + ")");

  CoerciveSystem s;
  s.nodes = nn;
  s.epsilon = epsilon;
  for (int i = 1; i < nn - 1; ++i) s.interior.push_back(i);

  BandMatrix<hreal> full = ops.stiffness_u;
  for (int i = 0; i < nn; ++i) full.add(i, i, ops.quad_h[i]);
  s.A = full.principal(s.interior).scaled(hreal(epsilon));

  const HVec flux = transport_flux(problem, ops, m0, u0);
  const HVec gt = weighted_gradient_transpose(ops, flux);
  const HVec xi = xi_load(problem, ops, hreal(epsilon));
  const hreal lam = lambda;
  for (int i : s.interior) {
    const hreal q = ops.quad_h[i];
    // M div(flux) = -G^T Q flux on interior nodes
    s.rhs.push_back(lam * (-q * m0[i] - gt[i] + q * hreal(problem.phi[i])) - xi[i]);
  }
  return s;
}

CoerciveSystem assemble_rhs(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon, const Field& m0,
                            const Field& u0, double lambda) {
  check_length(ops, m0, "m0");
  check_length(ops, u0, "u0");
  return assemble_rhs(problem, ops, epsilon, to_h(m0), to_h(u0), lambda);
}

hreal relative_residual(const CoerciveSystem& system, std::span<const hreal> u_full) {
  HVec r = system.apply(u_full);
  for (std::size_t a = 0; a < r.size(); ++a) r[a] -= system.rhs[a];
  return norm2(r) / rhs_scale(system);
}

double galerkin_defect(const CoerciveSystem& system, std::span<const hreal> u_full) {
  const HVec au = system.apply(u_full);
  hreal worst = 0;
  for (std::size_t a = 0; a < au.size(); ++a) worst = hp::max(worst, hp::abs(au[a] - system.rhs[a]));
  return static_cast<double>(worst / rhs_scale(system));
}

double galerkin_defect(const CoerciveSystem& system, const Field& u_full) {
  if (u_full.size() != system.nodes) throw InputError("galerkin_defect: field has the wrong length");
  return galerkin_defect(system, to_h(u_full));
}

SpdResult solve_spd(const CoerciveSystem& system, const SpdOptions& options) {
  if (!(options.tol > 0.0)) throw InputError("solve_spd: tol must be positive");
  if (system.interior.empty()) return finish(system, HVec(static_cast<std::size_t>(system.nodes), hreal(0)), 0);
  if (options.method == SpdMethod::cg) return solve_cg(system, options);
  SpdResult r = solve_cholesky(system);
  if (!(r.residual <= options.tol))
    throw NonconvergenceError("banded Cholesky residual " + std::to_string(r.residual) + " above tolerance",
                              {r.residual});
  return r;
}

}  // namespace mfg
