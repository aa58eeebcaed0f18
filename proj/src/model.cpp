#include "mfg/model.hpp"

#include <cmath>
#include <sstream>

namespace mfg {

namespace {

void require_length(const Field& f, int nodes, const char* name) {
  if (f.size() != nodes) {
    throw InputError(std::string("field '") + name + "' has length " + std::to_string(f.size()) + ", expected " +
                     std::to_string(nodes));
  }
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (!std::isfinite(f[i])) throw InputError(std::string("field '") + name + "' has a non-finite entry");
}

void require_node(const HamiltonianSpec& spec, int i) {
  if (i < 0 || i >= spec.a.size()) throw InputError("node index " + std::to_string(i) + " out of range");
}

}  // namespace

void HamiltonianSpec::validate(int nodes) const {
  require_length(a, nodes, "hamiltonian.a");
  require_length(b, nodes, "hamiltonian.b");
  require_length(p_shift, nodes, "hamiltonian.p_shift");
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw InputError("hamiltonian.gamma must be > 1");
  for (int i = 0; i < nodes; ++i)
    if (!(a[i] > 0.0)) throw InputError("hamiltonian.a must be strictly positive (node " + std::to_string(i) + ")");
}

std::string CouplingSpec::describe() const {
  std::ostringstream s;
  if (kind == Kind::power) s << "power(alpha=" << alpha << ")";
  else s << "log(floor=" << floor << ")";
  return s.str();
}

void CouplingSpec::validate() const {
  if (kind == Kind::power && !(alpha > 0.0)) throw InputError("coupling.alpha must be > 0");
  if (kind == Kind::log && !(floor > 0.0)) throw InputError("coupling.floor must be > 0");
}

bool MfgProblem::homogeneous() const {
  for (Eigen::Index i = 0; i < h.size(); ++i)
    if (h[i] != 0.0) return false;
  return true;
}

double eval_hamiltonian(const HamiltonianSpec& spec, int node_index, double p) {
  require_node(spec, node_index);
  if (!std::isfinite(p)) throw InputError("eval_hamiltonian: p must be finite");
  return spec.value(node_index, p);
}

double eval_dp_hamiltonian(const HamiltonianSpec& spec, int node_index, double p) {
  require_node(spec, node_index);
  if (!std::isfinite(p)) throw InputError("eval_dp_hamiltonian: p must be finite");
  return spec.dp(node_index, p);
}

double eval_coupling(const CouplingSpec& g, double m) {
  if (!(m >= 0.0)) throw InputError("eval_coupling: density must be nonnegative");
  return g.value(m);
}

MfgProblem make_problem(GridInterval grid, HamiltonianSpec H, CouplingSpec g, Field V, Field phi, Field h, Field xi,
                        const DiscreteOperators& ops, double normalization_tolerance) {
  const int nodes = grid.nodes();
  if (ops.nodes() != nodes) throw InputError("operators were built for a different grid");
  if (H.p_shift.size() == 0) H.p_shift = Field::Zero(nodes);
  H.validate(nodes);
  g.validate();
  require_length(V, nodes, "V");
  require_length(phi, nodes, "phi");
  require_length(h, nodes, "h");
  if (xi.size() == 0) xi = -h;
  require_length(xi, nodes, "xi");
  for (int i = 0; i < nodes; ++i)
    if (phi[i] < 0.0) throw InputError("phi must be nonnegative (node " + std::to_string(i) + ")");

  MfgProblem p;
  p.grid = grid;
  p.H = std::move(H);
  p.g = g;
  p.V = std::move(V);
  p.phi = std::move(phi);
  p.h = std::move(h);
  p.xi = std::move(xi);
  p.normalization_tolerance = normalization_tolerance;
  p.phi_mass = integrate(ops, p.phi);
  if (std::abs(p.phi_mass - 1.0) > normalization_tolerance) {
    std::ostringstream s;
    s.precision(17);
    s << "phi integrates to " << p.phi_mass << " instead of 1";
    p.warnings.push_back(s.str());
  }
  return p;
}

MfgProblem hat_transform(const MfgProblem& problem, const DiscreteOperators& ops) {
  MfgProblem out = problem;
  const HVec dh = ops.grad(to_h(problem.h));
  for (int i = 0; i < problem.nodes(); ++i)
    out.H.p_shift[i] = static_cast<double>(hreal(problem.H.p_shift[i]) + dh[i]);
  out.V = problem.V + problem.h;
  out.xi = problem.xi + problem.h;
  out.h = Field::Zero(problem.nodes());
  return out;
}

ManufacturedProblem manufactured_problem(const Field& m_star, const Field& u_star, const HamiltonianSpec& H,
                                         const CouplingSpec& g, const GridInterval& grid,
                                         const DiscreteOperators& ops) {
  const int nodes = grid.nodes();
  require_length(m_star, nodes, "m_star");
  require_length(u_star, nodes, "u_star");
  for (int i = 0; i < nodes; ++i)
    if (m_star[i] < 0.0) throw InputError("m_star must be nonnegative");
  HamiltonianSpec hs = H;
  if (hs.p_shift.size() == 0) hs.p_shift = Field::Zero(nodes);
  hs.validate(nodes);
  g.validate();

  const HVec m = to_h(m_star);
  const HVec u = to_h(u_star);
  const HVec du = ops.grad(u);
  HVec flux(static_cast<std::size_t>(nodes));
  Field V(nodes), phi(nodes);
  for (int i = 0; i < nodes; ++i) {
    V[i] = static_cast<double>(-u[i] - hs.value(i, du[i]) + g.value(m[i]));
    flux[i] = m[i] * hs.dp(i, du[i]);
  }
  const HVec dv = ops.div(flux);
  for (int i = 0; i < nodes; ++i) {
    phi[i] = static_cast<double>(m[i] - dv[i]);
    if (phi[i] < 0.0)
      throw InputError("manufactured phi is negative at node " + std::to_string(i) + "; choose a milder u_star");
  }

  ManufacturedProblem mp;
  mp.problem = make_problem(grid, hs, g, V, phi, u_star, Field(), ops);
  mp.m_exact = m_star;
  mp.u_exact = u_star;
  return mp;
}

std::pair<Field, Field> sine_manufactured_pair(const DiscreteOperators& ops) {
  const int nodes = ops.nodes();
  const hreal pi = hp::pi();
  HVec m(static_cast<std::size_t>(nodes));
  Field u(nodes);
  for (int i = 0; i < nodes; ++i) {
    const hreal t = hreal(i) / hreal(ops.grid.n);
    const hreal s = hp::sin(pi * t);
    m[i] = 1 + hreal(0.2) * s * s;
    u[i] = static_cast<double>(hreal(0.1) * s);
  }
  const hreal mass = ops.integrate(m);
  for (auto& v : m) v /= mass;
  return {to_d(m), u};
}

std::pair<Field, Field> equation_residuals(const MfgProblem& problem, const DiscreteOperators& ops, const Field& m,
                                           const Field& u) {
  check_length(ops, m, "m");
  check_length(ops, u, "u");
  const int nodes = ops.nodes();
  const HVec mh = to_h(m);
  const HVec uh = to_h(u);
  const HVec du = ops.grad(uh);
  HVec flux(static_cast<std::size_t>(nodes));
  Field r1(nodes), r2(nodes);
  for (int i = 0; i < nodes; ++i) {
    const hreal mi = hp::max(mh[i], hreal(0));
    r1[i] = static_cast<double>(-uh[i] - problem.H.value(i, du[i]) + problem.g.value(mi) - hreal(problem.V[i]));
    flux[i] = mh[i] * problem.H.dp(i, du[i]);
  }
  const HVec dv = ops.div(flux);
  for (int i = 0; i < nodes; ++i) r2[i] = static_cast<double>(mh[i] - dv[i] - hreal(problem.phi[i]));
  return {r1, r2};
}

}  // namespace mfg
