#include "mfg/m_solver.hpp"

#include "mfg/errors.hpp"
#include "mfg/probes.hpp"
#include "mfg/regularized.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

auto sqrt_fn = [](hreal x) { return hp::sqrt(x); };

void require_nonnegative(std::span<const hreal> m, const char* what) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(m[i] >= hreal(0)))
      throw InputError(std::string(what) + " must be nonnegative (node " + std::to_string(i) + ")");
  }
}

// Solves A_FF y_F = -q_F with all other entries zero.
HVec solve_free(const ObstacleQp& qp, const std::vector<int>& free) {
  HVec y(static_cast<std::size_t>(qp.size()), hreal(0));
  if (free.empty()) return y;
  const BandMatrix<hreal> sub = qp.A.principal(free);
  const BandCholesky<hreal, decltype(sqrt_fn)> chol(sub, sqrt_fn);
  HVec rhs(free.size());
  for (std::size_t a = 0; a < free.size(); ++a) rhs[a] = -qp.q[free[a]];
  const HVec sol = chol.solve(rhs);
  for (std::size_t a = 0; a < free.size(); ++a) y[free[a]] = sol[a];
  return y;
}

// Primal-dual active set. Returns true on a repeated active set that also
// satisfies complementarity.
bool primal_dual_active_set(const ObstacleQp& qp, HVec& m, int max_iter, hreal tol, LcpResult& out) {
  const int n = qp.size();
  std::vector<char> active(static_cast<std::size_t>(n), 0), prev;
  HVec w = qp.gradient(m);
  for (int it = 0; it < max_iter; ++it) {
    prev = active;
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      active[i] = w[i] / qp.A(i, i) > m[i] ? 1 : 0;
      if (!active[i]) free.push_back(i);
    }
    if (it > 0 && active == prev) {
      const hreal r = complementarity_residual(qp, m);
      return r <= tol;
    }
    m = solve_free(qp, free);
    w = qp.gradient(m);
    ++out.iterations;
    out.history.push_back(static_cast<double>(complementarity_residual(qp, m)));
  }
  return false;
}

// Primal active-set method for strictly convex QPs; terminates finitely.
bool primal_active_set(const ObstacleQp& qp, HVec& m, int max_iter, hreal tol, LcpResult& out) {
  const int n = qp.size();
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (m[i] < hreal(0)) m[i] = 0;
    fixed[i] = m[i] == hreal(0) ? 1 : 0;
  }
  const hreal step_tol = hreal(1e-26);
  hreal qscale = 0;
  for (hreal v : qp.q) qscale = hp::max(qscale, hp::abs(v));
  for (int it = 0; it < max_iter; ++it) {
    std::vector<int> free;
    for (int i = 0; i < n; ++i)
      if (!fixed[i]) free.push_back(i);
    const HVec y = solve_free(qp, free);
    hreal pmax = 0, mmax = 1;
    for (int i : free) {
      pmax = hp::max(pmax, hp::abs(y[i] - m[i]));
      mmax = hp::max(mmax, hp::abs(m[i]));
    }
    ++out.iterations;
    if (pmax <= step_tol * mmax) {
      for (int i : free) m[i] = y[i];
      const HVec w = qp.gradient(m);
      int worst = -1;
      hreal wmin = 0;
      for (int i = 0; i < n; ++i) {
        if (fixed[i] && w[i] < wmin) {
          wmin = w[i];
          worst = i;
        }
      }
      out.history.push_back(static_cast<double>(complementarity_residual(qp, m)));
      if (worst < 0 || -wmin <= step_tol * qscale) return complementarity_residual(qp, m) <= tol;
      fixed[worst] = 0;
      continue;
    }
    hreal alpha = 1;
    int blocking = -1;
    for (int i : free) {
      const hreal p = y[i] - m[i];
      if (p < hreal(0)) {
        const hreal ai = -m[i] / p;
        if (ai < alpha) {
          alpha = ai;
          blocking = i;
        }
      }
    }
    for (int i : free) m[i] += alpha * (y[i] - m[i]);
    if (blocking >= 0) {
      m[blocking] = 0;
      fixed[blocking] = 1;
    }
    out.history.push_back(static_cast<double>(complementarity_residual(qp, m)));
  }
  return false;
}

bool projected_gauss_seidel(const ObstacleQp& qp, HVec& m, int max_iter, hreal tol, LcpResult& out) {
  const int n = qp.size();
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i < n; ++i) {
      hreal r = qp.q[i];
      for (int j = qp.A.col_begin(i); j < qp.A.col_end(i); ++j) r += qp.A(i, j) * m[j];
      m[i] = hp::max(hreal(0), m[i] - r / qp.A(i, i));
    }
    ++out.iterations;
    const hreal res = complementarity_residual(qp, m);
    out.history.push_back(static_cast<double>(res));
    if (res <= tol) return true;
  }
  return false;
}

}  // namespace

HVec ObstacleQp::gradient(std::span<const hreal> w) const {
  HVec g = A.multiply(w);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += q[i];
  return g;
}

hreal ObstacleQp::objective(std::span<const hreal> w) const {
  const HVec aw = A.multiply(w);
  hreal s = 0;
  for (std::size_t i = 0; i < aw.size(); ++i) s += w[i] * (aw[i] / 2 + q[i]);
  return s;
}

double ObstacleQp::objective(const Field& w) const { return static_cast<double>(objective(to_h(w))); }

ObstacleQp ObstacleQp::from_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& q, int half_band) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || q.size() != n) throw InputError("ObstacleQp::from_dense: dimension mismatch");
  ObstacleQp qp;
  qp.A = BandMatrix<hreal>(n, half_band, half_band);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (qp.A.in_band(i, j)) qp.A.ref(i, j) = a(i, j);
      else if (a(i, j) != 0.0) throw InputError("ObstacleQp::from_dense: entry outside the declared band");
    }
  qp.q = to_h(q);
  return qp;
}

ObstacleQp assemble_obstacle_qp(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                                std::span<const hreal> m0, std::span<const hreal> u0, double lambda) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (static_cast<int>(m0.size()) != ops.nodes() || static_cast<int>(u0.size()) != ops.nodes())
    throw InputError("assemble_obstacle_qp: field length mismatch");
  require_nonnegative(m0, "m0");
  ObstacleQp qp;
  qp.epsilon = epsilon;
  qp.A = ops.stiffness_m;
  for (int i = 0; i < ops.nodes(); ++i) qp.A.add(i, i, ops.quad_h[i]);
  qp.A = qp.A.scaled(hreal(epsilon));
  const HVec c = coupling_term(problem, ops, m0, u0);
  qp.q.resize(c.size());
  for (int i = 0; i < ops.nodes(); ++i) qp.q[i] = hreal(lambda) * ops.quad_h[i] * c[i];
  return qp;
}

ObstacleQp assemble_obstacle_qp(const MfgProblem& problem, const DiscreteOperators& ops, double epsilon,
                                const Field& m0, const Field& u0, double lambda) {
  check_length(ops, m0, "m0");
  check_length(ops, u0, "u0");
  return assemble_obstacle_qp(problem, ops, epsilon, to_h(m0), to_h(u0), lambda);
}

hreal complementarity_residual(const ObstacleQp& qp, std::span<const hreal> m) {
  const HVec w = qp.gradient(m);
  hreal r = 0;
  for (std::size_t i = 0; i < w.size(); ++i) r = hp::max(r, hp::abs(hp::min(m[i], w[i])));
  return r;
}

LcpResult solve_lcp(const ObstacleQp& qp, std::span<const hreal> m_init, const LcpOptions& options) {
  const int n = qp.size();
  if (static_cast<int>(m_init.size()) != n) throw InputError("solve_lcp: m_init has the wrong length");
  require_nonnegative(m_init, "m_init");
  if (!(options.tol > 0.0)) throw InputError("solve_lcp: tol must be positive");
  const hreal tol = options.tol;

  LcpResult out;
  HVec m(m_init.begin(), m_init.end());
  bool ok = false;
  if (options.method == LcpMethod::pgs) {
    const int cap = options.max_iter > 0 ? options.max_iter : 200 * n;
    ok = projected_gauss_seidel(qp, m, cap, tol, out);
  } else {
    const int cap = options.max_iter > 0 ? options.max_iter : 50 * n;
    ok = primal_dual_active_set(qp, m, std::min(cap, 100), tol, out);
    if (!ok) {
      for (hreal& v : m) v = hp::max(v, hreal(0));
      ok = primal_active_set(qp, m, cap, tol, out);
    }
  }
  out.residual = static_cast<double>(complementarity_residual(qp, m));
  if (!ok) {
    throw NonconvergenceError("solve_lcp: residual " + std::to_string(out.residual) + " above tolerance after " +
                                  std::to_string(out.iterations) + " iterations",
                              out.history);
  }
  out.m_h = std::move(m);
  out.m = to_d(out.m_h);
  return out;
}

LcpResult solve_lcp(const ObstacleQp& qp, const Field& m_init, const LcpOptions& options) {
  for (Eigen::Index i = 0; i < m_init.size(); ++i)
    if (!std::isfinite(m_init[i])) throw InputError("solve_lcp: m_init has a non-finite entry");
  return solve_lcp(qp, to_h(m_init), options);
}

ViReport check_variational_inequality(const ObstacleQp& qp, std::span<const hreal> m,
                                      const std::vector<Field>& probes) {
  const int n = qp.size();
  if (static_cast<int>(m.size()) != n) throw InputError("check_variational_inequality: m has the wrong length");
  const HVec w = qp.gradient(m);
  ViReport r;
  hreal mmax = 1;
  for (hreal v : m) mmax = hp::max(mmax, v);
  r.threshold = static_cast<double>(hreal(1e-8) * mmax);
  hreal qmax = 0;
  for (hreal v : qp.q) qmax = hp::max(qmax, hp::abs(v));
  r.scale = static_cast<double>(qmax);

  hreal gmin = w.empty() ? hreal(0) : w[0], amax = 0;
  for (int i = 0; i < n; ++i) {
    gmin = hp::min(gmin, w[i]);
    if (m[i] > hreal(r.threshold)) amax = hp::max(amax, hp::abs(w[i]));
  }
  r.min_gradient = static_cast<double>(gmin);
  r.max_active_gradient = static_cast<double>(amax);

  bool first = true;
  hreal pmin = 0;
  for (const Field& probe : probes) {
    if (probe.size() != n) throw InputError("check_variational_inequality: probe has the wrong length");
    hreal s = 0;
    for (int i = 0; i < n; ++i) {
      if (!(probe[i] >= 0.0)) throw InputError("check_variational_inequality: probe must be nonnegative");
      s += w[i] * (hreal(probe[i]) - m[i]);
    }
    if (first || s < pmin) pmin = s;
    first = false;
  }
  r.min_probe = static_cast<double>(pmin);
  return r;
}

ViReport check_variational_inequality(const ObstacleQp& qp, const Field& m, const std::vector<Field>& probes) {
  return check_variational_inequality(qp, to_h(m), probes);
}

std::vector<Field> vi_probe_set(const Field& m, const DiscreteOperators& ops, int random_count, std::uint64_t seed) {
  std::vector<Field> probes;
  const int n = ops.nodes();
  for (int i = 0; i < n; ++i) {
    Field w = m.cwiseMax(0.0);
    w[i] += 1.0;
    probes.push_back(std::move(w));
  }
  Rng rng(seed);
  for (int r = 0; r < random_count; ++r) probes.push_back(to_d(density_probe(ops, rng)));
  return probes;
}

}  // namespace mfg
