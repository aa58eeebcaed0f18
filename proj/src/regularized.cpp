#include "mfg/regularized.hpp"

namespace mfg {

namespace {

BandMatrix<hreal> regularized_operator(const DiscreteOperators& ops, const BandMatrix<hreal>& stiffness, hreal eps) {
  BandMatrix<hreal> a = stiffness;
  for (int i = 0; i < ops.nodes(); ++i) a.add(i, i, ops.quad_h[i]);
  return a.scaled(eps);
}

}  // namespace

HVec coupling_term(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> m,
                   std::span<const hreal> u) {
  const HVec du = ops.grad(u);
  HVec c(m.size());
  for (int i = 0; i < ops.nodes(); ++i) {
    c[i] = -u[i] - problem.H.value(i, du[i]) + problem.g.value(hp::max(m[i], hreal(0))) - hreal(problem.V[i]);
  }
  return c;
}

HVec transport_flux(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> m,
                    std::span<const hreal> u) {
  const HVec du = ops.grad(u);
  HVec f(m.size());
  for (int i = 0; i < ops.nodes(); ++i) f[i] = m[i] * problem.H.dp(i, du[i]);
  return f;
}

HVec weighted_gradient_transpose(const DiscreteOperators& ops, std::span<const hreal> f) {
  const int nn = ops.nodes();
  HVec out(static_cast<std::size_t>(nn), hreal(0));
  for (int j = 0; j < nn; ++j) {
    const hreal w = ops.quad_h[j] * f[j];
    for (int i = ops.gradient.col_begin(j); i < ops.gradient.col_end(j); ++i) out[i] += ops.gradient(j, i) * w;
  }
  return out;
}

HVec xi_load(const MfgProblem& problem, const DiscreteOperators& ops, hreal eps) {
  const HVec xi = to_h(problem.xi);
  HVec d = ops.d2k_data.apply(xi);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= ops.quad_h[i];
  HVec load = ops.d2k_clamped.apply_transpose(d);
  for (int i = 0; i < ops.nodes(); ++i) load[i] = eps * (load[i] + ops.quad_h[i] * xi[i]);
  return load;
}

RegularizedSystem::RegularizedSystem(const MfgProblem& hat_problem, const DiscreteOperators& ops, double epsilon,
                                     double lambda)
    : problem_(hat_problem), ops_(ops), eps_(epsilon), lambda_(lambda) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (!hat_problem.homogeneous()) throw InputError("regularized system requires a hat-transformed problem (h = 0)");
  a_m_ = regularized_operator(ops, ops.stiffness_m, eps_);
  a_u_ = regularized_operator(ops, ops.stiffness_u, eps_);
  xi_ = xi_load(hat_problem, ops, eps_);
  scale_m_.assign(ops.quad_h.begin(), ops.quad_h.end());
  scale_u_ = scale_m_;
}

HVec RegularizedSystem::r1(std::span<const hreal> m, std::span<const hreal> u) const {
  HVec r = a_m_.multiply(m);
  const HVec c = coupling_term(problem_, ops_, m, u);
  for (int i = 0; i < nodes(); ++i) r[i] += lambda_ * ops_.quad_h[i] * c[i];
  return r;
}

HVec RegularizedSystem::r2(std::span<const hreal> m, std::span<const hreal> u) const {
  const int nn = nodes();
  HVec r = a_u_.multiply(u);
  const HVec flux = transport_flux(problem_, ops_, m, u);
  const HVec gt = weighted_gradient_transpose(ops_, flux);
  for (int i = 0; i < nn; ++i) {
    const hreal q = ops_.quad_h[i];
    r[i] += lambda_ * (q * m[i] + gt[i] - q * hreal(problem_.phi[i])) + xi_[i];
  }
  r[0] = u[0];
  r[nn - 1] = u[nn - 1];
  return r;
}

HVec RegularizedSystem::merit_residual(std::span<const hreal> m, std::span<const hreal> u) const {
  const int nn = nodes();
  const HVec a = r1(m, u);
  const HVec b = r2(m, u);
  HVec phi(static_cast<std::size_t>(2 * nn));
  for (int i = 0; i < nn; ++i) {
    phi[2 * i] = hp::min(m[i], a[i] / scale_m_[i]);
    phi[2 * i + 1] = (i == 0 || i == nn - 1) ? b[i] : b[i] / scale_u_[i];
  }
  return phi;
}

BandMatrix<hreal> RegularizedSystem::jacobian(std::span<const hreal> m, std::span<const hreal> u) const {
  const int nn = nodes();
  const int hb = interleaved_half_band();
  BandMatrix<hreal> j(2 * nn, hb, hb);
  const HVec du = ops_.grad(u);
  const HVec a = r1(m, u);
  const auto& g = ops_.gradient;
  HVec dp(static_cast<std::size_t>(nn)), dpp(static_cast<std::size_t>(nn));
  for (int i = 0; i < nn; ++i) {
    dp[i] = problem_.H.dp(i, du[i]);
    dpp[i] = problem_.H.dpp(i, du[i]);
  }

  for (int i = 0; i < nn; ++i) {
    const hreal q = ops_.quad_h[i];
    const hreal sm = scale_m_[i], su = scale_u_[i];
    const int rm = 2 * i, ru = 2 * i + 1;

    if (m[i] <= a[i] / sm) {
      j.ref(rm, rm) = 1;
    } else {
      const hreal w = lambda_ * q / sm;
      for (int c = a_m_.col_begin(i); c < a_m_.col_end(i); ++c) j.add(rm, 2 * c, a_m_(i, c) / sm);
      j.add(rm, rm, w * problem_.g.derivative(hp::max(m[i], hreal(0))));
      j.add(rm, ru, -w);
      for (int c = g.col_begin(i); c < g.col_end(i); ++c) j.add(rm, 2 * c + 1, -w * dp[i] * g(i, c));
    }

    if (i == 0 || i == nn - 1) {
      j.ref(ru, ru) = 1;
      continue;
    }
    for (int c = a_u_.col_begin(i); c < a_u_.col_end(i); ++c) j.add(ru, 2 * c + 1, a_u_(i, c) / su);
    j.add(ru, rm, lambda_ * q / su);
    for (int r = g.col_begin(i); r < g.col_end(i); ++r) {
      // column i of G is row i of G^T
      const hreal gri = g(r, i);
      if (gri == hreal(0)) continue;
      const hreal w = lambda_ * gri * ops_.quad_h[r] / su;
      j.add(ru, 2 * r, w * dp[r]);
      const hreal wm = w * m[r] * dpp[r];
      for (int c = g.col_begin(r); c < g.col_end(r); ++c) j.add(ru, 2 * c + 1, wm * g(r, c));
    }
  }
  return j;
}

}  // namespace mfg
