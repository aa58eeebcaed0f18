#include "mfg/discretization.hpp"

#include "mfg/errors.hpp"

#include <string>

namespace mfg {

Field GridInterval::coordinates() const {
  Field x(nodes());
  for (int i = 0; i < nodes(); ++i) x[i] = node(i);
  return x;
}

void GridInterval::validate(int k) const {
  if (!(x_max > x_min)) throw InputError("grid: x_max must exceed x_min");
  if (k < 1) throw InputError("grid: regularization order k must be >= 1");
  if (n < min_cells(k)) {
    throw InputError("grid: n = " + std::to_string(n) + " is below the stencil minimum 4k+4 = " +
                     std::to_string(min_cells(k)));
  }
}

std::vector<long long> centered_stencil(int k) {
  const int order = 2 * k;
  std::vector<long long> c(static_cast<std::size_t>(order + 1));
  long long binom = 1;
  for (int j = 0; j <= order; ++j) {
    c[j] = ((order - j) % 2 == 0 ? 1 : -1) * binom;
    binom = binom * (order - j) / (j + 1);
  }
  return c;
}

namespace {

hreal int_pow(hreal x, int p) {
  hreal r = 1;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

DiscreteOperators build_operators(const GridInterval& grid, int k) {
  grid.validate(k);
  DiscreteOperators ops;
  ops.grid = grid;
  ops.k = k;

  const int n = grid.n;
  const int nn = grid.nodes();
  const hreal dx = grid.dx_h();

  ops.quad_h.assign(static_cast<std::size_t>(nn), dx);
  ops.quad_h.front() = dx / 2;
  ops.quad_h.back() = dx / 2;
  ops.quad = to_d(ops.quad_h);

  ops.gradient = BandMatrix<hreal>(nn, 1, 1);
  const hreal inv_dx = hreal(1) / dx;
  const hreal half_inv_dx = inv_dx / 2;
  ops.gradient.ref(0, 0) = -inv_dx;
  ops.gradient.ref(0, 1) = inv_dx;
  for (int i = 1; i < n; ++i) {
    ops.gradient.ref(i, i - 1) = -half_inv_dx;
    ops.gradient.ref(i, i + 1) = half_inv_dx;
  }
  ops.gradient.ref(n, n - 1) = -inv_dx;
  ops.gradient.ref(n, n) = inv_dx;

  // All stencil rows share the same scale so that polynomial annihilation is
  // exact in floating point (integer weights times a common factor).
  const auto stencil = centered_stencil(k);
  const hreal scale = hreal(1) / int_pow(dx, 2 * k);
  std::vector<hreal> scaled(stencil.size());
  for (std::size_t j = 0; j < stencil.size(); ++j) scaled[j] = hreal(stencil[j]) * scale;

  ops.d2k_natural = RowOperator<hreal>(nn);
  for (int i = k; i <= n - k; ++i) {
    ops.d2k_natural.push_row(i - k, scaled);
    ops.natural_row_weights.push_back(dx);
  }

  ops.d2k_clamped = RowOperator<hreal>(nn);
  for (int i = 0; i <= n; ++i) {
    const int first = i - k;
    const int lo = std::max(first, 0);
    const int hi = std::min(first + 2 * k, n);
    std::vector<hreal> run(scaled.begin() + (lo - first), scaled.begin() + (hi - first) + 1);
    ops.d2k_clamped.push_row(lo, std::move(run));
  }

  ops.d2k_data = RowOperator<hreal>(nn);
  for (int i = 0; i <= n; ++i) {
    const int first = std::clamp(i - k, 0, n - 2 * k);
    ops.d2k_data.push_row(first, scaled);
  }

  ops.stiffness_m = ops.d2k_natural.gram(ops.natural_row_weights, 2 * k);
  ops.stiffness_u = ops.d2k_clamped.gram(ops.quad_h, 2 * k);
  return ops;
}

HVec DiscreteOperators::div(std::span<const hreal> flux) const {
  const int n = grid.n;
  HVec out(flux.size(), hreal(0));
  for (int i = 1; i < n; ++i) {
    hreal s = 0;
    for (int j = i - 1; j <= i + 1; ++j) s += gradient(j, i) * quad_h[j] * flux[j];
    out[i] = -s / quad_h[i];
  }
  out[0] = gradient(0, 0) * flux[0] + gradient(0, 1) * flux[1];
  out[n] = gradient(n, n - 1) * flux[n - 1] + gradient(n, n) * flux[n];
  return out;
}

hreal DiscreteOperators::integrate(std::span<const hreal> f) const {
  hreal s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += quad_h[i] * f[i];
  return s;
}

hreal DiscreteOperators::inner(std::span<const hreal> a, std::span<const hreal> b) const {
  hreal s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += quad_h[i] * a[i] * b[i];
  return s;
}

hreal DiscreteOperators::natural_energy(std::span<const hreal> w) const {
  const HVec d = d2k_natural.apply(w);
  hreal s = 0;
  for (std::size_t r = 0; r < d.size(); ++r) s += natural_row_weights[r] * d[r] * d[r];
  return s;
}

hreal DiscreteOperators::clamped_energy(std::span<const hreal> w) const {
  const HVec d = d2k_clamped.apply(w);
  return inner(d, d);
}

HVec DiscreteOperators::mass_times(std::span<const hreal> w) const {
  HVec out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = quad_h[i] * w[i];
  return out;
}

void check_length(const DiscreteOperators& ops, const Field& f, const char* name) {
  if (f.size() != ops.nodes()) {
    throw InputError(std::string("field '") + name + "' has length " + std::to_string(f.size()) +
                     ", expected " + std::to_string(ops.nodes()));
  }
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw InputError(std::string("field '") + name + "' has a non-finite entry");
  }
}

Field apply_gradient(const DiscreteOperators& ops, const Field& u) {
  check_length(ops, u, "u");
  return to_d(ops.grad(to_h(u)));
}

Field apply_divergence(const DiscreteOperators& ops, const Field& flux) {
  check_length(ops, flux, "flux");
  return to_d(ops.div(to_h(flux)));
}

double integrate(const DiscreteOperators& ops, const Field& f) {
  check_length(ops, f, "f");
  return static_cast<double>(ops.integrate(to_h(f)));
}

Field apply_d2k_natural(const DiscreteOperators& ops, const Field& w) {
  check_length(ops, w, "w");
  return to_d(ops.d2k_natural.apply(to_h(w)));
}

Field apply_d2k_clamped(const DiscreteOperators& ops, const Field& w) {
  check_length(ops, w, "w");
  return to_d(ops.d2k_clamped.apply(to_h(w)));
}

Field apply_d2k_data(const DiscreteOperators& ops, const Field& w) {
  check_length(ops, w, "w");
  return to_d(ops.d2k_data.apply(to_h(w)));
}

Eigen::MatrixXd to_dense(const BandMatrix<hreal>& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.size(), m.size());
  for (int i = 0; i < m.size(); ++i)
    for (int j = m.col_begin(i); j < m.col_end(i); ++j) d(i, j) = static_cast<double>(m(i, j));
  return d;
}

Eigen::MatrixXd to_dense(const RowOperator<hreal>& op) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(op.rows(), op.cols());
  for (int r = 0; r < op.rows(); ++r) {
    const auto& row = op.row(r);
    for (std::size_t j = 0; j < row.coeffs.size(); ++j)
      d(r, row.first + static_cast<int>(j)) = static_cast<double>(row.coeffs[j]);
  }
  return d;
}

}  // namespace mfg
