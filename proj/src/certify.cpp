#include "mfg/certify.hpp"

#include "mfg/errors.hpp"
#include "mfg/probes.hpp"
#include "mfg/regularized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfg {

namespace {

constexpr double kMonotonicityTol = 1e-10;
constexpr double kMintyTol = 1e-8;

void require_size(const DiscreteOperators& ops, std::span<const hreal> f, const char* name) {
  if (static_cast<int>(f.size()) != ops.nodes())
    throw InputError(std::string("certify: field '") + name + "' has the wrong length");
}

HVec sub(std::span<const hreal> a, std::span<const hreal> b) {
  HVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

hreal natural_inner(const DiscreteOperators& ops, std::span<const hreal> a, std::span<const hreal> b) {
  const HVec da = ops.d2k_natural.apply(a);
  const HVec db = ops.d2k_natural.apply(b);
  hreal s = 0;
  for (std::size_t r = 0; r < da.size(); ++r) s += ops.natural_row_weights[r] * da[r] * db[r];
  return s;
}

// Returns the F-value together with the sum of magnitudes of its terms.
struct Evaluated {
  hreal value = 0;
  hreal magnitude = 0;
};

Evaluated eval_F_terms(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
                       std::span<const hreal> v, std::span<const hreal> w1, std::span<const hreal> w2) {
  const int nn = ops.nodes();
  const HVec dv = ops.grad(v);
  HVec flux(static_cast<std::size_t>(nn));
  for (int i = 0; i < nn; ++i) flux[i] = eta[i] * problem.H.dp(i, dv[i]);
  const HVec dflux = ops.div(flux);
  Evaluated e;
  for (int i = 0; i < nn; ++i) {
    const hreal first = -v[i] - problem.H.value(i, dv[i]) + problem.g.value(eta[i]) - hreal(problem.V[i]);
    const hreal second = eta[i] - dflux[i] - hreal(problem.phi[i]);
    const hreal t = ops.quad_h[i] * (first * w1[i] + second * w2[i]);
    e.value += t;
    e.magnitude += hp::abs(t);
  }
  return e;
}

hreal hamiltonian_bracket(const MfgProblem& problem, int i, hreal p, hreal q) {
  return problem.H.value(i, q) - problem.H.value(i, p) - problem.H.dp(i, p) * (q - p);
}

struct Probe {
  HVec eta, v;
};

Probe draw_probe(const MfgProblem& problem, const DiscreteOperators& ops, Rng& rng) {
  Probe p;
  p.eta = density_probe(ops, rng);
  p.v = boundary_bump(ops, rng);
  for (int i = 0; i < ops.nodes(); ++i) p.v[i] += hreal(problem.h[i]);
  return p;
}

// Smallest C > 0 with C^2 + l C - pg >= 0, evaluated without cancellation.
double positive_root(double l, double pg) {
  const double d = std::sqrt(l * l + 4 * pg);
  return l > 0 ? 2 * pg / (l + d) : (d - l) / 2;
}

double fit_max(double current, double candidate) { return std::isfinite(candidate) ? std::max(current, candidate) : current; }

}  // namespace

hreal eps_terms(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
                std::span<const hreal> v, std::span<const hreal> w1, std::span<const hreal> w2, hreal epsilon) {
  const int nn = ops.nodes();
  HVec vh(static_cast<std::size_t>(nn)), xh(static_cast<std::size_t>(nn)), vx(static_cast<std::size_t>(nn));
  for (int i = 0; i < nn; ++i) {
    vh[i] = v[i] - hreal(problem.h[i]);
    xh[i] = hreal(problem.xi[i]) + hreal(problem.h[i]);
    vx[i] = v[i] + hreal(problem.xi[i]);
  }
  HVec d2 = ops.d2k_clamped.apply(vh);
  const HVec dx = ops.d2k_data.apply(xh);
  for (int i = 0; i < nn; ++i) d2[i] += dx[i];
  const HVec dw2 = ops.d2k_clamped.apply(w2);
  return epsilon * (ops.inner(eta, w1) + natural_inner(ops, eta, w1) + ops.inner(vx, w2) + ops.inner(d2, dw2));
}

hreal eval_F(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
             std::span<const hreal> v, std::span<const hreal> w1, std::span<const hreal> w2,
             std::optional<double> epsilon) {
  require_size(ops, eta, "eta");
  require_size(ops, v, "v");
  require_size(ops, w1, "w1");
  require_size(ops, w2, "w2");
  for (hreal x : eta)
    if (!(x >= hreal(0))) throw InputError("eval_F: eta must be nonnegative");
  hreal value = eval_F_terms(problem, ops, eta, v, w1, w2).value;
  if (epsilon) value += eps_terms(problem, ops, eta, v, w1, w2, *epsilon);
  return value;
}

double eval_F(const MfgProblem& problem, const DiscreteOperators& ops, const Field& eta, const Field& v,
              const Field& w1, const Field& w2, std::optional<double> epsilon) {
  return static_cast<double>(eval_F(problem, ops, to_h(eta), to_h(v), to_h(w1), to_h(w2), epsilon));
}

hreal probe_energy(const MfgProblem& problem, const DiscreteOperators& ops, std::span<const hreal> eta,
                   std::span<const hreal> v) {
  HVec vh(v.begin(), v.end());
  for (int i = 0; i < ops.nodes(); ++i) vh[i] -= hreal(problem.h[i]);
  return ops.inner(eta, eta) + ops.natural_energy(eta) + ops.inner(vh, vh) + ops.clamped_energy(vh);
}

MonotonicityResult check_monotonicity(const MfgProblem& problem, const DiscreteOperators& ops, int n_pairs,
                                      std::uint64_t seed, std::optional<double> epsilon) {
  if (n_pairs < 1) throw InputError("check_monotonicity: n_pairs must be >= 1");
  Rng rng(seed);
  MonotonicityResult r;
  r.pairs = n_pairs;
  r.seed = seed;
  r.epsilon = epsilon;
  r.tolerance = kMonotonicityTol;
  const int nn = ops.nodes();
  hreal min_value = std::numeric_limits<double>::infinity();
  hreal min_scaled = min_value, min_margin = min_value, max_defect = 0;

  for (int k = 0; k < n_pairs; ++k) {
    const Probe x1 = draw_probe(problem, ops, rng);
    const Probe x2 = draw_probe(problem, ops, rng);
    const HVec deta = sub(x1.eta, x2.eta);
    const HVec dv = sub(x1.v, x2.v);
    const Evaluated a = eval_F_terms(problem, ops, x1.eta, x1.v, deta, dv);
    const Evaluated b = eval_F_terms(problem, ops, x2.eta, x2.v, deta, dv);
    hreal value = a.value - b.value;
    hreal scale = hp::max(hreal(1), a.magnitude + b.magnitude);

    // Coupling plus convexity brackets of H.
    const HVec g1 = ops.grad(x1.v), g2 = ops.grad(x2.v);
    HVec split(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) {
      split[i] = (problem.g.value(x1.eta[i]) - problem.g.value(x2.eta[i])) * deta[i] +
                 x1.eta[i] * hamiltonian_bracket(problem, i, g1[i], g2[i]) +
                 x2.eta[i] * hamiltonian_bracket(problem, i, g2[i], g1[i]);
    }
    max_defect = hp::max(max_defect, hp::abs(value - ops.integrate(split)) / scale);

    if (epsilon) {
      const hreal eps = *epsilon;
      const hreal ea = eps_terms(problem, ops, x1.eta, x1.v, deta, dv, eps);
      const hreal eb = eps_terms(problem, ops, x2.eta, x2.v, deta, dv, eps);
      value += ea - eb;
      scale += hp::abs(ea) + hp::abs(eb);
      const hreal bound = eps * (ops.inner(deta, deta) + ops.inner(dv, dv));
      min_margin = hp::min(min_margin, (value - bound) / scale);
    }
    min_value = hp::min(min_value, value);
    min_scaled = hp::min(min_scaled, value / scale);
  }
  r.min_value = static_cast<double>(min_value);
  r.min_scaled_value = static_cast<double>(min_scaled);
  r.max_identity_defect = static_cast<double>(max_defect);
  r.min_bound_margin = epsilon ? static_cast<double>(min_margin) : 0.0;
  r.pass = r.min_scaled_value >= -kMonotonicityTol && r.max_identity_defect <= kMonotonicityTol &&
           (!epsilon || r.min_bound_margin >= -kMonotonicityTol);
  return r;
}

D2Result check_D2(const MfgProblem& problem, const DiscreteOperators& ops, const std::pair<HVec, HVec>& candidate,
                  int n_probes, std::uint64_t seed, double tol_d2) {
  if (n_probes < 1) throw InputError("check_D2: n_probes must be >= 1");
  const auto& [m, u] = candidate;
  require_size(ops, m, "m");
  require_size(ops, u, "u");
  for (hreal x : m)
    if (x < hreal(0)) throw InputError("check_D2: candidate density must be nonnegative");
  const int n = ops.nodes() - 1;
  const hreal bdry = hp::max(hp::abs(u[0] - hreal(problem.h[0])), hp::abs(u[n] - hreal(problem.h[n])));
  if (bdry > hreal(1e-12) * hp::max(hreal(1), max_abs(u)))
    throw InputError("check_D2: candidate value function must equal h at the endpoints");

  Rng rng(seed);
  D2Result r;
  r.probes = n_probes;
  r.seed = seed;
  r.tolerance = tol_d2;
  hreal min_value = std::numeric_limits<double>::infinity(), scale = 1;
  for (int k = 0; k < n_probes; ++k) {
    const Probe p = draw_probe(problem, ops, rng);
    const hreal value = eval_F_terms(problem, ops, p.eta, p.v, sub(p.eta, m), sub(p.v, u)).value;
    min_value = hp::min(min_value, value);
    scale = hp::max(scale, max_abs(p.eta));
  }
  r.min_value = static_cast<double>(min_value);
  r.probe_scale = static_cast<double>(scale);
  r.pass = r.min_value >= -tol_d2 * r.probe_scale;
  return r;
}

D2Result check_D2(const MfgProblem& problem, const DiscreteOperators& ops, const std::pair<Field, Field>& candidate,
                  int n_probes, std::uint64_t seed, double tol_d2) {
  check_length(ops, candidate.first, "m");
  check_length(ops, candidate.second, "u");
  return check_D2(problem, ops, {to_h(candidate.first), to_h(candidate.second)}, n_probes, seed, tol_d2);
}

std::vector<double> default_p_samples() {
  std::vector<double> p{0.0};
  for (int j = -60; j <= 60; ++j) {
    const double v = std::pow(10.0, j / 20.0);
    p.push_back(v);
    p.push_back(-v);
  }
  return p;
}

std::vector<double> default_m_samples() {
  std::vector<double> m;
  for (int j = -12; j <= 16; ++j) m.push_back(std::pow(10.0, j / 2.0));
  return m;
}

std::vector<AssumptionResult> validate_assumptions(const MfgProblem& problem, const DiscreteOperators& ops,
                                                   const std::vector<double>& p_samples,
                                                   const std::vector<double>& m_samples) {
  if (p_samples.empty() || m_samples.empty()) throw InputError("validate_assumptions: sample arrays must be non-empty");
  const int nn = ops.nodes();
  const double gamma = problem.H.gamma;

  // For each of the three H-inequalities: the smallest C making the sample
  // hold, and the same quantity at the two largest |p| (growth check).
  std::vector<double> mags;
  for (double p : p_samples) mags.push_back(std::abs(p));
  std::sort(mags.begin(), mags.end());
  mags.erase(std::unique(mags.begin(), mags.end()), mags.end());
  const double p_top = mags.back();
  const double p_prev = mags.size() >= 2 ? mags[mags.size() - 2] : p_top;
  struct Fit {
    double c = 0, c_top = 0, c_prev = 0;
  };
  Fit fits[3];
  const auto record = [&](Fit& f, double cs, double ap) {
    f.c = fit_max(f.c, cs);
    if (ap == p_top) f.c_top = fit_max(f.c_top, cs);
    if (ap == p_prev) f.c_prev = fit_max(f.c_prev, cs);
  };
  for (int i = 0; i < nn; ++i) {
    for (double p : p_samples) {
      const double ap = std::abs(p);
      const double pg = std::pow(ap, gamma);
      const double h = problem.H.value(i, p);
      const double dp = problem.H.dp(i, p);
      const double l1 = -h + dp * p;
      record(fits[0], positive_root(l1, pg), ap);
      record(fits[1], positive_root(h, pg), ap);
      record(fits[2], std::abs(dp) / (std::pow(ap, gamma - 1) + 1), ap);
    }
  }
  const char* ids[3] = {"lagrangian_coercivity", "hamiltonian_coercivity", "momentum_growth"};
  const char* statements[3] = {"-H + DpH p >= |p|^gamma / C - C", "H >= |p|^gamma / C - C",
                               "|DpH| <= C |p|^(gamma-1) + C"};
  std::vector<AssumptionResult> out;
  for (int a = 0; a < 3; ++a) {
    AssumptionResult r;
    r.id = ids[a];
    r.statement = statements[a];
    r.constant = std::max(fits[a].c, 1e-12);
    const double c = r.constant;
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn; ++i) {
      for (double p : p_samples) {
        const double ap = std::abs(p);
        const double pg = std::pow(ap, gamma);
        const double h = problem.H.value(i, p);
        const double dp = problem.H.dp(i, p);
        double slack = 0;
        if (a == 0) slack = (-h + dp * p) - (pg / c - c);
        else if (a == 1) slack = h - (pg / c - c);
        else slack = c * std::pow(ap, gamma - 1) + c - std::abs(dp);
        margin = std::min(margin, slack / std::max(1.0, pg));
      }
    }
    r.margin = margin;
    const bool no_growth = fits[a].c_top <= 1.5 * std::max(fits[a].c_prev, 1e-300) || fits[a].c_top < 0.5 * c;
    r.pass = std::isfinite(c) && margin >= -1e-9 && no_growth;
    r.note = no_growth ? "fitted constant stable at the largest |p|" : "fitted constant still growing at the largest |p|";
    out.push_back(r);
  }

  // Density families for the coupling conditions: constants, a smooth bump,
  // and a single-node spike, each scaled by the sample amplitudes.
  std::vector<HVec> shapes;
  shapes.emplace_back(static_cast<std::size_t>(nn), hreal(1));
  {
    HVec bump(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) {
      const hreal s = hp::sin(hp::pi() * unit_coordinate(ops, i));
      bump[i] = s * s;
    }
    shapes.push_back(std::move(bump));
    HVec spike(static_cast<std::size_t>(nn), hreal(0));
    spike[static_cast<std::size_t>(nn / 2)] = 1;
    shapes.push_back(std::move(spike));
  }
  std::vector<double> amplitudes = m_samples;
  std::sort(amplitudes.begin(), amplitudes.end());
  for (double s : amplitudes)
    if (!(s >= 0.0)) throw InputError("validate_assumptions: m_samples must be nonnegative");

  struct Sample {
    double amp, abs_g, mass, mg;
  };
  std::vector<std::vector<Sample>> per_shape;
  for (const HVec& shape : shapes) {
    std::vector<Sample> rows;
    for (double s : amplitudes) {
      HVec ag(shape.size()), mm(shape.size()), mg(shape.size());
      for (std::size_t i = 0; i < shape.size(); ++i) {
        const hreal m = hreal(s) * shape[i];
        ag[i] = hp::abs(problem.g.value(m));
        mm[i] = m;
        mg[i] = m * problem.g.value(m);
      }
      rows.push_back({s, static_cast<double>(ops.integrate(ag)), static_cast<double>(ops.integrate(mm)),
                      static_cast<double>(ops.integrate(mg))});
    }
    per_shape.push_back(std::move(rows));
  }

  for (double delta : {0.1, 0.5, 1.0}) {
    AssumptionResult r;
    r.id = "coupling_domination";
    r.statement = "max(int |g(m)|, int m) <= delta int m g(m) + C_delta, delta = " + std::to_string(delta);
    double c = 0;
    bool bounded = true;
    for (const auto& rows : per_shape) {
      for (const Sample& s : rows) c = std::max(c, std::max(s.abs_g, s.mass) - delta * s.mg);
      const auto deficit = [&](const Sample& s) { return std::max(s.abs_g, s.mass) - delta * s.mg; };
      const double top = deficit(rows.back());
      const double prev = deficit(rows[rows.size() >= 2 ? rows.size() - 2 : 0]);
      if (top > 0 && top > prev) bounded = false;
    }
    r.constant = c;
    r.margin = bounded ? 0.0 : -1.0;
    r.pass = std::isfinite(c) && bounded;
    r.note = bounded ? "deficit decreasing at the largest amplitude" : "deficit still growing at the largest amplitude";
    out.push_back(r);
  }

  {
    AssumptionResult r;
    r.id = "coupling_lower_bound";
    r.statement = "int m g(m) >= -C";
    double inf = std::numeric_limits<double>::infinity();
    bool bounded = true;
    for (const auto& rows : per_shape) {
      for (const Sample& s : rows) inf = std::min(inf, s.mg);
      if (rows.back().mg < 0 && rows.back().mg < rows[rows.size() >= 2 ? rows.size() - 2 : 0].mg) bounded = false;
    }
    r.constant = std::max(0.0, -inf);
    r.margin = inf;
    r.pass = std::isfinite(inf) && bounded;
    r.note = "inf over sample densities of int m g(m) = " + std::to_string(inf);
    out.push_back(r);
  }

  {
    AssumptionResult r;
    r.id = "coupling_compactness";
    r.statement = "bounded int m g(m) implies weak L1 compactness";
    const bool increasing = problem.g.kind == CouplingSpec::Kind::log || problem.g.alpha > 0.0;
    r.pass = increasing && problem.g.unbounded();
    r.note = "structural: g increasing and unbounded implies the property; not tested numerically";
    out.push_back(r);
  }

  {
    const MonotonicityResult mono = check_monotonicity(problem, ops, 100, 0);
    AssumptionResult r;
    r.id = "monotonicity";
    r.statement = "F monotone in L2 x L2";
    r.margin = mono.min_scaled_value;
    r.pass = mono.pass;
    r.note = "100 seeded pairs, min scaled value " + std::to_string(mono.min_scaled_value);
    out.push_back(r);
  }
  return out;
}

MintyReport minty_gap_report(const std::vector<RegularizedSolution>& stages, const MfgProblem& problem,
                             const DiscreteOperators& ops, int n_probes, std::uint64_t seed) {
  if (n_probes < 1) throw InputError("minty_gap_report: n_probes must be >= 1");
  for (std::size_t j = 1; j < stages.size(); ++j)
    if (!(stages[j].epsilon < stages[j - 1].epsilon))
      throw InputError("minty_gap_report: stages must be ordered by decreasing eps");

  Rng rng(seed);
  std::vector<Probe> probes;
  hreal energy = 1;
  for (int k = 0; k < n_probes; ++k) {
    probes.push_back(draw_probe(problem, ops, rng));
    energy = hp::max(energy, probe_energy(problem, ops, probes.back().eta, probes.back().v));
  }

  MintyReport rep;
  rep.tolerance = kMintyTol;
  rep.probes = n_probes;
  rep.seed = seed;
  const int nn = ops.nodes();
  for (const RegularizedSolution& st : stages) {
    HVec m = st.m_h.empty() ? to_h(st.m) : st.m_h;
    HVec u = st.u_h.empty() ? to_h(st.u_hat) : st.u_h;
    for (int i = 0; i < nn; ++i) u[i] += hreal(problem.h[i]);
    MintyRow row;
    row.epsilon = st.epsilon;
    row.probe_scale = static_cast<double>(energy);
    hreal cmax = 0, dmin = std::numeric_limits<double>::infinity(), corr_min = dmin;
    bool ok = true;
    for (const Probe& p : probes) {
      const HVec w1 = sub(p.eta, m), w2 = sub(p.v, u);
      const Evaluated f = eval_F_terms(problem, ops, p.eta, p.v, w1, w2);
      const hreal c = eps_terms(problem, ops, p.eta, p.v, w1, w2, st.epsilon);
      cmax = hp::max(cmax, hp::abs(c));
      dmin = hp::min(dmin, f.value);
      corr_min = hp::min(corr_min, f.value + c);
      const hreal scale = hp::max(hreal(1), f.magnitude + hp::abs(c));
      if (f.value + c < -hreal(kMintyTol) * scale) ok = false;
    }
    row.c_eps_bound = static_cast<double>(cmax);
    row.d2_residual = static_cast<double>(dmin);
    row.min_corrected = static_cast<double>(corr_min);
    row.pass = ok && row.d2_residual >= -row.c_eps_bound - kMintyTol * std::max(1.0, row.c_eps_bound);
    rep.rows.push_back(row);
  }
  rep.decreasing = true;
  for (std::size_t j = 1; j < rep.rows.size(); ++j)
    if (rep.rows[j].c_eps_bound > 1.1 * rep.rows[j - 1].c_eps_bound) rep.decreasing = false;
  return rep;
}

bool CertificationReport::pass() const {
  for (const auto& a : assumptions)
    if (!a.pass) return false;
  if (monotonicity && !monotonicity->pass) return false;
  if (monotonicity_eps && !monotonicity_eps->pass) return false;
  if (d2 && !d2->pass) return false;
  if (minty) {
    if (!minty->decreasing) return false;
    for (const auto& r : minty->rows)
      if (!r.pass) return false;
  }
  return true;
}

namespace {

nlohmann::ordered_json mono_json(const MonotonicityResult& m) {
  nlohmann::ordered_json j;
  j["pairs"] = m.pairs;
  j["seed"] = m.seed;
  if (m.epsilon) j["epsilon"] = *m.epsilon;
  j["min_value"] = m.min_value;
  j["min_scaled_value"] = m.min_scaled_value;
  j["max_identity_defect"] = m.max_identity_defect;
  if (m.epsilon) j["min_bound_margin"] = m.min_bound_margin;
  j["tolerance"] = m.tolerance;
  j["pass"] = m.pass;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const CertificationReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["pass"] = report.pass();
  auto& arr = j["assumptions"] = nlohmann::ordered_json::array();
  for (const auto& a : report.assumptions) {
    nlohmann::ordered_json e;
    e["id"] = a.id;
    e["statement"] = a.statement;
    e["constant"] = a.constant;
    e["margin"] = a.margin;
    e["pass"] = a.pass;
    e["note"] = a.note;
    arr.push_back(e);
  }
  if (report.monotonicity) j["monotonicity"] = mono_json(*report.monotonicity);
  if (report.monotonicity_eps) j["monotonicity_eps"] = mono_json(*report.monotonicity_eps);
  if (report.d2) {
    const auto& d = *report.d2;
    j["d2"] = {{"probes", d.probes},           {"seed", d.seed},   {"min_value", d.min_value},
               {"probe_scale", d.probe_scale}, {"tolerance", d.tolerance}, {"pass", d.pass}};
  }
  if (report.minty) {
    const auto& m = *report.minty;
    nlohmann::ordered_json mj;
    mj["probes"] = m.probes;
    mj["seed"] = m.seed;
    mj["tolerance"] = m.tolerance;
    mj["c_eps_decreasing"] = m.decreasing;
    auto& rows = mj["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : m.rows) {
      nlohmann::ordered_json e;
      e["epsilon"] = r.epsilon;
      e["c_eps_bound"] = r.c_eps_bound;
      e["d2_residual"] = r.d2_residual;
      e["min_corrected"] = r.min_corrected;
      e["probe_scale"] = r.probe_scale;
      e["pass"] = r.pass;
      rows.push_back(e);
    }
    j["minty_gaps"] = mj;
  }
  return j;
}

}  // namespace mfg
