#include "mfg/certify.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace mfg;

namespace {

HamiltonianSpec hamiltonian(int nn, double gamma = 2.0) {
  return {Field::Ones(nn), Field::Zero(nn), gamma, Field::Zero(nn)};
}

struct Setup {
  DiscreteOperators ops;
  MfgProblem problem;
};

Setup constant_state(int n, double gamma = 2.0, CouplingSpec g = CouplingSpec::power(1)) {
  Setup s;
  s.ops = build_operators({0, 1, n}, 2);
  const int nn = n + 1;
  s.problem = make_problem(s.ops.grid, hamiltonian(nn, gamma), g, Field::Constant(nn, -0.5), Field::Ones(nn),
                           Field::Constant(nn, 0.5), Field(), s.ops);
  return s;
}

Field homogeneous_random(int nn, std::mt19937_64& rng) {
  Field v = oracle::random_vector(nn, rng);
  v[0] = v[nn - 1] = 0;
  return v;
}

const AssumptionResult& find(const std::vector<AssumptionResult>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (r.id == id) return r;
  throw std::runtime_error("missing assumption " + id);
}

}  // namespace

TEST_CASE("eval_F: zero direction, linearity, eps split") {
  const auto s = constant_state(30);
  const int nn = 31;
  std::mt19937_64 rng(1);
  const Field eta = oracle::random_vector(nn, rng, 0, 2);
  const Field v = oracle::random_vector(nn, rng);
  const Field a1 = oracle::random_vector(nn, rng), a2 = homogeneous_random(nn, rng);
  const Field b1 = oracle::random_vector(nn, rng), b2 = homogeneous_random(nn, rng);
  CHECK(eval_F(s.problem, s.ops, eta, v, Field::Zero(nn), Field::Zero(nn)) == 0.0);

  const double fa = eval_F(s.problem, s.ops, eta, v, a1, a2);
  const double fb = eval_F(s.problem, s.ops, eta, v, b1, b2);
  const double fab = eval_F(s.problem, s.ops, eta, v, Field(2 * a1 - 3 * b1), Field(2 * a2 - 3 * b2));
  CHECK(fab == doctest::Approx(2 * fa - 3 * fb).epsilon(1e-12));

  const double eps = 0.03;
  const double fe = eval_F(s.problem, s.ops, eta, v, a1, a2, eps);
  const double et = static_cast<double>(eps_terms(s.problem, s.ops, to_h(eta), to_h(v), to_h(a1), to_h(a2), eps));
  CHECK(fe - fa == doctest::Approx(et).epsilon(1e-10));

  Field neg = eta;
  neg[3] = -0.1;
  CHECK_THROWS_AS(eval_F(s.problem, s.ops, neg, v, a1, a2), InputError);
  CHECK_THROWS_AS(eval_F(s.problem, s.ops, Field::Ones(nn - 1), v, a1, a2), InputError);
}

TEST_CASE("eval_F vanishes at the exact manufactured pair") {
  const auto ops = build_operators({0, 1, 100}, 2);
  const int nn = 101;
  const auto [ms, us] = sine_manufactured_pair(ops);
  const auto mp = manufactured_problem(ms, us, hamiltonian(nn), CouplingSpec::power(1), ops.grid, ops);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t) {
    const Field w1 = oracle::random_vector(nn, rng), w2 = homogeneous_random(nn, rng);
    CHECK(std::abs(eval_F(mp.problem, ops, ms, us, w1, w2)) <= 1e-10);
  }
}

TEST_CASE("monotonicity gap matches the quadratic closed form") {
  // H = 1 + p^2, g(m) = m:  <F(x1) - F(x2), x1 - x2> = int (d eta)^2 + (eta1 + eta2)(D d v)^2.
  const auto s = constant_state(40);
  const int nn = 41;
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Field e1 = oracle::random_vector(nn, rng, 0, 2), e2 = oracle::random_vector(nn, rng, 0, 2);
    const Field v1 = oracle::random_vector(nn, rng);
    Field v2 = homogeneous_random(nn, rng) + v1;
    const Field de = e1 - e2, dv = v1 - v2;
    const double lhs =
        eval_F(s.problem, s.ops, e1, v1, de, dv) - eval_F(s.problem, s.ops, e2, v2, de, dv);
    const Eigen::MatrixXd G = to_dense(s.ops.gradient);
    const Field gdv = G * dv;
    double rhs = 0;
    for (int i = 0; i < nn; ++i) rhs += s.ops.quad[i] * (de[i] * de[i] + (e1[i] + e2[i]) * gdv[i] * gdv[i]);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    CHECK(lhs >= 0.0);
  }
}

TEST_CASE("check_monotonicity on the constant state") {
  const auto s = constant_state(60);
  const auto plain = check_monotonicity(s.problem, s.ops, 100, 7);
  CHECK(plain.pass);
  CHECK(plain.pairs == 100);
  CHECK(plain.seed == 7);
  CHECK(plain.min_scaled_value >= -1e-10);
  CHECK(plain.max_identity_defect <= 1e-10);
  CHECK_FALSE(plain.epsilon.has_value());

  const auto reg = check_monotonicity(s.problem, s.ops, 100, 7, 1e-2);
  CHECK(reg.pass);
  CHECK(reg.min_bound_margin >= -1e-10);
  CHECK(reg.epsilon.value() == 1e-2);

  // Same seed, same numbers.
  const auto again = check_monotonicity(s.problem, s.ops, 100, 7);
  CHECK(again.min_value == plain.min_value);
  CHECK_THROWS_AS(check_monotonicity(s.problem, s.ops, 0, 7), InputError);
}

TEST_CASE("D2 at the exact manufactured pair and at a wrong candidate") {
  const auto ops = build_operators({0, 1, 100}, 2);
  const int nn = 101;
  const auto [ms, us] = sine_manufactured_pair(ops);
  const auto mp = manufactured_problem(ms, us, hamiltonian(nn), CouplingSpec::power(1), ops.grid, ops);
  const auto exact = check_D2(mp.problem, ops, std::pair{ms, us}, 50, 11);
  CHECK(exact.pass);
  CHECK(exact.min_value >= -1e-8 * exact.probe_scale);
  CHECK(exact.probes == 50);

  // Shifting u by a large bump breaks the inequality for some probe.
  Field wrong_u = us;
  const Field x = ops.grid.coordinates();
  for (int i = 0; i < nn; ++i) wrong_u[i] += 50 * std::pow(std::sin(3.141592653589793 * x[i]), 4);
  const auto wrong = check_D2(mp.problem, ops, std::pair{ms, wrong_u}, 50, 11);
  CHECK_FALSE(wrong.pass);

  Field bad_bc = us;
  bad_bc[0] += 1;
  CHECK_THROWS_AS(check_D2(mp.problem, ops, std::pair{ms, bad_bc}, 50, 11), InputError);
  Field neg = ms;
  neg[4] = -1;
  CHECK_THROWS_AS(check_D2(mp.problem, ops, std::pair{neg, us}, 50, 11), InputError);
}

TEST_CASE("assumption validators on the example family") {
  for (double gamma : {1.5, 2.0, 3.0}) {
    for (const auto& g : {CouplingSpec::power(1), CouplingSpec::power(2), CouplingSpec::log()}) {
      const auto s = constant_state(20, gamma, g);
      const auto rs = validate_assumptions(s.problem, s.ops, default_p_samples(), default_m_samples());
      for (const auto& r : rs) {
        INFO("gamma=" << gamma << " " << g.describe() << " " << r.id << " " << r.note);
        CHECK(r.pass);
      }
    }
  }
  const auto s = constant_state(20);
  const auto rs = validate_assumptions(s.problem, s.ops, default_p_samples(), default_m_samples());
  // -H + p DpH = p^2 - 1 here, so C = 1 is the exact fitted constant.
  CHECK(find(rs, "lagrangian_coercivity").constant == doctest::Approx(1.0).epsilon(1e-9));
  // H = 1 + p^2 >= p^2 / C - C already holds for C = 1.
  CHECK(find(rs, "hamiltonian_coercivity").constant <= 1.0 + 1e-9);
  // |2p| <= C (|p| + 1): the sample maximum of 2|p| / (|p| + 1) sits at |p| = 1e3.
  CHECK(find(rs, "momentum_growth").constant == doctest::Approx(2000.0 / 1001.0).epsilon(1e-12));
  // int m g(m) >= 0 for power couplings.
  CHECK(find(rs, "coupling_lower_bound").constant == 0.0);
  int domination_rows = 0;
  for (const auto& r : rs) domination_rows += r.id == "coupling_domination";
  CHECK(domination_rows == 3);

  CHECK_THROWS_AS(validate_assumptions(s.problem, s.ops, {}, default_m_samples()), InputError);
  CHECK_THROWS_AS(validate_assumptions(s.problem, s.ops, default_p_samples(), {1.0, -1.0}), InputError);
}

TEST_CASE("Minty gap table across eps") {
  const auto s = constant_state(60);
  const auto cont = epsilon_continuation(s.problem, s.ops, {1e-1, 1e-2, 1e-3, 1e-4});
  REQUIRE(cont.complete);
  const auto rep = minty_gap_report(cont.stages, s.problem, s.ops, 30, 5);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.decreasing);
  for (std::size_t j = 0; j < rep.rows.size(); ++j) {
    CHECK(rep.rows[j].pass);
    CHECK(rep.rows[j].epsilon == cont.stages[j].epsilon);
    if (j > 0) {
      // The correction is linear in eps once the stage solutions settle.
      const double ratio = rep.rows[j - 1].c_eps_bound / rep.rows[j].c_eps_bound;
      CHECK(ratio > 5.0);
      CHECK(ratio < 20.0);
    }
  }
  auto reversed = cont.stages;
  std::swap(reversed.front(), reversed.back());
  CHECK_THROWS_AS(minty_gap_report(reversed, s.problem, s.ops, 30, 5), InputError);
}

TEST_CASE("certification report aggregation and json") {
  CertificationReport rep;
  rep.seed = 9;
  CHECK(rep.pass());
  rep.assumptions.push_back({"x", "s", 1.0, 0.0, true, ""});
  MintyReport m;
  m.rows.push_back({0.1, 1.0, 0.0, 0.0, 1.0, true});
  m.decreasing = false;
  rep.minty = m;
  CHECK_FALSE(rep.pass());
  rep.minty->decreasing = true;
  CHECK(rep.pass());
  rep.assumptions.push_back({"y", "s", 1.0, -1.0, false, ""});
  CHECK_FALSE(rep.pass());

  const auto j = to_json(rep);
  CHECK(j["seed"] == 9);
  CHECK(j["pass"] == false);
  CHECK(j["assumptions"].size() == 2);
  CHECK(j["minty_gaps"]["rows"][0]["epsilon"] == 0.1);
}
