#include "mfg/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mfg;

namespace {

HamiltonianSpec unit_hamiltonian(int nn, double gamma = 2.0) {
  return {Field::Ones(nn), Field::Zero(nn), gamma, Field::Zero(nn)};
}

MfgProblem constant_problem(const DiscreteOperators& ops, double h) {
  const int nn = ops.nodes();
  return make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Constant(nn, -0.5),
                      Field::Ones(nn), Field::Constant(nn, h), Field(), ops);
}

}  // namespace

TEST_CASE("D_p H matches centered differences of H") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0, 1);
  const int nn = 21;
  for (double gamma : {1.5, 2.0, 3.0}) {
    HamiltonianSpec H{Field::Zero(nn), Field::Zero(nn), gamma, Field::Zero(nn)};
    for (int i = 0; i < nn; ++i) {
      H.a[i] = 0.5 + u01(rng);
      H.b[i] = 2 * u01(rng) - 1;
      H.p_shift[i] = 0.3 * (2 * u01(rng) - 1);
    }
    double worst = 0;
    for (int s = 0; s < 100; ++s) {
      const int i = static_cast<int>(u01(rng) * nn) % nn;
      const double p = 10 * (2 * u01(rng) - 1);
      const double step = 1e-5;
      const double fd = (eval_hamiltonian(H, i, p + step) - eval_hamiltonian(H, i, p - step)) / (2 * step);
      const double dp = eval_dp_hamiltonian(H, i, p);
      worst = std::max(worst, std::abs(fd - dp) / std::max(1.0, std::abs(dp)));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("D_pp H matches differences of D_p H and is positive") {
  const int nn = 3;
  HamiltonianSpec H{Field::Constant(nn, 1.3), Field::Constant(nn, 0.2), 1.5, Field::Zero(nn)};
  for (double p : {-20.0, -1.0, 0.0, 0.4, 7.0}) {
    const double step = 1e-5;
    const double fd = (H.dp(1, p + step) - H.dp(1, p - step)) / (2 * step);
    CHECK(H.dpp(1, p) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(H.dpp(1, p) > 0);
  }
}

TEST_CASE("closed-form Hamiltonian values") {
  const auto H = unit_hamiltonian(5);
  CHECK(eval_hamiltonian(H, 2, 0.0) == 1.0);
  CHECK(eval_hamiltonian(H, 2, 3.0) == doctest::Approx(10.0));
  CHECK(eval_dp_hamiltonian(H, 2, 3.0) == doctest::Approx(6.0));
  // -H + p DpH = p^2 - 1 for this family.
  for (double p : {0.0, 0.5, 2.0, 100.0})
    CHECK(-eval_hamiltonian(H, 0, p) + p * eval_dp_hamiltonian(H, 0, p) == doctest::Approx(p * p - 1));
  CHECK_THROWS_AS(eval_hamiltonian(H, 5, 0.0), InputError);
}

TEST_CASE("couplings are increasing and reject negative densities") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0, 50);
  for (const auto& g : {CouplingSpec::power(1), CouplingSpec::power(0.5), CouplingSpec::power(3), CouplingSpec::log()}) {
    for (int t = 0; t < 200; ++t) {
      double a = d(rng), b = d(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(eval_coupling(g, a) < eval_coupling(g, b));
    }
    CHECK_THROWS_AS(eval_coupling(g, -1e-3), InputError);
  }
  CHECK(eval_coupling(CouplingSpec::power(2), 0.0) == 0.0);
  CHECK(eval_coupling(CouplingSpec::log(1.0), 1.0) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(CouplingSpec::power(0).validate(), InputError);
  CHECK_THROWS_AS(CouplingSpec::log(0).validate(), InputError);
}

TEST_CASE("make_problem validation") {
  const auto ops = build_operators({0, 1, 20}, 2);
  const int nn = ops.nodes();
  const Field one = Field::Ones(nn);
  Field neg = one;
  neg[4] = -0.1;
  CHECK_THROWS_AS(make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), one, neg, one, Field(), ops),
                  InputError);
  CHECK_THROWS_AS(make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Ones(nn - 1), one, one,
                               Field(), ops),
                  InputError);
  CHECK_THROWS_AS(make_problem(ops.grid, unit_hamiltonian(nn, 1.0), CouplingSpec::power(1), one, one, one, Field(), ops),
                  InputError);
  auto H = unit_hamiltonian(nn);
  H.a[3] = 0;
  CHECK_THROWS_AS(make_problem(ops.grid, H, CouplingSpec::power(1), one, one, one, Field(), ops), InputError);

  const auto p = make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), one, 2 * one, one, Field(), ops);
  CHECK(p.phi_mass == doctest::Approx(2.0));
  CHECK(p.warnings.size() == 1);
  CHECK((p.xi + p.h).cwiseAbs().maxCoeff() == 0.0);
  const auto q = make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), one, one, one, Field(), ops);
  CHECK(q.warnings.empty());
}

TEST_CASE("hat transform examples") {
  const auto ops = build_operators({0, 1, 20}, 2);
  const int nn = ops.nodes();
  const auto p0 = constant_problem(ops, 0.0);
  const auto t0 = hat_transform(p0, ops);
  CHECK((t0.V - p0.V).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t0.H.p_shift).cwiseAbs().maxCoeff() == 0.0);

  const auto pc = constant_problem(ops, 0.7);
  const auto tc = hat_transform(pc, ops);
  CHECK((tc.V - (pc.V.array() + 0.7).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((tc.xi - (pc.xi.array() + 0.7).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(tc.H.p_shift.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(tc.homogeneous());

  const Field x = ops.grid.coordinates();
  const auto px = make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Zero(nn),
                               Field::Ones(nn), x, Field(), ops);
  const auto tx = hat_transform(px, ops);
  CHECK((tx.H.p_shift.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("hat transform preserves the equation residuals") {
  const auto ops = build_operators({0, 2, 30}, 2);
  const int nn = ops.nodes();
  std::mt19937_64 rng(9);
  HamiltonianSpec H{oracle::random_vector(nn, rng, 0.5, 1.5), oracle::random_vector(nn, rng), 2.5, Field::Zero(nn)};
  const Field x = ops.grid.coordinates();
  const Field h = (x.array().sin() + 0.3 * x.array()).matrix();
  const auto p = make_problem(ops.grid, H, CouplingSpec::log(), oracle::random_vector(nn, rng), Field::Ones(nn), h,
                              Field(), ops);
  const auto t = hat_transform(p, ops);
  for (int trial = 0; trial < 10; ++trial) {
    const Field m = oracle::random_vector(nn, rng, 0, 2);
    const Field u = oracle::random_vector(nn, rng);
    const auto [a1, a2] = equation_residuals(p, ops, m, u);
    const auto [b1, b2] = equation_residuals(t, ops, m, u - h);
    CHECK((a1 - b1).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((a2 - b2).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("manufactured constant pairs") {
  const auto ops = build_operators({0, 1, 20}, 2);
  const int nn = ops.nodes();
  const auto mp = manufactured_problem(Field::Ones(nn), Field::Constant(nn, 0.5), unit_hamiltonian(nn),
                                       CouplingSpec::power(1), ops.grid, ops);
  CHECK((mp.problem.V.array() + 0.5).abs().maxCoeff() < 1e-15);
  CHECK((mp.problem.phi.array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((mp.problem.h.array() - 0.5).abs().maxCoeff() == 0.0);

  const auto mz = manufactured_problem(Field::Ones(nn), Field::Zero(nn), unit_hamiltonian(nn), CouplingSpec::power(1),
                                       ops.grid, ops);
  // V = g(1) - H(x, 0) = 1 - 1.
  CHECK(mz.problem.V.cwiseAbs().maxCoeff() < 1e-15);
  CHECK((mz.problem.phi.array() - 1.0).abs().maxCoeff() < 1e-15);

  Field bad = Field::Ones(nn);
  bad[2] = -1;
  CHECK_THROWS_AS(manufactured_problem(bad, Field::Zero(nn), unit_hamiltonian(nn), CouplingSpec::power(1), ops.grid, ops),
                  InputError);
}

TEST_CASE("sine manufactured pair against analytic derivatives") {
  const GridInterval g{0, 1, 400};
  const auto ops = build_operators(g, 2);
  const int nn = g.nodes();
  const auto [ms, us] = sine_manufactured_pair(ops);
  const auto mp = manufactured_problem(ms, us, unit_hamiltonian(nn), CouplingSpec::power(1), g, ops);
  CHECK(mp.problem.phi.minCoeff() >= 0.0);
  CHECK(integrate(ops, ms) == doctest::Approx(1.0).epsilon(1e-12));

  const auto [r1, r2] = equation_residuals(mp.problem, ops, ms, us);
  CHECK(r1.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(r2.cwiseAbs().maxCoeff() <= 1e-12);

  // Continuum formulas: m = (1 + 0.2 sin^2)/1.1, u = 0.1 sin, H = 1 + u'^2.
  const double pi = std::numbers::pi;
  double worst_v = 0, worst_phi = 0;
  for (int i = 2; i <= g.n - 2; ++i) {
    const double x = g.node(i);
    const double s = std::sin(pi * x), c = std::cos(pi * x);
    const double m = (1 + 0.2 * s * s) / 1.1, dm = 0.2 * pi * std::sin(2 * pi * x) / 1.1;
    const double u = 0.1 * s, du = 0.1 * pi * c, d2u = -0.1 * pi * pi * s;
    const double V = -u - (1 + du * du) + m;
    const double phi = m - 2 * (dm * du + m * d2u);
    CHECK(ms[i] == doctest::Approx(m).epsilon(1e-12));
    worst_v = std::max(worst_v, std::abs(V - mp.problem.V[i]));
    worst_phi = std::max(worst_phi, std::abs(phi - mp.problem.phi[i]));
  }
  CHECK(worst_v < 1e-4);
  CHECK(worst_phi < 1e-3);
}
