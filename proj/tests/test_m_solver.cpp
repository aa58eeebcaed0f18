#include "mfg/m_solver.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace mfg;

namespace {

// PGS contracts like 1 - 1/cond per sweep; order-4k stiffness needs many sweeps.
constexpr int kPgsSweeps = 2000000;

HamiltonianSpec unit_hamiltonian(int nn) { return {Field::Ones(nn), Field::Zero(nn), 2.0, Field::Zero(nn)}; }

struct Instance {
  DiscreteOperators ops;
  MfgProblem problem;
  ObstacleQp qp;
};

// Small random instance with mixed signs in c so both constraint states occur.
Instance random_instance(std::mt19937_64& rng, int n, int k, double eps) {
  std::uniform_real_distribution<double> dxd(0.5, 1.5);
  const double dx = dxd(rng);
  Instance in;
  in.ops = build_operators({0.0, n * dx, n}, k);
  const int nn = n + 1;
  in.problem = make_problem(in.ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), oracle::random_vector(nn, rng, -2, 2),
                            Field::Ones(nn), Field::Zero(nn), Field(), in.ops, 1e300);
  const Field m0 = oracle::random_vector(nn, rng, 0, 1);
  const Field u0 = oracle::random_vector(nn, rng, -0.5, 0.5);
  in.qp = assemble_obstacle_qp(in.problem, in.ops, eps, m0, u0);
  return in;
}

double max_norm(const Field& f) { return f.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("assemble: zero data gives q = 0") {
  const auto ops = build_operators({0, 1, 12}, 2);
  const int nn = ops.nodes();
  const auto p = make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Constant(nn, -1.0),
                              Field::Ones(nn), Field::Zero(nn), Field(), ops);
  const auto qp = assemble_obstacle_qp(p, ops, 0.5, Field::Zero(nn), Field::Zero(nn));
  CHECK(max_norm(qp.q_field()) == 0.0);
}

TEST_CASE("assemble: constant data gives q = quad * c") {
  const auto ops = build_operators({0, 3, 16}, 2);
  const int nn = ops.nodes();
  const auto p = make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Constant(nn, 0.25),
                              Field::Ones(nn), Field::Zero(nn), Field(), ops, 1e300);
  // c = -0 - H(0) + g(2) - 0.25 = -1 + 2 - 0.25.
  const auto qp = assemble_obstacle_qp(p, ops, 0.1, Field::Constant(nn, 2.0), Field::Zero(nn));
  CHECK(max_norm(qp.q_field() - 0.75 * ops.quad) < 1e-15);
}

TEST_CASE("assemble: matrix matches dense hand assembly") {
  const int n = 8, k = 1;
  const GridInterval g{0, 1, n};
  const auto ops = build_operators(g, k);
  const int nn = g.nodes();
  const auto p = make_problem(g, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Zero(nn), Field::Ones(nn),
                              Field::Zero(nn), Field(), ops);
  const auto qp = assemble_obstacle_qp(p, ops, 0.5, Field::Zero(nn), Field::Zero(nn));
  const Eigen::MatrixXd D = oracle::natural_d2k(n, k, g.dx());
  const Eigen::MatrixXd ref =
      0.5 * (Eigen::MatrixXd(oracle::trapezoid(n, g.dx()).asDiagonal()) + D.transpose() * g.dx() * D);
  CHECK(oracle::max_rel_diff(qp.dense_A(), ref) < 1e-14);
}

TEST_CASE("assemble rejects negative densities and bad eps") {
  const auto ops = build_operators({0, 1, 12}, 2);
  const int nn = ops.nodes();
  const auto p = make_problem(ops.grid, unit_hamiltonian(nn), CouplingSpec::power(1), Field::Zero(nn),
                              Field::Ones(nn), Field::Zero(nn), Field(), ops);
  Field m0 = Field::Zero(nn);
  m0[3] = -1e-9;
  CHECK_THROWS_AS(assemble_obstacle_qp(p, ops, 0.5, m0, Field::Zero(nn)), InputError);
  CHECK_THROWS_AS(assemble_obstacle_qp(p, ops, 1.0, Field::Zero(nn), Field::Zero(nn)), InputError);
  CHECK_THROWS_AS(assemble_obstacle_qp(p, ops, 0.0, Field::Zero(nn), Field::Zero(nn)), InputError);
}

TEST_CASE("solve_lcp small closed-form cases") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const auto qp = ObstacleQp::from_dense(I, Eigen::Vector2d(-1, 2), 1);
  for (auto method : {LcpMethod::active_set, LcpMethod::pgs}) {
    const auto r = solve_lcp(qp, Field::Zero(2), {method, 1e-12, kPgsSweeps});
    CHECK(r.m[0] == doctest::Approx(1.0));
    CHECK(r.m[1] == 0.0);
  }

  std::mt19937_64 rng(1);
  auto in = random_instance(rng, 12, 2, 0.3);
  // q >= 0 gives the zero minimizer.
  ObstacleQp pos = in.qp;
  for (auto& v : pos.q) v = hp::abs(v) + hreal(0.1);
  for (auto method : {LcpMethod::active_set, LcpMethod::pgs})
    CHECK(max_norm(solve_lcp(pos, oracle::random_vector(13, rng, 0, 1), {method, 1e-12, kPgsSweeps}).m) == 0.0);

  // q = -A m_star with m_star > 0: constraint inactive.
  const Field m_star = oracle::random_vector(13, rng, 0.5, 2.0);
  ObstacleQp inner = in.qp;
  const Field Am = in.qp.dense_A() * m_star;
  inner.q = to_h(Field(-Am));
  for (auto method : {LcpMethod::active_set, LcpMethod::pgs})
    CHECK(max_norm(solve_lcp(inner, Field::Zero(13), {method, 1e-12, kPgsSweeps}).m - m_star) < 1e-9);
}

TEST_CASE("solve_lcp matches active-set enumeration") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 12; ++t) {
    const int k = t % 2 ? 1 : 2;
    const int n = k == 2 ? 12 : 8 + t % 5;
    auto in = random_instance(rng, n, k, 0.5);
    const Field ref = oracle::brute_force_lcp(in.qp.dense_A(), in.qp.q_field());
    for (auto method : {LcpMethod::active_set, LcpMethod::pgs}) {
      const auto r = solve_lcp(in.qp, Field::Zero(n + 1), {method, 1e-12, kPgsSweeps});
      CHECK(max_norm(r.m - ref) <= 1e-8);
    }
  }
}

TEST_CASE("uniqueness, energy descent and the a priori bound") {
  std::mt19937_64 rng(77);
  const double tol = 1e-10;
  for (int t = 0; t < 5; ++t) {
    auto in = random_instance(rng, 20, 2, 0.05);
    const int nn = in.ops.nodes();
    const Field init = oracle::random_vector(nn, rng, 0, 3);
    for (auto method : {LcpMethod::active_set, LcpMethod::pgs}) {
      const auto a = solve_lcp(in.qp, Field::Zero(nn), {method, tol, kPgsSweeps});
      const auto b = solve_lcp(in.qp, init, {method, tol, kPgsSweeps});
      CHECK(max_norm(a.m - b.m) <= 10 * tol * std::max(1.0, max_norm(a.m)));
      CHECK(in.qp.objective(a.m) <= in.qp.objective(init));
      CHECK(in.qp.objective(a.m) <= 1e-14);
      CHECK(a.residual <= tol);
      CHECK(a.m.minCoeff() >= 0.0);

      // |m|_M^2 + |D m|_Q^2 <= (2/eps)(|c|_M^2 / eps + 2), with c = M^{-1} q.
      const double eps = in.qp.epsilon;
      const Field c = in.qp.q_field().cwiseQuotient(in.ops.quad);
      const double lhs = a.m.dot(in.ops.quad.cwiseProduct(a.m)) + a.m.dot(to_dense(in.ops.stiffness_m) * a.m);
      const double rhs = 2 / eps * (c.dot(in.ops.quad.cwiseProduct(c)) / eps + 2);
      CHECK(lhs <= rhs);
    }
  }
}

TEST_CASE("variational inequality checks") {
  std::mt19937_64 rng(8);
  auto in = random_instance(rng, 8, 1, 0.5);
  const int nn = in.ops.nodes();
  const auto r = solve_lcp(in.qp, Field::Zero(nn), {LcpMethod::active_set, 1e-12, 0});
  const auto self = check_variational_inequality(in.qp, r.m, {r.m});
  CHECK(self.min_probe == 0.0);

  const auto probes = vi_probe_set(r.m, in.ops, 20, 3);
  CHECK(probes.size() == static_cast<std::size_t>(nn + 20));
  const auto rep = check_variational_inequality(in.qp, r.m, probes);
  CHECK(rep.min_probe >= -1e-10);
  CHECK(rep.min_gradient >= -1e-10);
  CHECK(rep.max_active_gradient <= 1e-10);

  Field neg = Field::Ones(nn);
  neg[0] = -1;
  CHECK_THROWS_AS(check_variational_inequality(in.qp, r.m, {neg}), InputError);
}

TEST_CASE("solve_lcp error paths") {
  std::mt19937_64 rng(4);
  auto in = random_instance(rng, 12, 2, 0.5);
  const int nn = in.ops.nodes();
  Field bad = Field::Zero(nn);
  bad[1] = -1;
  CHECK_THROWS_AS(solve_lcp(in.qp, bad), InputError);
  try {
    solve_lcp(in.qp, Field::Constant(nn, 5.0), {LcpMethod::pgs, 1e-14, 1});
    FAIL("expected nonconvergence");
  } catch (const NonconvergenceError& e) {
    CHECK(e.history().size() == 1);
  }
}
