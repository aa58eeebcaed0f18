// Python bindings for the core solver. Fields cross as 1-D float64 numpy arrays.

#include "mfg/certify.hpp"
#include "mfg/cli.hpp"
#include "mfg/fixed_point.hpp"
#include "mfg/m_solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace mfg;

namespace {

py::dict monitors_dict(const AprioriReport& r) {
  py::dict d;
  d["E_coupling"] = r.E_coupling;
  d["E_kinetic"] = r.E_kinetic;
  d["E_source"] = r.E_source;
  d["E_reg"] = r.E_reg;
  d["W1gamma_u"] = r.W1gamma_u;
  d["sqrt_eps_H2k"] = r.sqrt_eps_H2k;
  return d;
}

py::dict stage_dict(const RegularizedSolution& s) {
  py::dict d;
  d["epsilon"] = s.epsilon;
  d["m"] = s.m;
  d["u_hat"] = s.u_hat;
  d["iterations"] = s.iterations;
  d["converged"] = s.converged;
  d["residual_history"] = s.residual_history;
  d["fixed_point_residual"] = s.fixed_point_residual;
  d["vi_residual"] = s.vi_residual;
  d["galerkin_residual"] = s.galerkin_residual;
  d["monitors"] = monitors_dict(s.monitors);
  return d;
}

StageOptions stage_options(const std::string& method, double theta, double tol, int max_iter, std::uint64_t seed) {
  StageOptions o;
  if (method == "newton")
    o.method = StageMethod::newton;
  else if (method == "picard")
    o.method = StageMethod::picard;
  else
    throw InputError("method must be 'newton' or 'picard'");
  o.theta = theta;
  o.tol = tol;
  o.max_iter = max_iter;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Weak solutions of first-order stationary mean-field games with Dirichlet data";

  py::register_exception<InputError>(mod, "InputError", PyExc_ValueError);
  py::register_exception<NonconvergenceError>(mod, "NonconvergenceError", PyExc_RuntimeError);

  py::class_<GridInterval>(mod, "GridInterval")
      .def(py::init([](double x_min, double x_max, int n) { return GridInterval{x_min, x_max, n}; }),
           py::arg("x_min"), py::arg("x_max"), py::arg("n"))
      .def_readonly("x_min", &GridInterval::x_min)
      .def_readonly("x_max", &GridInterval::x_max)
      .def_readonly("n", &GridInterval::n)
      .def_property_readonly("dx", &GridInterval::dx)
      .def("nodes", &GridInterval::nodes)
      .def("coordinates", &GridInterval::coordinates);

  py::class_<DiscreteOperators>(mod, "DiscreteOperators")
      .def_readonly("grid", &DiscreteOperators::grid)
      .def_readonly("k", &DiscreteOperators::k)
      .def_readonly("quad", &DiscreteOperators::quad)
      .def("nodes", &DiscreteOperators::nodes)
      .def("gradient", [](const DiscreteOperators& o, const Field& u) { return apply_gradient(o, u); })
      .def("divergence", [](const DiscreteOperators& o, const Field& f) { return apply_divergence(o, f); })
      .def("integrate", [](const DiscreteOperators& o, const Field& f) { return integrate(o, f); })
      .def("d2k_natural", [](const DiscreteOperators& o, const Field& w) { return apply_d2k_natural(o, w); })
      .def("d2k_clamped", [](const DiscreteOperators& o, const Field& w) { return apply_d2k_clamped(o, w); });

  mod.def("build_operators", &build_operators, py::arg("grid"), py::arg("k") = 2);

  py::class_<HamiltonianSpec>(mod, "HamiltonianSpec")
      .def(py::init([](Field a, Field b, double gamma) { return HamiltonianSpec{a, b, gamma, Field::Zero(a.size())}; }),
           py::arg("a"), py::arg("b"), py::arg("gamma") = 2.0)
      .def_readonly("a", &HamiltonianSpec::a)
      .def_readonly("b", &HamiltonianSpec::b)
      .def_readonly("gamma", &HamiltonianSpec::gamma);

  py::class_<CouplingSpec>(mod, "CouplingSpec")
      .def_static("power", &CouplingSpec::power, py::arg("alpha") = 1.0)
      .def_static("log", &CouplingSpec::log, py::arg("floor") = 1e-8)
      .def("__repr__", &CouplingSpec::describe);

  mod.def("eval_hamiltonian", &eval_hamiltonian, py::arg("spec"), py::arg("node"), py::arg("p"));
  mod.def("eval_dp_hamiltonian", &eval_dp_hamiltonian, py::arg("spec"), py::arg("node"), py::arg("p"));
  mod.def("eval_coupling", &eval_coupling, py::arg("g"), py::arg("m"));

  py::class_<MfgProblem>(mod, "MfgProblem")
      .def_readonly("grid", &MfgProblem::grid)
      .def_readonly("V", &MfgProblem::V)
      .def_readonly("phi", &MfgProblem::phi)
      .def_readonly("h", &MfgProblem::h)
      .def_readonly("xi", &MfgProblem::xi)
      .def_readonly("phi_mass", &MfgProblem::phi_mass)
      .def_readonly("warnings", &MfgProblem::warnings);

  mod.def(
      "make_problem",
      [](const DiscreteOperators& ops, const HamiltonianSpec& H, const CouplingSpec& g, Field V, Field phi, Field h,
         Field xi) { return make_problem(ops.grid, H, g, std::move(V), std::move(phi), std::move(h), std::move(xi), ops); },
      py::arg("ops"), py::arg("H"), py::arg("g"), py::arg("V"), py::arg("phi"), py::arg("h"), py::arg("xi") = Field());

  mod.def("sine_manufactured_pair", &sine_manufactured_pair, py::arg("ops"));
  mod.def(
      "manufactured_problem",
      [](const DiscreteOperators& ops, const Field& m_star, const Field& u_star, const HamiltonianSpec& H,
         const CouplingSpec& g) {
        auto mp = manufactured_problem(m_star, u_star, H, g, ops.grid, ops);
        return py::make_tuple(mp.problem, mp.m_exact, mp.u_exact);
      },
      py::arg("ops"), py::arg("m_star"), py::arg("u_star"), py::arg("H"), py::arg("g"));
  mod.def("equation_residuals", &equation_residuals, py::arg("problem"), py::arg("ops"), py::arg("m"), py::arg("u"));

  mod.def(
      "solve_lcp",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& q, const std::string& method, double tol, int max_iter) {
        const int n = static_cast<int>(q.size());
        const auto qp = ObstacleQp::from_dense(A, q, n - 1);
        LcpOptions o;
        if (method == "pgs")
          o.method = LcpMethod::pgs;
        else if (method != "active_set")
          throw InputError("method must be 'active_set' or 'pgs'");
        o.tol = tol;
        o.max_iter = max_iter;
        return solve_lcp(qp, Field::Zero(n), o).m;
      },
      py::arg("A"), py::arg("q"), py::arg("method") = "active_set", py::arg("tol") = 1e-10, py::arg("max_iter") = 0);

  mod.def("default_schedule", &default_schedule);
  mod.def(
      "solve",
      [](const MfgProblem& problem, const DiscreteOperators& ops, std::vector<double> schedule, const std::string& method,
         double theta, double tol, int max_iter, std::uint64_t seed) {
        if (schedule.empty()) schedule = default_schedule();
        ContinuationResult res;
        {
          py::gil_scoped_release release;
          res = epsilon_continuation(problem, ops, schedule, stage_options(method, theta, tol, max_iter, seed));
        }
        py::dict d;
        d["m"] = res.m;
        d["u"] = res.u;
        d["complete"] = res.complete;
        d["failure"] = res.failure;
        py::list stages;
        for (const auto& s : res.stages) stages.append(stage_dict(s));
        d["stages"] = stages;
        return d;
      },
      py::arg("problem"), py::arg("ops"), py::arg("schedule") = std::vector<double>{}, py::arg("method") = "newton",
      py::arg("theta") = 0.5, py::arg("tol") = 1e-10, py::arg("max_iter") = 0, py::arg("seed") = 0);

  mod.def(
      "check_monotonicity",
      [](const MfgProblem& problem, const DiscreteOperators& ops, int pairs, std::uint64_t seed,
         std::optional<double> epsilon) {
        const auto r = check_monotonicity(problem, ops, pairs, seed, epsilon);
        py::dict d;
        d["pass"] = r.pass;
        d["min_value"] = r.min_value;
        d["min_scaled_value"] = r.min_scaled_value;
        d["min_bound_margin"] = r.min_bound_margin;
        d["max_identity_defect"] = r.max_identity_defect;
        return d;
      },
      py::arg("problem"), py::arg("ops"), py::arg("pairs") = 100, py::arg("seed") = 0,
      py::arg("epsilon") = std::nullopt);

  mod.def(
      "check_D2",
      [](const MfgProblem& problem, const DiscreteOperators& ops, const Field& m, const Field& u, int probes,
         std::uint64_t seed, double tol) {
        const auto r = check_D2(problem, ops, std::pair{m, u}, probes, seed, tol);
        py::dict d;
        d["pass"] = r.pass;
        d["min_value"] = r.min_value;
        d["probe_scale"] = r.probe_scale;
        return d;
      },
      py::arg("problem"), py::arg("ops"), py::arg("m"), py::arg("u"), py::arg("probes") = 50, py::arg("seed") = 0,
      py::arg("tol") = 1e-3);

  mod.def(
      "validate_assumptions",
      [](const MfgProblem& problem, const DiscreteOperators& ops) {
        py::list out;
        for (const auto& r : validate_assumptions(problem, ops, default_p_samples(), default_m_samples())) {
          py::dict d;
          d["id"] = r.id;
          d["statement"] = r.statement;
          d["constant"] = r.constant;
          d["margin"] = r.margin;
          d["pass"] = r.pass;
          d["note"] = r.note;
          out.append(d);
        }
        return out;
      },
      py::arg("problem"), py::arg("ops"));

  mod.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "mfg");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        py::gil_scoped_release release;
        return cli_main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line driver with the given arguments and returns its exit code.");
}
