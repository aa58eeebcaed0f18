#include "mfg/cli.hpp"

#include "mfg/certify.hpp"
#include "mfg/log.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace mfg {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header_comment, const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# " << header_comment << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) out_ << (c ? "," : "") << columns[c];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    for (std::size_t c = 0; c < values.size(); ++c) out_ << (c ? "," : "") << fmt17(values[c]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

struct Context {
  const RunConfig& config;
  fs::path out;
  std::string hash;

  std::string header() const {
    return "mfg " + mode_name(config.mode) + " config_hash=" + hash + " seed=" + std::to_string(config.seed);
  }

  ojson json_header() const {
    return ojson{{"mode", mode_name(config.mode)}, {"config_hash", hash}, {"seed", config.seed}};
  }

  void write_json(const std::string& name, const ojson& body) const {
    ojson doc;
    doc["header"] = json_header();
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    std::ofstream f(out / name);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    f << doc.dump(2) << "\n";
  }
};

void write_fields(const Context& ctx, const MfgProblem& problem, const Field& m, const Field& u) {
  CsvWriter w(ctx.out / "fields.csv", ctx.header(), {"x", "m", "u", "V", "phi"});
  for (int i = 0; i < problem.nodes(); ++i)
    w.row({problem.grid.node(i), m[i], u[i], problem.V[i], problem.phi[i]});
}

void write_convergence(const Context& ctx, const std::vector<RegularizedSolution>& stages) {
  CsvWriter w(ctx.out / "convergence.csv", ctx.header(), {"stage", "epsilon", "iteration", "update", "residual"});
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    for (std::size_t it = 0; it < st.update_history.size(); ++it) {
      const double res = it < st.residual_history.size() ? st.residual_history[it] : 0.0;
      w.row({double(s), st.epsilon, double(it + 1), st.update_history[it], res});
    }
  }
}

void write_monitors(const Context& ctx, const std::vector<RegularizedSolution>& stages) {
  CsvWriter w(ctx.out / "monitors.csv", ctx.header(),
              {"epsilon", "iterations", "converged", "E_coupling", "E_kinetic", "E_source", "E_reg", "W1gamma_u",
               "sqrt_eps_H2k", "vi_residual", "galerkin_residual", "fixed_point_residual"});
  for (const auto& st : stages) {
    const auto& mo = st.monitors;
    w.row({st.epsilon, double(st.iterations), st.converged ? 1.0 : 0.0, mo.E_coupling, mo.E_kinetic, mo.E_source,
           mo.E_reg, mo.W1gamma_u, mo.sqrt_eps_H2k, st.vi_residual, st.galerkin_residual, st.fixed_point_residual});
  }
}

void write_stages(const Context& ctx, const MfgProblem& problem, const std::vector<RegularizedSolution>& stages) {
  CsvWriter w(ctx.out / "stages.csv", ctx.header(), {"epsilon", "node", "x", "m", "u_hat"});
  for (const auto& st : stages) {
    if (!st.converged) continue;
    for (int i = 0; i < problem.nodes(); ++i) w.row({st.epsilon, double(i), problem.grid.node(i), st.m[i], st.u_hat[i]});
  }
}

ojson stage_json(const RegularizedSolution& st) {
  ojson e;
  e["epsilon"] = st.epsilon;
  e["converged"] = st.converged;
  e["iterations"] = st.iterations;
  e["method"] = st.method == StageMethod::newton ? "newton" : "picard";
  e["message"] = st.message;
  e["vi_residual"] = st.vi_residual;
  e["vi_scale"] = st.vi_scale;
  e["galerkin_residual"] = st.galerkin_residual;
  e["fixed_point_residual"] = st.fixed_point_residual;
  e["max_iterate_norm"] = st.max_iterate_norm;
  const auto& mo = st.monitors;
  e["monitors"] = {{"E_coupling", mo.E_coupling}, {"E_kinetic", mo.E_kinetic},   {"E_source", mo.E_source},
                   {"E_reg", mo.E_reg},           {"W1gamma_u", mo.W1gamma_u}, {"sqrt_eps_H2k", mo.sqrt_eps_H2k}};
  return e;
}

ojson warnings_json(const MfgProblem& p) {
  ojson w = ojson::array();
  for (const auto& s : p.warnings) w.push_back(s);
  return w;
}

int run_solve(const Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const auto t0 = Clock::now();
  const DiscreteOperators ops = build_operators(cfg.grid, cfg.k);
  const MfgProblem problem = build_problem(cfg, ops);
  for (const auto& w : problem.warnings) spdlog::warn("{}", w);
  const ContinuationResult res = epsilon_continuation(problem, ops, cfg.epsilon_schedule, cfg.stage_options());
  const double elapsed = seconds_since(t0);

  write_convergence(ctx, res.stages);
  write_monitors(ctx, res.stages);
  write_stages(ctx, problem, res.stages);
  if (res.complete) write_fields(ctx, problem, res.m, res.u);

  ojson body;
  body["complete"] = res.complete;
  body["failure"] = res.failure;
  body["grid"] = {{"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max}, {"n", cfg.grid.n}, {"k", cfg.k}};
  body["phi_mass"] = problem.phi_mass;
  body["warnings"] = warnings_json(problem);
  ojson stages = ojson::array();
  for (const auto& st : res.stages) stages.push_back(stage_json(st));
  body["stages"] = stages;
  body["timings"] = {{"total_seconds", elapsed}};
  ctx.write_json("report.json", body);

  if (!res.complete) {
    std::cerr << "mfg: continuation failed: " << res.failure << "\n";
    return exit_nonconvergence;
  }
  return exit_ok;
}

int run_mms(const Context& ctx) {
  const RunConfig& cfg = ctx.config;
  CsvWriter table(ctx.out / "mms_errors.csv", ctx.header(),
                  {"n", "dx", "err_m", "err_u", "ratio_m", "ratio_u", "self_diff_m", "self_diff_u", "self_ratio_m"});
  ojson runs = ojson::array();
  const auto t_all = Clock::now();
  double prev_em = 0, prev_eu = 0, prev_dm = 0;
  Field prev_m, prev_u;
  int prev_n = 0;
  bool ok = true;

  for (std::size_t r = 0; r < cfg.mms.n_values.size(); ++r) {
    const auto t0 = Clock::now();
    GridInterval grid = cfg.grid;
    grid.n = cfg.mms.n_values[r];
    const DiscreteOperators ops = build_operators(grid, cfg.k);
    const int nn = grid.nodes();
    std::pair<Field, Field> star = cfg.mms.pair == "sine" ? sine_manufactured_pair(ops)
                                                          : std::pair<Field, Field>{Field::Ones(nn), Field::Constant(nn, 0.5)};
    const ManufacturedProblem mp =
        manufactured_problem(star.first, star.second, build_hamiltonian(cfg, grid), build_coupling(cfg), grid, ops);
    for (const auto& w : mp.problem.warnings) spdlog::warn("n={}: {}", grid.n, w);
    const ContinuationResult res = epsilon_continuation(mp.problem, ops, cfg.epsilon_schedule, cfg.stage_options());

    ojson run;
    run["n"] = grid.n;
    run["complete"] = res.complete;
    run["failure"] = res.failure;
    run["phi_mass"] = mp.problem.phi_mass;
    run["seconds"] = seconds_since(t0);
    if (!res.complete) {
      ok = false;
      runs.push_back(run);
      std::cerr << "mfg: mms run n=" << grid.n << " failed: " << res.failure << "\n";
      continue;
    }
    const double em = (res.m - mp.m_exact).cwiseAbs().maxCoeff();
    const double eu = (res.u - mp.u_exact).cwiseAbs().maxCoeff();
    // Difference to the previous refinement on the shared nodes.
    double dm = 0, du = 0;
    const bool nested = prev_n > 0 && grid.n % prev_n == 0;
    if (nested) {
      const int stride = grid.n / prev_n;
      for (int i = 0; i <= prev_n; ++i) {
        dm = std::max(dm, std::abs(res.m[i * stride] - prev_m[i]));
        du = std::max(du, std::abs(res.u[i * stride] - prev_u[i]));
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.row({double(grid.n), grid.dx(), em, eu, prev_em > 0 ? prev_em / em : nan, prev_eu > 0 ? prev_eu / eu : nan,
               nested ? dm : nan, nested ? du : nan, nested && prev_dm > 0 ? prev_dm / dm : nan});
    run["err_m"] = em;
    run["err_u"] = eu;
    if (nested) run["self_diff_m"] = dm;
    runs.push_back(run);

    prev_em = em;
    prev_eu = eu;
    prev_dm = nested ? dm : 0;
    prev_m = res.m;
    prev_u = res.u;
    prev_n = grid.n;
    if (r + 1 == cfg.mms.n_values.size()) {
      write_fields(ctx, mp.problem, res.m, res.u);
      write_monitors(ctx, res.stages);
      write_convergence(ctx, res.stages);
    }
  }
  ojson body;
  body["pair"] = cfg.mms.pair;
  body["runs"] = runs;
  body["timings"] = {{"total_seconds", seconds_since(t_all)}};
  ctx.write_json("report.json", body);
  return ok ? exit_ok : exit_nonconvergence;
}

int run_certify(const Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const auto t0 = Clock::now();
  const std::string dir = cfg.certify.run_dir.empty() ? ctx.out.string() : cfg.certify.run_dir;
  const SavedRun saved = load_run(dir);
  const DiscreteOperators ops = build_operators(cfg.grid, cfg.k);
  const MfgProblem problem = build_problem(cfg, ops);
  if (saved.m.size() != problem.nodes())
    throw ConfigError("grid.n", "saved run in " + dir + " has " + std::to_string(saved.m.size()) +
                                    " nodes, config has " + std::to_string(problem.nodes()));

  CertificationReport report;
  report.seed = cfg.seed;
  report.d2 = check_D2(problem, ops, std::pair<Field, Field>{saved.m, saved.u}, cfg.certify.probes, cfg.seed,
                       cfg.tolerances.d2);
  if (!saved.stages.empty())
    report.minty = minty_gap_report(saved.stages, problem, ops, cfg.certify.probes, cfg.seed);
  ctx.write_json("certification.json", to_json(report));
  ctx.write_json("report.json", ojson{{"run_dir", dir}, {"timings", {{"total_seconds", seconds_since(t0)}}}});
  if (!report.pass()) {
    std::cerr << "mfg: certification failed (see certification.json)\n";
    return exit_certification_failed;
  }
  return exit_ok;
}

int run_assumptions(const Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const auto t0 = Clock::now();
  const DiscreteOperators ops = build_operators(cfg.grid, cfg.k);
  const MfgProblem problem = build_problem(cfg, ops);
  CertificationReport report;
  report.seed = cfg.seed;
  report.assumptions = validate_assumptions(problem, ops, default_p_samples(), default_m_samples());
  report.monotonicity = check_monotonicity(problem, ops, cfg.certify.pairs, cfg.seed);
  report.monotonicity_eps =
      check_monotonicity(problem, ops, cfg.certify.pairs, cfg.seed, cfg.epsilon_schedule.front());
  ctx.write_json("certification.json", to_json(report));
  ctx.write_json("report.json", ojson{{"timings", {{"total_seconds", seconds_since(t0)}}}});
  if (!report.pass()) {
    std::cerr << "mfg: assumption checks failed (see certification.json)\n";
    return exit_certification_failed;
  }
  return exit_ok;
}

std::vector<std::vector<double>> read_csv(const fs::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  bool header_seen = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      std::stringstream ss(line);
      std::string col;
      for (const auto& want : expected) {
        if (!std::getline(ss, col, ',') || col != want)
          throw InputError(path.string() + ": expected column '" + want + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError(path.string() + ": bad number '" + cell + "'");
      }
    }
    if (row.size() < expected.size()) throw InputError(path.string() + ": short row");
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw InputError(path.string() + ": missing header");
  return rows;
}

}  // namespace

SavedRun load_run(const std::string& dir) {
  SavedRun run;
  const auto rows = read_csv(fs::path(dir) / "fields.csv", {"x", "m", "u"});
  const auto n = static_cast<Eigen::Index>(rows.size());
  run.x.resize(n);
  run.m.resize(n);
  run.u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    run.x[i] = rows[i][0];
    run.m[i] = rows[i][1];
    run.u[i] = rows[i][2];
  }
  const fs::path stages_path = fs::path(dir) / "stages.csv";
  if (!fs::exists(stages_path)) return run;
  std::vector<double> order;
  std::map<double, std::vector<std::pair<double, double>>> by_eps;
  for (const auto& r : read_csv(stages_path, {"epsilon", "node", "x", "m", "u_hat"})) {
    if (!by_eps.count(r[0])) order.push_back(r[0]);
    by_eps[r[0]].emplace_back(r[3], r[4]);
  }
  for (double eps : order) {
    const auto& v = by_eps[eps];
    if (static_cast<Eigen::Index>(v.size()) != n) throw InputError("stages.csv: stage size differs from fields.csv");
    RegularizedSolution st;
    st.epsilon = eps;
    st.converged = true;
    st.m.resize(n);
    st.u_hat.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      st.m[i] = v[i].first;
      st.u_hat[i] = v[i].second;
    }
    run.stages.push_back(std::move(st));
  }
  return run;
}

int run(const RunConfig& config) {
  configure_logging();
  try {
    config.validate();
    fs::create_directories(config.output_dir);
    const Context ctx{config, fs::path(config.output_dir), config_hash(config.document)};
    spdlog::info("mode {} config_hash={} seed={}", mode_name(config.mode), ctx.hash, config.seed);
    switch (config.mode) {
      case RunMode::solve: return run_solve(ctx);
      case RunMode::mms: return run_mms(ctx);
      case RunMode::certify: return run_certify(ctx);
      case RunMode::assumptions: return run_assumptions(ctx);
    }
  } catch (const InputError& e) {
    std::cerr << "mfg: " << e.what() << "\n";
    return exit_config_error;
  } catch (const NonconvergenceError& e) {
    std::cerr << "mfg: " << e.what() << "\n";
    return exit_nonconvergence;
  } catch (const std::exception& e) {
    std::cerr << "mfg: " << e.what() << "\n";
    return exit_config_error;
  }
  return exit_config_error;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Stationary first-order mean-field game solver with Dirichlet data"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir, schedule;
  int n = 0, k = 0;
  std::uint64_t seed = 0;
  double theta = 0;

  const std::pair<const char*, const char*> modes[] = {
      {"solve", "run the eps continuation and write fields and monitors"},
      {"mms", "manufactured-solution refinement study"},
      {"certify", "D2 probes and Minty-gap table for a solved run directory"},
      {"assumptions", "structural checks and monotonicity only, no solve"},
  };
  for (const auto& [name, help] : modes) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "problem configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--n", n, "number of cells");
    sub->add_option("--k", k, "regularization order");
    sub->add_option("--seed", seed, "probe seed");
    sub->add_option("--eps-schedule", schedule, "comma-separated decreasing eps values");
    sub->add_option("--theta", theta, "damping for the Picard stage solver");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  configure_logging();
  try {
    const std::string mode = app.get_subcommands().front()->get_name();
    CLI::App* sub = app.get_subcommands().front();
    Overrides ov;
    if (sub->count("--n")) ov.n = n;
    if (sub->count("--k")) ov.k = k;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--eps-schedule")) ov.epsilon_schedule = parse_real_list(schedule, "--eps-schedule");
    if (sub->count("--theta")) ov.theta = theta;
    const RunConfig cfg = parse_run_config(read_json_file(config_path), parse_mode(mode), out_dir, ov);
    return run(cfg);
  } catch (const InputError& e) {
    std::cerr << "mfg: " << e.what() << "\n";
    return exit_config_error;
  }
}

}  // namespace mfg
