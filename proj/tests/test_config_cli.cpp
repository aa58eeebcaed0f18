#include "mfg/cli.hpp"
#include "mfg/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace mfg;
namespace fs = std::filesystem;

namespace {

const std::string kConstantConfig = std::string(MFG_SOURCE_DIR) + "/configs/constant_state.json";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfg_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

// Constant state on a coarser grid to keep the end-to-end runs quick.
nlohmann::json small_constant(int n = 40) {
  auto doc = read_json_file(kConstantConfig);
  doc["grid"]["n"] = n;
  return doc;
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mfg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string field_of(const nlohmann::json& doc, RunMode mode = RunMode::solve) {
  try {
    parse_run_config(doc, mode, "/tmp");
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("constant-state config parses") {
  const auto cfg = parse_run_config(read_json_file(kConstantConfig), RunMode::solve, "out");
  CHECK(cfg.grid.n == 200);
  CHECK(cfg.grid.x_min == 0.0);
  CHECK(cfg.grid.x_max == 1.0);
  CHECK(cfg.k == 2);
  CHECK(cfg.epsilon_schedule == std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6});
  CHECK(cfg.method == StageMethod::newton);
  CHECK(cfg.seed == 0);
  CHECK(cfg.certify.probes == 50);
  CHECK(cfg.tolerances.d2 == 1e-3);

  const auto ops = build_operators(cfg.grid, cfg.k);
  const auto p = build_problem(cfg, ops);
  CHECK((p.xi + p.h).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.phi_mass == doctest::Approx(1.0));
}

TEST_CASE("overrides take precedence over the document") {
  Overrides o;
  o.n = 64;
  o.k = 1;
  o.seed = 99;
  o.epsilon_schedule = std::vector<double>{0.5, 0.05};
  o.theta = 0.1;
  const auto cfg = parse_run_config(read_json_file(kConstantConfig), RunMode::mms, "out", o);
  CHECK(cfg.grid.n == 64);
  CHECK(cfg.k == 1);
  CHECK(cfg.seed == 99);
  CHECK(cfg.epsilon_schedule == std::vector<double>{0.5, 0.05});
  CHECK(cfg.theta == 0.1);
  CHECK(cfg.mms.n_values == std::vector<int>{64});
  CHECK(parse_real_list("1e-1, 2e-2", "x") == std::vector<double>{1e-1, 2e-2});
  CHECK_THROWS_AS(parse_real_list("1e-1,abc", "x"), ConfigError);
}

TEST_CASE("config errors name the offending field") {
  const auto base = read_json_file(kConstantConfig);
  auto d = base;
  d["solver"]["eps_schedule"] = {1e-2, 1e-1};
  CHECK(field_of(d) == "solver.eps_schedule");
  d = base;
  d["k"] = 0;
  CHECK(field_of(d) == "k");
  d = base;
  d["grid"]["n"] = 5;
  CHECK(field_of(d) == "grid.n");
  d = base;
  d["coupling"]["kind"] = "cubic";
  CHECK(field_of(d) == "coupling.kind");
  d = base;
  d["solver"]["method"] = "bisection";
  CHECK(field_of(d) == "solver.method");
  d = base;
  d["solver"]["theta"] = 1.5;
  CHECK(field_of(d) == "solver.theta");
  d = base;
  d["certify"]["probes"] = 0;
  CHECK(field_of(d) == "certify.probes");

  // Field-valued entries are checked when the problem is built.
  d = base;
  d["phi"] = -1.0;
  auto cfg = parse_run_config(d, RunMode::solve, "/tmp");
  auto ops = build_operators(cfg.grid, cfg.k);
  try {
    build_problem(cfg, ops);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "phi");
    CHECK(std::string(e.what()).find("config field 'phi'") == 0);
  }
  d = base;
  d["V"] = std::vector<double>(7, 0.0);
  cfg = parse_run_config(d, RunMode::solve, "/tmp");
  CHECK_THROWS_AS(build_problem(cfg, ops), ConfigError);
  d = base;
  d["hamiltonian"]["gamma"] = 1.0;
  CHECK(field_of(d) == "hamiltonian.gamma");

  CHECK_THROWS_AS(read_json_file("/nonexistent/config.json"), ConfigError);
  CHECK_THROWS_AS(parse_mode("optimize"), ConfigError);
}

TEST_CASE("named fields and config hash") {
  const GridInterval g{0, 2, 4};
  CHECK((*named_field("t", g) - Field::LinSpaced(5, 0, 1)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((*named_field("x", g) - Field::LinSpaced(5, 0, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(named_field("one", g)->sum() == 5.0);
  CHECK_FALSE(named_field("nope", g).has_value());

  const auto doc = read_json_file(kConstantConfig);
  const std::string h = config_hash(doc);
  CHECK(h.size() == 16);
  CHECK(h == config_hash(doc));
  auto other = doc;
  other["seed"] = 1;
  CHECK(h != config_hash(other));
}

TEST_CASE("solve run writes fields close to the constant state") {
  const auto dir = scratch("solve");
  const auto cfg_path = write_config(dir, small_constant());
  CHECK(invoke({"solve", "--config", cfg_path.string(), "--out", (dir / "a").string()}) == exit_ok);
  const auto run = load_run((dir / "a").string());
  REQUIRE(run.m.size() == 41);
  CHECK((run.m.array() - 1.0).abs().maxCoeff() <= 1e-3);
  CHECK((run.u.array() - 0.5).abs().maxCoeff() <= 1e-3);
  CHECK(run.stages.size() == 6);
  CHECK(run.stages.front().epsilon == 1e-1);

  for (const char* f : {"fields.csv", "convergence.csv", "monitors.csv", "stages.csv", "report.json"})
    CHECK(fs::exists(dir / "a" / f));
  const std::string fields = slurp(dir / "a" / "fields.csv");
  const std::string hash = config_hash(small_constant());
  CHECK(fields.rfind("# mfg solve config_hash=" + hash + " seed=0", 0) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["header"]["config_hash"] == hash);
  CHECK(report["header"]["seed"] == 0);
  CHECK(report["complete"] == true);
}

TEST_CASE("repeated runs are byte-identical") {
  const auto dir = scratch("determinism");
  const auto cfg_path = write_config(dir, small_constant());
  for (const char* out : {"a", "b"}) {
    const std::string o = (dir / out).string();
    REQUIRE(invoke({"solve", "--config", cfg_path.string(), "--out", o, "--seed", "5"}) == exit_ok);
    REQUIRE(invoke({"certify", "--config", cfg_path.string(), "--out", o, "--seed", "5"}) == exit_ok);
  }
  for (const char* f : {"fields.csv", "stages.csv", "monitors.csv", "certification.json"}) {
    INFO(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto cert = nlohmann::json::parse(slurp(dir / "a" / "certification.json"));
  CHECK(cert["seed"] == 5);
  CHECK(cert["header"]["seed"] == 5);
  CHECK(cert["pass"] == true);
  CHECK(cert["d2"]["pass"] == true);
  CHECK(cert["minty_gaps"]["c_eps_decreasing"] == true);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  const auto good = write_config(dir, small_constant());
  CHECK(invoke({}) == exit_config_error);
  CHECK(invoke({"solve", "--config", (dir / "missing.json").string(), "--out", (dir / "o").string()}) ==
        exit_config_error);
  CHECK(invoke({"solve", "--config", good.string(), "--out", (dir / "o").string(), "--eps-schedule", "1e-2,1e-1"}) ==
        exit_config_error);
  CHECK(invoke({"solve", "--config", good.string(), "--out", (dir / "o").string(), "--n", "3"}) == exit_config_error);

  // Undamped Picard does not contract at eps = 1e-2.
  auto pic = small_constant(16);
  pic["solver"] = {{"eps_schedule", {1e-2}}, {"method", "picard"}, {"theta", 1.0}};
  const auto pic_path = dir / "picard.json";
  std::ofstream(pic_path) << pic.dump();
  CHECK(invoke({"solve", "--config", pic_path.string(), "--out", (dir / "p").string()}) == exit_nonconvergence);

  // Certifying a candidate that is far from the solution fails.
  const auto bad_dir = dir / "bad";
  REQUIRE(invoke({"solve", "--config", good.string(), "--out", bad_dir.string()}) == exit_ok);
  {
    std::ofstream f(bad_dir / "fields.csv");
    f << "# tampered\nx,m,u,V,phi\n";
    for (int i = 0; i <= 40; ++i) {
      const double x = i / 40.0;
      const double u = 0.5 + (i == 0 || i == 40 ? 0.0 : 40 * std::pow(std::sin(3.141592653589793 * x), 4));
      f << x << ",1," << u << ",-0.5,1\n";
    }
  }
  fs::remove(bad_dir / "stages.csv");
  CHECK(invoke({"certify", "--config", good.string(), "--out", bad_dir.string()}) == exit_certification_failed);
}

TEST_CASE("assumptions mode passes on the constant state") {
  const auto dir = scratch("assumptions");
  const auto cfg_path = write_config(dir, small_constant());
  REQUIRE(invoke({"assumptions", "--config", cfg_path.string(), "--out", (dir / "o").string()}) == exit_ok);
  const auto cert = nlohmann::json::parse(slurp(dir / "o" / "certification.json"));
  CHECK(cert["pass"] == true);
  REQUIRE(cert["assumptions"].size() >= 9);
  for (const auto& a : cert["assumptions"]) {
    INFO(a["id"].get<std::string>());
    CHECK(a["pass"] == true);
  }
  CHECK(cert["monotonicity"]["pass"] == true);
  CHECK(cert["monotonicity_eps"]["pass"] == true);
}
