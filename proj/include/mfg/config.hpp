#pragma once

// JSON run configuration.
//
//   { "grid": {"x_min", "x_max", "n"}, "k",
//     "hamiltonian": {"a": <field>, "b": <field>, "gamma"},
//     "coupling": {"kind": "power", "alpha"} | {"kind": "log", "floor"},
//     "V", "phi", "h": <field>, "xi": <field, default "-h">,
//     "solver": {"eps_schedule", "theta", "method"},
//     "tolerances": {"stage", "lcp", "spd", "d2"},
//     "certify": {"probes", "pairs", "run_dir"},
//     "mms": {"pair": "sine" | "constant", "n_values"},
//     "seed" }
//
// A <field> is a number, an array of n + 1 numbers, or one of the names
// accepted by named_field.

#include "mfg/discretization.hpp"
#include "mfg/errors.hpp"
#include "mfg/fixed_point.hpp"
#include "mfg/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

/// Config problem tied to a specific key path, e.g. "solver.eps_schedule".
class ConfigError : public InputError {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : InputError("config field '" + field + "': " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class RunMode { solve, mms, certify, assumptions };

RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode mode);

struct Tolerances {
  double stage = 1e-10;  ///< Newton / Picard update tolerance
  double lcp = 1e-10;
  double spd = 1e-12;
  double d2 = 1e-3;
};

struct MmsSettings {
  std::string pair = "sine";
  std::vector<int> n_values{50, 100, 200};
};

struct CertifySettings {
  int probes = 50;
  int pairs = 100;
  std::string run_dir;  ///< directory of a previous solve; empty means the output directory
};

struct RunConfig {
  RunMode mode = RunMode::solve;
  nlohmann::json document;  ///< after command-line overrides
  GridInterval grid;
  int k = 2;
  std::vector<double> epsilon_schedule = default_schedule();
  double theta = 0.5;
  StageMethod method = StageMethod::newton;
  Tolerances tolerances;
  std::uint64_t seed = 0;
  std::string output_dir;
  MmsSettings mms;
  CertifySettings certify;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  StageOptions stage_options() const;
};

/// Command-line values that take precedence over the document.
struct Overrides {
  std::optional<int> n;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> epsilon_schedule;
  std::optional<double> theta;
};

/// Parses and validates. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& document, RunMode mode, const std::string& output_dir,
                           const Overrides& overrides = {});

/// Reads a JSON file; ConfigError on I/O or syntax problems.
nlohmann::json read_json_file(const std::string& path);

/// Comma-separated list of reals, e.g. "1e-1,1e-2".
std::vector<double> parse_real_list(const std::string& text, const std::string& field);

/// Field-valued entry on the grid: number, array of length n + 1, or name.
Field parse_field(const nlohmann::json& value, const GridInterval& grid, const std::string& field);

/// Named profiles on the unit coordinate t = (x - x_min) / (x_max - x_min):
/// zero, one, x, t, sin_pi_t, sin2_pi_t, cos_pi_t.
std::optional<Field> named_field(const std::string& name, const GridInterval& grid);

/// Hamiltonian and coupling alone (the manufactured runs generate the rest).
HamiltonianSpec build_hamiltonian(const RunConfig& config, const GridInterval& grid);
CouplingSpec build_coupling(const RunConfig& config);

/// Problem data from the document on the configured grid.
MfgProblem build_problem(const RunConfig& config, const DiscreteOperators& ops);

/// FNV-1a of the compact document dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& document);

}  // namespace mfg
