#include "mfg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mfg {

using nlohmann::json;

namespace {

const json* find(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double get_real(const json& obj, const char* key, const std::string& path, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(path, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

double require_real(const json& obj, const char* key, const std::string& path) {
  if (!find(obj, key)) throw ConfigError(path, "missing");
  return get_real(obj, key, path, 0.0);
}

long long get_int(const json& obj, const char* key, const std::string& path, long long fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(path, "expected an integer");
  return v->get<long long>();
}

const json& require_object(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(path, "missing");
  if (!v->is_object()) throw ConfigError(path, "expected an object");
  return *v;
}

std::vector<double> real_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(path, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void check_positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
}

CouplingSpec parse_coupling(const json& doc) {
  const json& c = require_object(doc, "coupling", "coupling");
  const json* kind = find(c, "kind");
  if (!kind || !kind->is_string()) throw ConfigError("coupling.kind", "expected \"power\" or \"log\"");
  const std::string k = kind->get<std::string>();
  CouplingSpec g;
  if (k == "power") {
    g = CouplingSpec::power(get_real(c, "alpha", "coupling.alpha", 1.0));
  } else if (k == "log") {
    g = CouplingSpec::log(get_real(c, "floor", "coupling.floor", 1e-8));
  } else {
    throw ConfigError("coupling.kind", "expected \"power\" or \"log\", got \"" + k + "\"");
  }
  try {
    g.validate();
  } catch (const InputError& e) {
    throw ConfigError("coupling", e.what());
  }
  return g;
}

}  // namespace

RunMode parse_mode(const std::string& name) {
  if (name == "solve") return RunMode::solve;
  if (name == "mms") return RunMode::mms;
  if (name == "certify") return RunMode::certify;
  if (name == "assumptions") return RunMode::assumptions;
  throw ConfigError("mode", "unknown mode \"" + name + "\"");
}

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::solve: return "solve";
    case RunMode::mms: return "mms";
    case RunMode::certify: return "certify";
    case RunMode::assumptions: return "assumptions";
  }
  return "?";
}

std::vector<double> parse_real_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError(field, "cannot parse \"" + item + "\" as a number");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw ConfigError(field, "cannot parse \"" + item + "\" as a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

std::optional<Field> named_field(const std::string& name, const GridInterval& grid) {
  const int nn = grid.nodes();
  Field f(nn);
  const double pi = std::numbers::pi;
  for (int i = 0; i < nn; ++i) {
    const double x = grid.node(i);
    const double t = static_cast<double>(i) / grid.n;
    if (name == "zero") f[i] = 0.0;
    else if (name == "one") f[i] = 1.0;
    else if (name == "x") f[i] = x;
    else if (name == "t") f[i] = t;
    else if (name == "sin_pi_t") f[i] = std::sin(pi * t);
    else if (name == "sin2_pi_t") f[i] = std::sin(pi * t) * std::sin(pi * t);
    else if (name == "cos_pi_t") f[i] = std::cos(pi * t);
    else return std::nullopt;
  }
  return f;
}

Field parse_field(const json& value, const GridInterval& grid, const std::string& field) {
  const int nn = grid.nodes();
  if (value.is_number()) return Field::Constant(nn, value.get<double>());
  if (value.is_array()) {
    const std::vector<double> v = real_array(value, field);
    if (static_cast<int>(v.size()) != nn)
      throw ConfigError(field, "array has length " + std::to_string(v.size()) + ", expected n + 1 = " +
                                   std::to_string(nn));
    return Eigen::Map<const Field>(v.data(), nn);
  }
  if (value.is_string()) {
    if (auto f = named_field(value.get<std::string>(), grid)) return *f;
    throw ConfigError(field, "unknown profile \"" + value.get<std::string>() + "\"");
  }
  throw ConfigError(field, "expected a number, an array or a profile name");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

void RunConfig::validate() const {
  if (!(grid.x_max > grid.x_min)) throw ConfigError("grid", "x_max must exceed x_min");
  if (k < 1) throw ConfigError("k", "must be >= 1");
  if (grid.n < min_cells(k))
    throw ConfigError("grid.n", "must be >= 4k + 4 = " + std::to_string(min_cells(k)));
  try {
    validate_schedule(epsilon_schedule);
  } catch (const InputError& e) {
    throw ConfigError("solver.eps_schedule", e.what());
  }
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("solver.theta", "must lie in (0, 1]");
  check_positive(tolerances.stage, "tolerances.stage");
  check_positive(tolerances.lcp, "tolerances.lcp");
  check_positive(tolerances.spd, "tolerances.spd");
  check_positive(tolerances.d2, "tolerances.d2");
  if (certify.probes < 1) throw ConfigError("certify.probes", "must be >= 1");
  if (certify.pairs < 1) throw ConfigError("certify.pairs", "must be >= 1");
  if (mode == RunMode::mms) {
    if (mms.pair != "sine" && mms.pair != "constant")
      throw ConfigError("mms.pair", "expected \"sine\" or \"constant\"");
    if (mms.n_values.empty()) throw ConfigError("mms.n_values", "must not be empty");
    for (int n : mms.n_values)
      if (n < min_cells(k)) throw ConfigError("mms.n_values", "every n must be >= 4k + 4");
  }
}

StageOptions RunConfig::stage_options() const {
  StageOptions o;
  o.method = method;
  o.theta = theta;
  o.tol = tolerances.stage;
  o.lcp.tol = tolerances.lcp;
  o.spd.tol = tolerances.spd;
  o.seed = seed;
  return o;
}

RunConfig parse_run_config(const json& document, RunMode mode, const std::string& output_dir,
                           const Overrides& overrides) {
  if (!document.is_object()) throw ConfigError("config", "top level must be an object");
  RunConfig cfg;
  cfg.mode = mode;
  cfg.output_dir = output_dir;
  cfg.document = document;
  json& doc = cfg.document;

  // Fold the command-line overrides into the document so the hash covers them.
  if (overrides.n) doc["grid"]["n"] = *overrides.n;
  if (overrides.k) doc["k"] = *overrides.k;
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.epsilon_schedule) doc["solver"]["eps_schedule"] = *overrides.epsilon_schedule;
  if (overrides.theta) doc["solver"]["theta"] = *overrides.theta;

  const json& grid = require_object(doc, "grid", "grid");
  cfg.grid.x_min = get_real(grid, "x_min", "grid.x_min", 0.0);
  cfg.grid.x_max = get_real(grid, "x_max", "grid.x_max", 1.0);
  if (!find(grid, "n")) throw ConfigError("grid.n", "missing");
  cfg.grid.n = static_cast<int>(get_int(grid, "n", "grid.n", 0));
  cfg.k = static_cast<int>(get_int(doc, "k", "k", 2));
  const long long seed = get_int(doc, "seed", "seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (const json* s = find(doc, "solver")) {
    if (!s->is_object()) throw ConfigError("solver", "expected an object");
    if (const json* e = find(*s, "eps_schedule")) cfg.epsilon_schedule = real_array(*e, "solver.eps_schedule");
    cfg.theta = get_real(*s, "theta", "solver.theta", cfg.theta);
    if (const json* m = find(*s, "method")) {
      const std::string name = m->is_string() ? m->get<std::string>() : "";
      if (name == "newton") cfg.method = StageMethod::newton;
      else if (name == "picard") cfg.method = StageMethod::picard;
      else throw ConfigError("solver.method", "expected \"newton\" or \"picard\"");
    }
  }
  if (const json* t = find(doc, "tolerances")) {
    if (!t->is_object()) throw ConfigError("tolerances", "expected an object");
    for (const auto& [key, value] : t->items()) {
      const std::string path = "tolerances." + key;
      if (!value.is_number()) throw ConfigError(path, "expected a number");
      const double v = value.get<double>();
      if (key == "stage") cfg.tolerances.stage = v;
      else if (key == "lcp") cfg.tolerances.lcp = v;
      else if (key == "spd") cfg.tolerances.spd = v;
      else if (key == "d2") cfg.tolerances.d2 = v;
      else throw ConfigError(path, "unknown tolerance");
    }
  }
  if (const json* c = find(doc, "certify")) {
    if (!c->is_object()) throw ConfigError("certify", "expected an object");
    cfg.certify.probes = static_cast<int>(get_int(*c, "probes", "certify.probes", cfg.certify.probes));
    cfg.certify.pairs = static_cast<int>(get_int(*c, "pairs", "certify.pairs", cfg.certify.pairs));
    if (const json* d = find(*c, "run_dir")) {
      if (!d->is_string()) throw ConfigError("certify.run_dir", "expected a string");
      cfg.certify.run_dir = d->get<std::string>();
    }
  }
  if (const json* m = find(doc, "mms")) {
    if (!m->is_object()) throw ConfigError("mms", "expected an object");
    if (const json* p = find(*m, "pair")) {
      if (!p->is_string()) throw ConfigError("mms.pair", "expected a string");
      cfg.mms.pair = p->get<std::string>();
    }
    if (const json* nv = find(*m, "n_values")) {
      cfg.mms.n_values.clear();
      for (double v : real_array(*nv, "mms.n_values")) {
        if (v != std::floor(v)) throw ConfigError("mms.n_values", "expected integers");
        cfg.mms.n_values.push_back(static_cast<int>(v));
      }
    }
  }
  // --n replaces the refinement list by a single grid.
  if (overrides.n) cfg.mms.n_values = {*overrides.n};

  const json& ham = require_object(doc, "hamiltonian", "hamiltonian");
  const double gamma = require_real(ham, "gamma", "hamiltonian.gamma");
  if (!(gamma > 1.0)) throw ConfigError("hamiltonian.gamma", "must exceed 1");
  parse_coupling(doc);

  cfg.validate();
  return cfg;
}

HamiltonianSpec build_hamiltonian(const RunConfig& config, const GridInterval& grid) {
  const json& ham = require_object(config.document, "hamiltonian", "hamiltonian");
  const int nn = grid.nodes();
  HamiltonianSpec H;
  H.a = find(ham, "a") ? parse_field(ham["a"], grid, "hamiltonian.a") : Field::Ones(nn);
  H.b = find(ham, "b") ? parse_field(ham["b"], grid, "hamiltonian.b") : Field::Zero(nn);
  H.gamma = require_real(ham, "gamma", "hamiltonian.gamma");
  H.p_shift = Field::Zero(nn);
  if ((H.a.array() <= 0.0).any()) throw ConfigError("hamiltonian.a", "must be positive at every node");
  return H;
}

CouplingSpec build_coupling(const RunConfig& config) { return parse_coupling(config.document); }

MfgProblem build_problem(const RunConfig& config, const DiscreteOperators& ops) {
  const json& doc = config.document;
  const GridInterval& grid = ops.grid;
  const HamiltonianSpec H = build_hamiltonian(config, grid);
  const CouplingSpec g = parse_coupling(doc);

  auto field = [&](const char* key) -> Field {
    const json* v = find(doc, key);
    if (!v) throw ConfigError(key, "missing");
    return parse_field(*v, grid, key);
  };
  const Field V = field("V");
  const Field phi = field("phi");
  const Field h = field("h");
  Field xi;
  if (const json* x = find(doc, "xi")) {
    if (x->is_string() && x->get<std::string>() == "-h") xi = -h;
    else xi = parse_field(*x, grid, "xi");
  } else {
    xi = -h;
  }
  if ((phi.array() < 0.0).any()) throw ConfigError("phi", "must be nonnegative at every node");
  try {
    return make_problem(grid, H, g, V, phi, h, xi, ops);
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    throw ConfigError("problem", e.what());
  }
}

std::string config_hash(const json& document) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : document.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfg
