#pragma once

// Run configuration files:
//
//   # comment
//   mode = simulate
//   [model]
//   kind = logistic
//   m = 1 + 0.5*sin(pi*x)
//
// Keys are addressed as section.key. Unknown keys, duplicates and malformed
// lines are errors carrying the line number.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hkflow/errors.hpp"
#include "hkflow/expression.hpp"
#include "hkflow/fitness.hpp"
#include "hkflow/grid.hpp"
#include "hkflow/inequality_lab.hpp"
#include "hkflow/profile.hpp"
#include "hkflow/solver.hpp"

namespace hkflow {

struct RawEntry {
  std::string value;
  int line = 0;
};

/// Parsed key/value pairs keyed by "section.key" (top-level keys have no dot).
struct RawConfig {
  std::map<std::string, RawEntry> entries;
  std::filesystem::path base_dir;

  bool has(const std::string& key) const { return entries.count(key) > 0; }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline RawConfig parse_raw_config(std::istream& in, const std::filesystem::path& base_dir = ".") {
  RawConfig raw;
  raw.base_dir = base_dir;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", lineno);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", lineno);
    const std::string full = section.empty() ? key : section + "." + key;
    if (raw.entries.count(full)) throw ConfigError("duplicate key '" + full + "'", lineno);
    raw.entries[full] = {value, lineno};
  }
  return raw;
}

inline RawConfig read_raw_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_raw_config(in, std::filesystem::path(path).parent_path());
}

enum class Mode { Simulate, ContractionPair, Sweep, Lab, Validate };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Simulate: return "simulate";
    case Mode::ContractionPair: return "contraction-pair";
    case Mode::Sweep: return "sweep";
    case Mode::Lab: return "lab";
    case Mode::Validate: return "validate";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Simulate, Mode::ContractionPair, Mode::Sweep, Mode::Lab, Mode::Validate})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown mode '" + s + "'");
}

/// Initial data: an expression in x (a plain number is a constant) or a
/// snapshot CSV.
struct InitialCondition {
  std::optional<Expression> expr;
  std::string csv_path;

  GridField build(const Grid& grid) const {
    GridField u = expr ? GridField::from_function(grid, [&](double x) { return (*expr)(x); })
                       : read_snapshot_csv(csv_path, grid);
    for (int i = 0; i < u.size(); ++i)
      if (!std::isfinite(u[i]) || u[i] < 0.0)
        throw ConfigError("initial condition is negative or not finite at x=" + std::to_string(grid.center(i)));
    return u;
  }

  std::string describe() const { return expr ? expr->source() : "csv:" + csv_path; }
};

enum class LabTask { Estimate, BlowUp };

struct LabConfig {
  LabTask task = LabTask::Estimate;
  FunctionFamily family;
  int n_samples = 500;
  EstimateOptions estimate;
};

struct RunConfig {
  std::optional<Mode> mode;  // from the file, if present
  FitnessModel model = FitnessModel::logistic(SpatialProfile::constant(1.0));
  double a = 0.0;
  double b = 1.0;
  int n_cells = 100;
  InitialCondition ic;
  SolverConfig solver;
  std::string out_dir = "out";
  std::vector<double> snapshot_times;
  double entropy_floor = 1e-10;

  // contraction-pair
  std::optional<InitialCondition> ic2;
  double kappa = 0.5;

  // sweep
  std::string sweep_key;
  std::vector<std::string> sweep_values;

  LabConfig lab;
  std::uint64_t seed = 42;

  RawConfig raw;

  Grid grid() const { return Grid(a, b, n_cells); }
};

namespace detail {

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const RawEntry* find(const std::string& key) {
    used_.insert(key);
    auto it = raw_.entries.find(key);
    return it == raw_.entries.end() ? nullptr : &it->second;
  }

  std::optional<std::string> str(const std::string& key) {
    const RawEntry* e = find(key);
    return e ? std::optional<std::string>(e->value) : std::nullopt;
  }

  std::string str_or(const std::string& key, const std::string& dflt) { return str(key).value_or(dflt); }

  std::optional<double> num(const std::string& key) {
    const RawEntry* e = find(key);
    if (!e) return std::nullopt;
    try {
      const Expression x = Expression::parse(e->value);
      if (x.depends_on_x()) throw ConfigError("'" + key + "' must be a number", e->line);
      return x(0.0);
    } catch (const ConfigError& err) {
      if (err.line() > 0) throw;
      throw ConfigError("'" + key + "': " + err.what(), e->line);
    }
  }

  double num_or(const std::string& key, double dflt) { return num(key).value_or(dflt); }

  std::optional<long long> integer(const std::string& key) {
    const RawEntry* e = find(key);
    if (!e) return std::nullopt;
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(e->value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != e->value.size()) throw ConfigError("'" + key + "' must be an integer", e->line);
    return v;
  }

  std::vector<double> list(const std::string& key) {
    std::vector<double> out;
    const RawEntry* e = find(key);
    if (!e) return out;
    std::string v = e->value;
    // geometric:first,ratio,count
    if (v.rfind("geometric:", 0) == 0) {
      std::istringstream ss(v.substr(10));
      std::string tok;
      std::vector<double> p;
      while (std::getline(ss, tok, ',')) p.push_back(parse_number(trim(tok), key, e->line));
      if (p.size() != 3 || p[2] < 1) throw ConfigError("'" + key + "': geometric:first,ratio,count expected", e->line);
      for (int k = 0; k < static_cast<int>(p[2]); ++k) out.push_back(p[0] * std::pow(p[1], k));
      return out;
    }
    std::istringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_number(trim(tok), key, e->line));
    return out;
  }

  std::vector<std::string> words(const std::string& key) {
    std::vector<std::string> out;
    const RawEntry* e = find(key);
    if (!e) return out;
    std::istringstream ss(e->value);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    return out;
  }

  int line(const std::string& key) const {
    auto it = raw_.entries.find(key);
    return it == raw_.entries.end() ? 0 : it->second.line;
  }

  std::string path(const std::string& value) const {
    std::filesystem::path p(value);
    if (p.is_relative()) p = raw_.base_dir / p;
    return p.string();
  }

  void reject_unknown() const {
    for (const auto& [key, e] : raw_.entries)
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "'", e.line);
  }

 private:
  static double parse_number(const std::string& s, const std::string& key, int line) {
    try {
      const Expression x = Expression::parse(s);
      if (!x.depends_on_x()) return x(0.0);
    } catch (const ConfigError&) {
    }
    throw ConfigError("'" + key + "': '" + s + "' is not a number", line);
  }

  const RawConfig& raw_;
  std::set<std::string> used_;
};

inline SpatialProfile read_profile(Reader& r, const std::string& key, const std::string& csv_key,
                                   double dflt) {
  const auto expr = r.str(key);
  const auto csv = r.str(csv_key);
  if (expr && csv) throw ConfigError("give only one of '" + key + "' and '" + csv_key + "'", r.line(csv_key));
  try {
    if (csv) return SpatialProfile::from_csv(r.path(*csv));
    if (expr) return SpatialProfile::parse(*expr);
  } catch (const ConfigError& e) {
    if (e.line() > 0) throw;
    throw ConfigError(e.what(), r.line(csv ? csv_key : key));
  }
  return SpatialProfile::constant(dflt);
}

inline InitialCondition read_ic(Reader& r, const std::string& section) {
  InitialCondition ic;
  const auto value = r.str(section + ".value");
  const auto csv = r.str(section + ".csv");
  if (value && csv) throw ConfigError("give only one of value and csv in [" + section + "]", r.line(section + ".csv"));
  if (!value && !csv) throw ConfigError("[" + section + "] needs value (number or expression of x) or csv");
  if (value) {
    try {
      ic.expr = Expression::parse(*value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), r.line(section + ".value"));
    }
  } else {
    ic.csv_path = r.path(*csv);
    if (!std::filesystem::exists(ic.csv_path))
      throw ConfigError("initial condition file '" + ic.csv_path + "' does not exist", r.line(section + ".csv"));
  }
  return ic;
}

inline FitnessModel read_model(Reader& r, double a, double b) {
  const std::string kind = r.str_or("model.kind", "");
  if (kind.empty()) throw ConfigError("model.kind is required");
  const int line = r.line("model.kind");
  try {
    if (kind == "logistic") return FitnessModel::logistic(read_profile(r, "model.m", "model.m_csv", 1.0));
    if (kind == "power") {
      const auto alpha = r.num("model.alpha");
      if (!alpha) throw ConfigError("power model needs model.alpha", line);
      return FitnessModel::power(*alpha, read_profile(r, "model.k", "model.k_csv", 1.0));
    }
    if (kind == "boltzmann") return FitnessModel::boltzmann(read_profile(r, "model.V", "model.V_csv", 0.0));
    if (kind == "custom") {
      CustomFitness c;
      auto expr = [&](const std::string& key) {
        const auto s = r.str(key);
        if (!s) throw ConfigError("custom model needs " + key, line);
        try {
          return Expression::parse(*s, true);
        } catch (const ConfigError& e) {
          throw ConfigError(e.what(), r.line(key));
        }
      };
      const Expression f = expr("model.f"), fu = expr("model.f_u"), fx = expr("model.f_x"),
                       fxu = expr("model.f_xu");
      c.f = [f](double x, double u) { return f(x, u); };
      c.f_u = [fu](double x, double u) { return fu(x, u); };
      c.f_x = [fx](double x, double u) { return fx(x, u); };
      c.f_xu = [fxu](double x, double u) { return fxu(x, u); };
      c.x_lo = a;
      c.x_hi = b;
      c.u_lo = r.num_or("model.u_min", 0.0);
      c.u_hi = r.num_or("model.u_max", 1e3);
      c.description = "f=" + f.source();
      return FitnessModel::custom(std::move(c));
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what(), line);
  }
  throw ConfigError("unknown model.kind '" + kind + "'", line);
}

}  // namespace detail

/// Builds and validates a RunConfig from parsed key/value pairs.
inline RunConfig build_config(const RawConfig& raw) {
  detail::Reader r(raw);
  RunConfig c;
  c.raw = raw;
  if (const auto m = r.str("mode")) {
    try {
      c.mode = parse_mode(*m);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), r.line("mode"));
    }
  }

  c.a = r.num_or("grid.a", 0.0);
  c.b = r.num_or("grid.b", 1.0);
  if (const auto n = r.integer("grid.n_cells")) {
    if (*n < Grid::kMinCells) throw ConfigError("n_cells >= 8 required", r.line("grid.n_cells"));
    c.n_cells = static_cast<int>(*n);
  }
  if (!(c.a < c.b)) throw ConfigError("grid.a < grid.b required", r.line("grid.b"));

  c.model = detail::read_model(r, c.a, c.b);
  try {
    c.model.profile().check_on(c.a, c.b, c.model.kind() == ModelKind::Logistic ||
                                             c.model.kind() == ModelKind::Power);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model profile: ") + e.what(), r.line("model.kind"));
  }

  c.ic = detail::read_ic(r, "ic");

  SolverConfig& s = c.solver;
  const std::string scheme = r.str_or("solver.scheme", "heun");
  if (scheme == "heun") s.scheme = TimeScheme::Heun;
  else if (scheme == "explicit-euler") s.scheme = TimeScheme::ExplicitEuler;
  else throw ConfigError("solver.scheme must be heun or explicit-euler", r.line("solver.scheme"));
  const std::string policy = r.str_or("solver.dt_policy", "cfl");
  if (policy == "cfl") s.dt_policy = DtPolicy::Cfl;
  else if (policy == "fixed") s.dt_policy = DtPolicy::Fixed;
  else throw ConfigError("solver.dt_policy must be cfl or fixed", r.line("solver.dt_policy"));
  s.dt = r.num_or("solver.dt", s.dt);
  s.safety = r.num_or("solver.safety", s.safety);
  s.t_end = r.num_or("solver.t_end", s.t_end);
  s.output_every = r.num_or("solver.output_every", s.output_every);
  s.positivity_floor = r.num_or("solver.positivity_floor", s.positivity_floor);
  if (const auto ms = r.integer("solver.max_steps")) s.max_steps = *ms;
  const std::string drift = r.str_or("solver.drift", "muscl");
  if (drift == "muscl") s.drift = DriftScheme::Muscl;
  else if (drift == "upwind") s.drift = DriftScheme::Upwind;
  else throw ConfigError("solver.drift must be muscl or upwind", r.line("solver.drift"));
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }

  c.out_dir = r.str_or("outputs.directory", c.out_dir);
  c.snapshot_times = r.list("outputs.snapshot_times");
  for (double t : c.snapshot_times)
    if (t < 0.0 || t > s.t_end)
      throw ConfigError("snapshot time " + std::to_string(t) + " outside [0, t_end]",
                        r.line("outputs.snapshot_times"));
  c.entropy_floor = r.num_or("fit.entropy_floor", c.entropy_floor);

  if (raw.has("pair.value") || raw.has("pair.csv")) c.ic2 = detail::read_ic(r, "pair");
  c.kappa = r.num_or("pair.kappa", c.kappa);
  if (!(c.kappa > 0.0 && c.kappa < 1.0)) throw ConfigError("pair.kappa must lie in (0,1)", r.line("pair.kappa"));

  c.sweep_key = r.str_or("sweep.parameter", "");
  c.sweep_values = r.words("sweep.values");
  if (!c.sweep_key.empty()) {
    if (c.sweep_key.rfind("sweep.", 0) == 0)
      throw ConfigError("sweep.parameter cannot name a sweep key", r.line("sweep.parameter"));
    if (c.sweep_values.empty()) throw ConfigError("sweep.values is empty", r.line("sweep.parameter"));
  }

  if (const auto seed = r.str("lab.seed")) {
    std::size_t pos = 0;
    try {
      c.seed = std::stoull(*seed, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != seed->size() || seed->front() == '-')
      throw ConfigError("lab.seed must be an unsigned 64-bit integer", r.line("lab.seed"));
  }
  LabConfig& lab = c.lab;
  const std::string task = r.str_or("lab.task", "estimate");
  if (task == "estimate") lab.task = LabTask::Estimate;
  else if (task == "blow-up") lab.task = LabTask::BlowUp;
  else throw ConfigError("lab.task must be estimate or blow-up", r.line("lab.task"));
  const std::string family = r.str_or("lab.family", "fourier-random");
  bool known = false;
  for (FamilyKind k : {FamilyKind::TrajectorySamples, FamilyKind::FourierRandom, FamilyKind::BumpScaled,
                       FamilyKind::VanishingSequence})
    if (to_string(k) == family) {
      lab.family.kind = k;
      known = true;
    }
  if (!known) throw ConfigError("unknown lab.family '" + family + "'", r.line("lab.family"));
  lab.family.l1_floor = r.num_or("lab.l1_floor", 0.0);
  lab.family.base = r.num_or("lab.base", lab.family.base);
  lab.family.amplitude = r.num_or("lab.amplitude", lab.family.amplitude);
  if (const auto k = r.integer("lab.modes")) lab.family.modes = static_cast<int>(*k);
  lab.family.floor = r.num_or("lab.floor", lab.family.floor);
  lab.family.seed = c.seed;
  lab.family.profile = detail::read_profile(r, "lab.profile", "lab.profile_csv", 1.0);
  lab.family.scales = r.list("lab.scales");
  if (const auto n = r.integer("lab.n_samples")) lab.n_samples = static_cast<int>(*n);
  if (const auto n = r.integer("lab.ascent_steps")) lab.estimate.ascent_steps = static_cast<int>(*n);
  if (const auto n = r.integer("lab.out_of_sample")) lab.estimate.out_of_sample_draws = static_cast<int>(*n);
  if (lab.n_samples <= 0) throw ConfigError("lab.n_samples must be positive", r.line("lab.n_samples"));
  if (lab.family.l1_floor < 0.0) throw ConfigError("lab.l1_floor must be >= 0", r.line("lab.l1_floor"));

  r.reject_unknown();
  return c;
}

inline RunConfig parse_config(const std::string& path) { return build_config(read_raw_config(path)); }

/// Copy of `raw` with `key` set to `value` (used by sweeps).
inline RawConfig with_override(RawConfig raw, const std::string& key, const std::string& value) {
  auto it = raw.entries.find(key);
  const int line = it == raw.entries.end() ? 0 : it->second.line;
  raw.entries[key] = {value, line};
  return raw;
}

}  // namespace hkflow
