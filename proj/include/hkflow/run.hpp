#pragma once

// Mode dispatch for the command-line tool. Each mode writes its artifacts
// into an output directory and returns an exit code.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "hkflow/config.hpp"
#include "hkflow/diagnostics.hpp"
#include "hkflow/equilibrium.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/inequality_lab.hpp"
#include "hkflow/parallel.hpp"
#include "hkflow/solver.hpp"

namespace hkflow {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitAudit = 3 };

/// Serialized log sink shared by concurrent jobs.
class LogSink {
 public:
  explicit LogSink(std::ostream& out) : out_(out) {}
  void line(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << s << '\n';
  }

 private:
  std::ostream& out_;
  std::mutex mu_;
};

namespace detail {

inline std::string fmt_time(double t) {
  std::ostringstream s;
  s << std::setprecision(10) << t;
  return s.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
}

struct SimulationOutcome {
  TrajectoryRecord record;
  std::optional<RateFit> fit;
  AuditReport audit;
};

inline SimulationOutcome simulate_to(const RunConfig& cfg, const GridField& u0, const std::filesystem::path& dir,
                                     const std::string& stem, bool keep_fields) {
  IntegrateOptions opts;
  opts.snapshot_times = cfg.snapshot_times;
  opts.keep_fields = keep_fields;
  SimulationOutcome out{integrate(cfg.model, u0, cfg.solver, opts), std::nullopt, {}};
  std::vector<std::string> comments;
  comments.push_back("ic: " + cfg.ic.describe());
  try {
    out.fit = fit_rate(out.record, cfg.entropy_floor);
    for (auto& l : out.fit->comment_lines()) comments.push_back(l);
  } catch (const InsufficientSamples&) {
    comments.push_back("rate_fit unavailable: insufficient samples");
  }
  write_trajectory_csv((dir / (stem + ".csv")).string(), out.record, comments);
  for (const auto& [t, field] : out.record.snapshots)
    write_snapshot_csv((dir / (stem + "_snapshot_t" + fmt_time(t) + ".csv")).string(), field, "u",
                       {"t=" + fmt_time(t)});
  out.audit = audit_bounds(cfg.model, out.record, u0, kAuditSlack, cfg.entropy_floor);
  std::string text = out.audit.to_text();
  for (const auto& f : out.record.flags)
    text += "# integrate flag " + f.check + " t=" + fmt_time(f.t) + " value=" + fmt_time(f.value) +
            " bound=" + fmt_time(f.bound) + "\n";
  write_text(dir / (stem == "trajectory" ? "audit.txt" : stem + "_audit.txt"), text);
  return out;
}

}  // namespace detail

inline int run_simulate(const RunConfig& cfg, const std::filesystem::path& dir, LogSink& log) {
  const Grid grid = cfg.grid();
  const GridField u0 = cfg.ic.build(grid);
  write_equilibrium_csv((dir / "equilibrium.csv").string(), solve_m(cfg.model, grid));
  const auto out = detail::simulate_to(cfg, u0, dir, "trajectory", false);
  std::ostringstream s;
  s << "simulate " << cfg.model.tag() << " steps=" << out.record.steps;
  if (out.fit) s << " gamma=" << out.fit->gamma << " r2=" << out.fit->r2;
  s << " audit=" << (out.audit.passed() ? "pass" : "FAIL");
  log.line(s.str());
  return out.audit.passed() ? kExitOk : kExitAudit;
}

inline int run_contraction_pair(const RunConfig& cfg, const std::filesystem::path& dir, LogSink& log) {
  if (!cfg.ic2) throw ConfigError("contraction-pair needs a [pair] block with value or csv");
  const Grid grid = cfg.grid();
  const GridField u0 = cfg.ic.build(grid);
  const GridField v0 = cfg.ic2->build(grid);
  const auto u = detail::simulate_to(cfg, u0, dir, "trajectory_u", true);
  const auto v = detail::simulate_to(cfg, v0, dir, "trajectory_v", true);
  const double L = estimate_L_kappa(cfg.model, cfg.a, cfg.b, cfg.kappa);
  const ContractionReport rep = contraction_report(u.record, v.record, L, cfg.kappa);
  write_contraction_csv((dir / "contraction.csv").string(), rep);
  const bool contraction_ok = !rep.kappa_range_ok || rep.bound_ok;
  std::ostringstream s;
  s << "contraction-pair L_kappa=" << L << " bound_ok=" << rep.bound_ok << " nonincreasing=" << rep.nonincreasing
    << " kappa_range_ok=" << rep.kappa_range_ok;
  log.line(s.str());
  return (u.audit.passed() && v.audit.passed() && contraction_ok) ? kExitOk : kExitAudit;
}

inline int run_validate(const RunConfig& cfg, const std::filesystem::path& dir, LogSink& log) {
  const ValidationReport rep = validate_model(cfg.model, cfg.a, cfg.b);
  std::string text = "# columns: check,status,witness,detail\n# model: " + cfg.model.tag() + "\n" + rep.to_text();
  if (rep.required_passed()) {
    const EquilibriumField eq = solve_m(cfg.model, cfg.grid());
    write_equilibrium_csv((dir / "equilibrium.csv").string(), eq);
    text += "equilibrium solved max_residual=" + detail::fmt_time(eq.residual.max()) + "\n";
  }
  detail::write_text(dir / "validation.txt", text);
  log.line("validate " + cfg.model.tag() + (rep.all_passed() ? " all pass" : " some checks FAIL"));
  return rep.required_passed() ? kExitOk : kExitAudit;
}

inline int run_lab(const RunConfig& cfg, const std::filesystem::path& dir, LogSink& log, int threads) {
  const Grid grid = cfg.grid();
  RatioReport rep;
  std::string extra;
  if (cfg.lab.task == LabTask::BlowUp) {
    std::vector<double> scales = cfg.lab.family.scales;
    if (scales.empty())
      for (int k = 0; k <= 20; ++k) scales.push_back(std::ldexp(1.0, -k));
    const GridField w = GridField::from_function(grid, [&](double x) { return cfg.lab.family.profile(x); });
    rep = blow_up_scan(cfg.model, w, scales, threads);
  } else {
    FunctionFamily fam = cfg.lab.family;
    if (fam.kind == FamilyKind::TrajectorySamples) {
      const GridField u0 = cfg.ic.build(grid);
      const auto sim = detail::simulate_to(cfg, u0, dir, "trajectory", true);
      fam.fields = sim.record.fields;
      rep = estimate_C(cfg.model, fam, grid, cfg.lab.n_samples, [&] {
        EstimateOptions o = cfg.lab.estimate;
        o.threads = threads;
        return o;
      }());
      if (sim.fit) {
        std::ostringstream s;
        s << std::setprecision(17) << "trajectory_gamma: " << sim.fit->gamma << "\ngamma_times_C: "
          << sim.fit->gamma * rep.C << '\n';
        extra = s.str();
      }
    } else {
      EstimateOptions o = cfg.lab.estimate;
      o.threads = threads;
      rep = estimate_C(cfg.model, fam, grid, cfg.lab.n_samples, o);
    }
  }
  write_lab_report_csv((dir / "lab_report.csv").string(), rep);
  if (rep.witness)
    write_snapshot_csv((dir / "witness.csv").string(), *rep.witness, "u",
                       {"witness ratio=" + detail::fmt_time(rep.witness_ratio)});
  detail::write_text(dir / "lab_summary.txt", rep.summary() + extra);
  log.line("lab " + rep.family + " C=" + detail::fmt_time(rep.C) +
           (cfg.lab.task == LabTask::BlowUp
                ? std::string(" blow_up_detected=") + (rep.blow_up_detected ? "true" : "false")
                : std::string()));
  return kExitOk;
}

inline int run_sweep(const RunConfig& cfg, const std::filesystem::path& dir, LogSink& log, int threads) {
  if (cfg.sweep_key.empty()) throw ConfigError("sweep mode needs [sweep] parameter and values");
  const int n = static_cast<int>(cfg.sweep_values.size());
  struct Point {
    int code = kExitOk;
    std::optional<RateFit> fit;
    double final_entropy = 0.0;
    bool audit = false;
    std::string error;
  };
  // Validate every point up front so config errors are reported before any run.
  std::vector<RunConfig> configs;
  for (const auto& value : cfg.sweep_values) {
    configs.push_back(build_config(with_override(cfg.raw, cfg.sweep_key, value)));
    configs.back().ic.build(configs.back().grid());
  }

  std::vector<Point> points(n);
  parallel_for(n, threads, [&](int k) {
    const std::filesystem::path sub = dir / ("point_" + std::to_string(k));
    std::filesystem::create_directories(sub);
    const RunConfig& pc = configs[k];
    Point& p = points[k];
    try {
      const GridField u0 = pc.ic.build(pc.grid());
      const auto out = detail::simulate_to(pc, u0, sub, "trajectory", false);
      p.fit = out.fit;
      p.final_entropy = out.record.samples.back().entropy;
      p.audit = out.audit.passed();
      p.code = p.audit ? kExitOk : kExitAudit;
    } catch (const std::exception& e) {
      p.code = kExitRuntime;
      p.error = e.what();
    }
    log.line("sweep point " + std::to_string(k) + " " + cfg.sweep_key + "=" + cfg.sweep_values[k] +
             (p.error.empty() ? "" : " error: " + p.error));
  });

  std::ofstream out(dir / "sweep_summary.csv");
  if (!out) throw Error("cannot write sweep summary");
  out << std::setprecision(17);
  out << "# columns: point,parameter,value,gamma,r2,envelope_ok,final_entropy,audit\n";
  out << "point,parameter,value,gamma,r2,envelope_ok,final_entropy,audit\n";
  int code = kExitOk;
  for (int k = 0; k < n; ++k) {
    const Point& p = points[k];
    out << k << ',' << cfg.sweep_key << ',' << cfg.sweep_values[k] << ',';
    if (p.fit) out << p.fit->gamma << ',' << p.fit->r2 << ',' << (p.fit->envelope_ok ? 1 : 0);
    else out << "nan,nan,0";
    out << ',' << p.final_entropy << ',' << (p.code == kExitRuntime ? "error" : p.audit ? "pass" : "fail") << '\n';
    code = std::max(code, p.code == kExitRuntime ? kExitRuntime : p.code);
  }
  // Runtime errors outrank audit failures.
  if (std::any_of(points.begin(), points.end(), [](const Point& p) { return p.code == kExitRuntime; }))
    code = kExitRuntime;
  return code;
}

/// Runs `mode` with artifacts under `out_dir`. Errors are mapped to exit
/// codes and reported on `err`.
inline int run(const RunConfig& cfg, Mode mode, const std::string& out_dir, std::ostream& log_stream,
               std::ostream& err, int threads = default_threads()) {
  LogSink log(log_stream);
  try {
    if (cfg.mode && *cfg.mode != mode)
      throw ConfigError("config declares mode '" + to_string(*cfg.mode) + "' but '" + to_string(mode) +
                        "' was requested");
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    switch (mode) {
      case Mode::Simulate: return run_simulate(cfg, dir, log);
      case Mode::ContractionPair: return run_contraction_pair(cfg, dir, log);
      case Mode::Sweep: return run_sweep(cfg, dir, log, threads);
      case Mode::Lab: return run_lab(cfg, dir, log, threads);
      case Mode::Validate: return run_validate(cfg, dir, log);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace hkflow
