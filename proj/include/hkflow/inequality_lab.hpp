#pragma once

// Numerical exploration of the entropy / entropy-production inequality
// H(u) <= C D(u): ratios over sampled families, an empirical C with a
// witness, and scans along sequences u_k = s_k w with s_k -> 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hkflow/bound_model.hpp"
#include "hkflow/equilibrium.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/functionals.hpp"
#include "hkflow/grid.hpp"
#include "hkflow/parallel.hpp"

namespace hkflow {

/// Denominators at or below this count as zero.
inline constexpr double kRatioDenominatorFloor = 1e-300;

inline double v_sigma(double xi, double sigma) { return xi * xi / std::max(xi, sigma); }

using FieldFn = std::function<double(double x, double u)>;

struct RatioValue {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  /// Nonzero numerator over a zero denominator.
  bool unbounded = false;
};

/// int E(x,u) / int (g(x,u) + v(x,u) |grad f(x,u)|^p). grad f lives on
/// interior faces; v there is the mean of the two adjacent cells.
inline RatioValue general_ratio(const FieldFn& E, const FieldFn& g, const FieldFn& f, const FieldFn& v, double p,
                                const GridField& u) {
  if (!(p >= 1.0)) throw DomainError("exponent p must be >= 1");
  const Grid& grid = u.grid();
  const int n = u.size();
  const double dx = grid.dx();
  std::vector<double> fv(n), vv(n);
  RatioValue r;
  for (int i = 0; i < n; ++i) {
    if (!(u[i] > 0.0)) throw DomainError("general ratio needs u > 0 in every cell");
    const double x = grid.center(i);
    r.numerator += E(x, u[i]);
    r.denominator += g(x, u[i]);
    fv[i] = f(x, u[i]);
    vv[i] = v(x, u[i]);
  }
  r.numerator *= dx;
  r.denominator *= dx;
  for (int j = 1; j < n; ++j) {
    const double grad = (fv[j] - fv[j - 1]) / dx;
    r.denominator += dx * 0.5 * (vv[j - 1] + vv[j]) * std::pow(std::abs(grad), p);
  }
  if (r.denominator <= kRatioDenominatorFloor) {
    r.unbounded = r.numerator != 0.0;
    r.ratio = r.unbounded ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    r.ratio = r.numerator / r.denominator;
  }
  return r;
}

/// The gradient-flow instance: E from the model, g = v_sigma f^2,
/// v = v_sigma, p = 2.
inline RatioValue gradient_flow_ratio(const FitnessModel& model, const GridField& m, const GridField& u,
                                      double sigma) {
  const Grid& grid = u.grid();
  auto cell = [&](double x) {
    const int i = std::clamp(static_cast<int>((x - grid.a()) / grid.dx()), 0, grid.n_cells() - 1);
    return i;
  };
  FieldFn E = [&](double x, double w) { return model.at(x).entropy_density(w, m[cell(x)]); };
  FieldFn f = [&](double x, double w) { return model.at(x).f(w); };
  FieldFn v = [&](double, double w) { return v_sigma(w, sigma); };
  FieldFn g = [&](double x, double w) {
    const double fx = model.at(x).f(w);
    return v_sigma(w, sigma) * fx * fx;
  };
  return general_ratio(E, g, f, v, 2.0, u);
}

/// H(u) / D(u) with the solver's discrete functionals; 0/0 counts as 0.
inline RatioValue entropy_ratio(const BoundModel& bm, const GridField& m, const GridField& u) {
  RatioValue r;
  r.numerator = entropy(bm, m, u);
  r.denominator = entropy_production(bm, u);
  if (r.denominator <= kRatioDenominatorFloor) {
    r.unbounded = r.numerator != 0.0;
    r.ratio = r.unbounded ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    r.ratio = r.numerator / r.denominator;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Families

enum class FamilyKind { TrajectorySamples, FourierRandom, BumpScaled, VanishingSequence };

inline std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::TrajectorySamples: return "trajectory-samples";
    case FamilyKind::FourierRandom: return "fourier-random";
    case FamilyKind::BumpScaled: return "bump-scaled";
    case FamilyKind::VanishingSequence: return "vanishing-sequence";
  }
  return "?";
}

struct FunctionFamily {
  FamilyKind kind = FamilyKind::FourierRandom;
  double l1_floor = 0.0;

  // fourier-random: clip(base + sum_{k=1..modes} a_k cos(k pi (x-a)/(b-a)), floor),
  // a_k ~ U(-amplitude, amplitude)
  double base = 1.0;
  double amplitude = 0.5;
  int modes = 6;
  double floor = 0.0;
  std::uint64_t seed = 42;

  // bump-scaled / vanishing-sequence: u_k = scales[k] * profile
  SpatialProfile profile = SpatialProfile::constant(1.0);
  std::vector<double> scales;

  // trajectory-samples
  std::vector<GridField> fields;

  std::string describe() const {
    std::ostringstream s;
    s << std::setprecision(10) << to_string(kind) << " l1_floor=" << l1_floor;
    if (kind == FamilyKind::FourierRandom)
      s << " base=" << base << " amplitude=" << amplitude << " modes=" << modes << " floor=" << floor
        << " seed=" << seed;
    if (kind == FamilyKind::BumpScaled || kind == FamilyKind::VanishingSequence)
      s << " profile=" << profile.describe() << " scales=" << scales.size();
    if (kind == FamilyKind::TrajectorySamples) s << " fields=" << fields.size();
    return s.str();
  }

  /// Draws up to n fields. Fourier draws use stream `stream` of the seed so
  /// that fresh out-of-sample draws do not repeat the in-sample ones. Fields
  /// with L1 norm below l1_floor are rescaled up to it (trajectory samples
  /// below the floor are dropped instead).
  std::vector<GridField> generate(const Grid& grid, int n, std::uint64_t stream = 0) const {
    std::vector<GridField> out;
    auto lift = [&](GridField w) {
      const double l1 = l1_norm(w);
      if (l1_floor > 0.0 && l1 < l1_floor) {
        if (!(l1 > 0.0)) throw Error("family produced a zero field below l1_floor");
        // A few ulps of headroom so rounding cannot land just under the floor.
        const double factor = l1_floor / l1 * (1.0 + 8.0 * std::numeric_limits<double>::epsilon());
        for (double& v : w.values()) v *= factor;
      }
      return w;
    };
    switch (kind) {
      case FamilyKind::FourierRandom: {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * stream);
        std::uniform_real_distribution<double> coef(-amplitude, amplitude);
        for (int s = 0; s < n; ++s) {
          std::vector<double> a(static_cast<std::size_t>(modes));
          for (double& c : a) c = coef(rng);
          GridField w(grid);
          for (int i = 0; i < grid.n_cells(); ++i) {
            const double y = (grid.center(i) - grid.a()) / (grid.b() - grid.a());
            double v = base;
            for (int k = 1; k <= modes; ++k) v += a[k - 1] * std::cos(k * std::numbers::pi * y);
            w[i] = std::max(v, floor);
          }
          out.push_back(lift(std::move(w)));
        }
        break;
      }
      case FamilyKind::BumpScaled:
      case FamilyKind::VanishingSequence: {
        const GridField w = GridField::from_function(grid, [&](double x) { return profile(x); });
        for (std::size_t k = 0; k < scales.size() && static_cast<int>(out.size()) < n; ++k) {
          GridField u = w;
          for (double& v : u.values()) v *= scales[k];
          out.push_back(kind == FamilyKind::BumpScaled ? lift(std::move(u)) : std::move(u));
        }
        break;
      }
      case FamilyKind::TrajectorySamples:
        for (const auto& f : fields) {
          if (static_cast<int>(out.size()) >= n) break;
          if (!(f.grid() == grid)) throw Error("trajectory sample on a different grid");
          if (l1_norm(f) >= l1_floor) out.push_back(f);
        }
        break;
    }
    for (const auto& w : out)
      if (w.min() < 0.0) throw Error("family produced a negative field");
    return out;
  }
};

struct RatioSample {
  int id = 0;
  double l1 = 0.0;
  double entropy = 0.0;
  double production = 0.0;
  double ratio = 0.0;
  bool unbounded = false;
};

struct OutOfSampleCheck {
  int draws = 0;
  int violations = 0;  // H > slack * C * D
  double slack = 2.0;
};

struct RatioReport {
  std::string family;
  std::vector<RatioSample> samples;
  /// Empirical C: max ratio over samples and the ascent refinement. A lower
  /// estimate of the true constant.
  double C = 0.0;
  double witness_ratio = 0.0;
  std::optional<GridField> witness;
  int ascent_steps = 0;
  int unbounded_count = 0;
  bool blow_up_detected = false;
  std::optional<OutOfSampleCheck> out_of_sample;

  std::string summary() const {
    std::ostringstream s;
    s << std::setprecision(17);
    s << "family: " << family << '\n';
    s << "samples: " << samples.size() << '\n';
    s << "empirical_C: " << C << '\n';
    s << "witness_ratio: " << witness_ratio << '\n';
    s << "ascent_steps: " << ascent_steps << '\n';
    s << "unbounded_samples: " << unbounded_count << '\n';
    s << "blow_up_detected: " << (blow_up_detected ? "true" : "false") << '\n';
    if (out_of_sample)
      s << "out_of_sample: draws=" << out_of_sample->draws << " violations=" << out_of_sample->violations
        << " slack=" << out_of_sample->slack << '\n';
    return s.str();
  }
};

namespace detail {

inline std::vector<RatioSample> evaluate_ratios(const BoundModel& bm, const GridField& m,
                                                const std::vector<GridField>& fields, int threads) {
  std::vector<RatioSample> out(fields.size());
  parallel_for(static_cast<int>(fields.size()), threads, [&](int k) {
    const RatioValue r = entropy_ratio(bm, m, fields[k]);
    out[k] = {k, l1_norm(fields[k]), r.numerator, r.denominator, r.ratio, r.unbounded};
  });
  return out;
}

}  // namespace detail

struct EstimateOptions {
  int ascent_steps = 20;
  double ascent_amplitude = 0.01;  // times ||u||_inf
  int out_of_sample_draws = 100;
  double out_of_sample_slack = 2.0;
  int threads = 1;
};

/// Draws n_samples fields, returns the max of H/D with its witness, then
/// runs steepest coordinate ascent from the witness (perturbations of
/// +-amplitude*||u||_inf in one cell, keeping u >= 0 and the L1 floor).
/// The ascent is skipped when every ratio is 0 (nothing to sharpen).
inline RatioReport estimate_C(const FitnessModel& model, const FunctionFamily& family, const Grid& grid,
                              int n_samples, const EstimateOptions& opt = {}) {
  if (!(family.l1_floor > 0.0)) throw DomainError("estimate_C needs a family with l1_floor > 0");
  const BoundModel bm(model, grid);
  const GridField m = solve_m(model, grid).values;
  const std::vector<GridField> fields = family.generate(grid, n_samples);
  if (fields.empty()) throw Error("family generated no fields");

  RatioReport rep;
  rep.family = family.describe();
  rep.samples = detail::evaluate_ratios(bm, m, fields, opt.threads);
  std::size_t best = 0;
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    if (rep.samples[k].unbounded) ++rep.unbounded_count;
    else if (rep.samples[k].ratio > rep.samples[best].ratio || rep.samples[best].unbounded) best = k;
  }
  GridField w = fields[best];
  double r_best = rep.samples[best].ratio;

  if (r_best > 0.0 && std::isfinite(r_best)) {
    for (int step = 0; step < opt.ascent_steps; ++step) {
      const double delta = opt.ascent_amplitude * w.max_abs();
      double r_try_best = r_best;
      int i_best = -1;
      double d_best = 0.0;
      for (int i = 0; i < w.size(); ++i) {
        for (double d : {delta, -delta}) {
          if (w[i] + d < 0.0) continue;
          w[i] += d;
          if (l1_norm(w) >= family.l1_floor) {
            const RatioValue r = entropy_ratio(bm, m, w);
            if (!r.unbounded && r.ratio > r_try_best) {
              r_try_best = r.ratio;
              i_best = i;
              d_best = d;
            }
          }
          w[i] -= d;
        }
      }
      if (i_best < 0) break;
      w[i_best] += d_best;
      r_best = r_try_best;
      ++rep.ascent_steps;
    }
  }
  rep.C = r_best;
  rep.witness_ratio = entropy_ratio(bm, m, w).ratio;
  rep.witness = w;

  if (opt.out_of_sample_draws > 0 && family.kind == FamilyKind::FourierRandom) {
    const std::vector<GridField> fresh = family.generate(grid, opt.out_of_sample_draws, 1);
    const std::vector<RatioSample> rs = detail::evaluate_ratios(bm, m, fresh, opt.threads);
    OutOfSampleCheck chk;
    chk.draws = static_cast<int>(rs.size());
    chk.slack = opt.out_of_sample_slack;
    for (const auto& r : rs)
      if (r.entropy > chk.slack * rep.C * r.production) ++chk.violations;
    rep.out_of_sample = chk;
  }
  return rep;
}

/// Ratio H/D along u_k = s_k w. Detection: after the first positive ratio
/// r_ref the ratios never decrease and the last one is >= 10 r_ref.
inline RatioReport blow_up_scan(const FitnessModel& model, const GridField& w, const std::vector<double>& scales,
                                int threads = 1) {
  const Grid& grid = w.grid();
  const BoundModel bm(model, grid);
  const GridField m = solve_m(model, grid).values;
  std::vector<GridField> fields;
  for (double s : scales) {
    if (!(s > 0.0)) throw DomainError("blow-up scales must be positive");
    GridField u = w;
    for (double& v : u.values()) v *= s;
    fields.push_back(std::move(u));
  }
  RatioReport rep;
  rep.family = "vanishing-sequence scales=" + std::to_string(scales.size());
  rep.samples = detail::evaluate_ratios(bm, m, fields, threads);

  std::size_t best = 0;
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    if (rep.samples[k].unbounded) ++rep.unbounded_count;
    if (rep.samples[k].ratio > rep.samples[best].ratio) best = k;
  }
  if (!rep.samples.empty()) {
    rep.C = rep.samples[best].ratio;
    rep.witness_ratio = rep.C;
    rep.witness = fields[best];
  }

  std::size_t first = 0;
  while (first < rep.samples.size() && !(rep.samples[first].ratio > 0.0)) ++first;
  bool monotone = first < rep.samples.size();
  for (std::size_t k = first + 1; monotone && k < rep.samples.size(); ++k)
    if (rep.samples[k].ratio < rep.samples[k - 1].ratio) monotone = false;
  rep.blow_up_detected = monotone && rep.samples.back().ratio >= 10.0 * rep.samples[first].ratio;
  return rep;
}

inline void write_lab_report_csv(const std::string& path, const RatioReport& rep) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << std::setprecision(17);
  out << "# columns: sample_id,l1_norm,entropy,production,ratio\n";
  out << "# family: " << rep.family << '\n';
  out << "# empirical_C: " << rep.C << '\n';
  out << "sample_id,l1_norm,entropy,production,ratio\n";
  for (const auto& s : rep.samples)
    out << s.id << ',' << s.l1 << ',' << s.entropy << ',' << s.production << ',' << s.ratio << '\n';
}

}  // namespace hkflow
