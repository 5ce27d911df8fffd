#pragma once

// Checks along recorded trajectories: dissipation identity residual,
// exponential rate fit, a priori bound audit and L1 contraction reports.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hkflow/equilibrium.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/fitness.hpp"
#include "hkflow/functionals.hpp"
#include "hkflow/grid.hpp"
#include "hkflow/trajectory.hpp"

namespace hkflow {

inline constexpr double kDefaultEntropyFloor = 1e-10;
inline constexpr double kAuditSlack = 1e-2;

struct TimeWindow {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double t) const { return t >= lo && t <= hi; }
};

/// max over interior samples k of the window of
///   |(H_{k+1} - H_{k-1}) / (t_{k+1} - t_{k-1}) + D_k| / max(D_k, 1e-12).
inline double dissipation_residual(const TrajectoryRecord& rec, const TimeWindow& window = {}) {
  std::vector<const Sample*> s;
  for (const auto& x : rec.samples)
    if (window.contains(x.t)) s.push_back(&x);
  if (s.size() < 3) throw InsufficientSamples();
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    const double dh = (s[k + 1]->entropy - s[k - 1]->entropy) / (s[k + 1]->t - s[k - 1]->t);
    const double d = s[k]->production;
    worst = std::max(worst, std::abs(dh + d) / std::max(d, 1e-12));
  }
  return worst;
}

struct RateFit {
  double gamma = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double r2 = 0.0;
  bool envelope_ok = false;
  int n_samples = 0;
  double entropy_floor = kDefaultEntropyFloor;

  /// Lines for the '#' header block of the trajectory CSV.
  std::vector<std::string> comment_lines() const {
    std::ostringstream a, b, c, d;
    a.precision(17);
    b.precision(17);
    c.precision(17);
    a << "rate_fit gamma=" << gamma;
    b << "rate_fit window=" << t_lo << "," << t_hi << " samples=" << n_samples << " entropy_floor=" << entropy_floor;
    c << "rate_fit r2=" << r2;
    d << "rate_fit envelope_ok=" << (envelope_ok ? "true" : "false");
    return {a.str(), b.str(), c.str(), d.str()};
  }
};

/// Least-squares slope of log H against t. The window opens at the first
/// sample with H <= H(0)/2 and runs while H > entropy_floor. The envelope
/// H_k <= H_0 exp(-0.9 gamma (t_k - t_0)) (1 + 1e-3) is checked at every
/// sample above the floor.
inline RateFit fit_rate(const TrajectoryRecord& rec, double entropy_floor = kDefaultEntropyFloor) {
  const auto& s = rec.samples;
  if (s.empty() || !(s.front().entropy > entropy_floor)) throw InsufficientSamples();
  const double h0 = s.front().entropy;
  std::size_t start = 0;
  while (start < s.size() && s[start].entropy > 0.5 * h0) ++start;
  std::size_t end = start;
  while (end < s.size() && s[end].entropy > entropy_floor) ++end;
  const std::size_t n = end - start;
  if (n < 10) throw InsufficientSamples();

  double st = 0.0, sy = 0.0;
  for (std::size_t k = start; k < end; ++k) {
    st += s[k].t;
    sy += std::log(s[k].entropy);
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = start; k < end; ++k) {
    const double dt = s[k].t - mt, dy = std::log(s[k].entropy) - my;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw InsufficientSamples();
  const double slope = sty / stt;
  const double ss_res = std::max(syy - slope * sty, 0.0);

  RateFit fit;
  fit.gamma = -slope;
  fit.t_lo = s[start].t;
  fit.t_hi = s[end - 1].t;
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_samples = static_cast<int>(n);
  fit.entropy_floor = entropy_floor;
  fit.envelope_ok = true;
  const double g_env = 0.9 * fit.gamma;
  const double t0 = s.front().t;
  for (const auto& x : s) {
    if (!(x.entropy > entropy_floor)) continue;
    if (x.entropy > h0 * std::exp(-g_env * (x.t - t0)) * (1.0 + 1e-3)) {
      fit.envelope_ok = false;
      break;
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Bound audit

struct AuditCheck {
  std::string name;
  bool passed = true;
  double witness_t = 0.0;
  double value = 0.0;  // at the witness (worst sample when passing)
  double bound = 0.0;
};

struct AuditReport {
  std::vector<AuditCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const AuditCheck& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw Error("no audit check named " + name);
  }

  std::string to_text() const {
    std::ostringstream s;
    s << std::setprecision(17);
    s << "# columns: check,status,witness_t,value,bound\n";
    for (const auto& c : checks)
      s << c.name << ' ' << (c.passed ? "pass" : "FAIL") << " t=" << c.witness_t << " value=" << c.value
        << " bound=" << c.bound << '\n';
    return s.str();
  }
};

/// Checks every sample against: the L-infinity bound, the lower L1 bound,
/// H(u(t)) <= H(u0)(1+slack) and H_k <= H_{k-1}(1+slack). The entropy checks
/// also allow `entropy_floor` absolutely: the cellwise m is not the discrete
/// steady state, which sits O(dx^4) away in entropy.
inline AuditReport audit_bounds(const FitnessModel& model, const TrajectoryRecord& rec, const GridField& u0,
                                double slack = kAuditSlack, double entropy_floor = kDefaultEntropyFloor) {
  const double linf = linfty_bound(model, u0);
  const double l1_low = l1_lower_bound(u0, solve_m(model, u0.grid()).values);
  const double h_init = rec.samples.empty() ? 0.0 : rec.samples.front().entropy;

  AuditCheck c_linf{"linfty_bound", true, 0.0, 0.0, linf * (1.0 + slack)};
  AuditCheck c_l1{"l1_lower_bound", true, 0.0, std::numeric_limits<double>::infinity(), l1_low * (1.0 - slack)};
  AuditCheck c_init{"entropy_initial", true, 0.0, 0.0, h_init * (1.0 + slack) + entropy_floor};
  AuditCheck c_mono{"entropy_monotone", true, 0.0, 0.0, 0.0};

  auto note = [](AuditCheck& c, bool ok, double t, double value, double bound, bool worse) {
    if (!c.passed) return;
    if (!ok) {
      c = {c.name, false, t, value, bound};
    } else if (worse) {
      c.witness_t = t;
      c.value = value;
    }
  };
  for (std::size_t k = 0; k < rec.samples.size(); ++k) {
    const Sample& s = rec.samples[k];
    note(c_linf, s.linfty <= c_linf.bound, s.t, s.linfty, c_linf.bound, s.linfty >= c_linf.value);
    note(c_l1, s.l1 >= c_l1.bound, s.t, s.l1, c_l1.bound, s.l1 <= c_l1.value);
    note(c_init, s.entropy <= c_init.bound, s.t, s.entropy, c_init.bound, s.entropy >= c_init.value);
    if (k > 0) {
      const double allowed = rec.samples[k - 1].entropy * (1.0 + slack) + entropy_floor;
      const double excess = s.entropy - rec.samples[k - 1].entropy;
      note(c_mono, s.entropy <= allowed, s.t, s.entropy, allowed, excess >= c_mono.value);
    }
  }
  return {{c_linf, c_l1, c_init, c_mono}};
}

/// First sample k with H_k > H_{k-1} + abs_slack, or -1.
inline int first_entropy_increase(const TrajectoryRecord& rec, double abs_slack) {
  for (std::size_t k = 1; k < rec.samples.size(); ++k)
    if (rec.samples[k].entropy > rec.samples[k - 1].entropy + abs_slack) return static_cast<int>(k);
  return -1;
}

// ---------------------------------------------------------------------------
// L1 contraction

inline double positive_part_l1(const GridField& u, const GridField& v) {
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += std::max(u[i] - v[i], 0.0);
  return s * u.grid().dx();
}

inline double negative_part_l1(const GridField& u, const GridField& v) { return positive_part_l1(v, u); }

/// sup |d_u (u f)| = sup |f + u f_u| over [kappa, 1/kappa] x [a,b] on a
/// probe grid (u log-spaced).
inline double estimate_L_kappa(const FitnessModel& model, double a, double b, double kappa, int nx = 65,
                               int nu = 257) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in (0,1)");
  double L = 0.0;
  for (int i = 0; i < nx; ++i) {
    const LocalFitness lf = model.at(a + (b - a) * i / (nx - 1));
    for (int j = 0; j < nu; ++j) {
      const double u = kappa * std::pow(1.0 / (kappa * kappa), static_cast<double>(j) / (nu - 1));
      L = std::max(L, std::abs(lf.f(u) + u * lf.f_u(u)));
    }
  }
  return L;
}

struct ContractionRow {
  double t = 0.0;
  double norm = 0.0;   // ||(u - v)^+||_1
  double bound = 0.0;  // e^{L t} ||(u0 - v0)^+||_1 * (1 + 1e-3)
  bool ok = true;
};

struct ContractionReport {
  double L_kappa = 0.0;
  double kappa = 0.0;
  bool kappa_range_ok = true;  // kappa <= u, v <= 1/kappa at every sample
  bool bound_ok = true;
  bool nonincreasing = true;
  std::vector<ContractionRow> rows;
};

/// Pairwise report from two records with matching sample times and kept fields.
inline ContractionReport contraction_report(const TrajectoryRecord& u, const TrajectoryRecord& v, double L_kappa,
                                            double kappa) {
  if (u.fields.size() != v.fields.size() || u.fields.empty() || u.samples.size() != u.fields.size())
    throw Error("contraction report needs two records with kept fields at matching samples");
  ContractionReport rep;
  rep.L_kappa = L_kappa;
  rep.kappa = kappa;
  const double n0 = positive_part_l1(u.fields.front(), v.fields.front());
  for (std::size_t k = 0; k < u.fields.size(); ++k) {
    const double t = u.samples[k].t;
    if (std::abs(t - v.samples[k].t) > 1e-12 * std::max(1.0, t)) throw Error("sample times of the pair differ");
    ContractionRow r;
    r.t = t;
    r.norm = positive_part_l1(u.fields[k], v.fields[k]);
    r.bound = std::exp(L_kappa * t) * n0 * (1.0 + 1e-3);
    r.ok = r.norm <= r.bound;
    rep.bound_ok = rep.bound_ok && r.ok;
    if (k > 0 && r.norm > rep.rows.back().norm) rep.nonincreasing = false;
    for (const GridField* w : {&u.fields[k], &v.fields[k]})
      if (w->min() < kappa || w->max() > 1.0 / kappa) rep.kappa_range_ok = false;
    rep.rows.push_back(r);
  }
  return rep;
}

inline void write_contraction_csv(const std::string& path, const ContractionReport& rep) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << std::setprecision(17);
  out << "# columns: t,norm,bound,ok\n";
  out << "# L_kappa=" << rep.L_kappa << " kappa=" << rep.kappa << " kappa_range_ok=" << rep.kappa_range_ok
      << " bound_ok=" << rep.bound_ok << " nonincreasing=" << rep.nonincreasing << '\n';
  out << "t,norm,bound,ok\n";
  for (const auto& r : rep.rows) out << r.t << ',' << r.norm << ',' << r.bound << ',' << int(r.ok) << '\n';
}

/// t -> int (u(t) - u_c)^+ (level c <= 0) or int (u(t) - u_c)^- (c > 0) from
/// kept fields. u_c must exist in every cell.
inline std::vector<std::pair<double, double>> restricted_contraction_series(const TrajectoryRecord& rec,
                                                                            const ComparisonProfile& uc) {
  if (!uc.exists_everywhere()) throw Error("comparison profile u_c does not exist everywhere");
  if (rec.fields.size() != rec.samples.size()) throw Error("restricted contraction needs kept fields");
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < rec.fields.size(); ++k) {
    const double v = uc.level <= 0.0 ? positive_part_l1(rec.fields[k], uc.values)
                                     : negative_part_l1(rec.fields[k], uc.values);
    out.emplace_back(rec.samples[k].t, v);
  }
  return out;
}

/// Largest growth rate (I_k - I_{k-1}) / (t_k - t_{k-1}) of a series; <= 0
/// means non-increasing.
inline double max_growth_rate(const std::vector<std::pair<double, double>>& series) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < series.size(); ++k)
    worst = std::max(worst, (series[k].second - series[k - 1].second) / (series[k].first - series[k - 1].first));
  return series.size() < 2 ? 0.0 : worst;
}

}  // namespace hkflow
