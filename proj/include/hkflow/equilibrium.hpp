#pragma once

// The ideal free distribution m(x) (root of f(x,.) = 0), the comparison
// profiles u_c (roots of f(x,.) = c) and the a priori L-infinity bound.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "hkflow/errors.hpp"
#include "hkflow/fitness.hpp"
#include "hkflow/grid.hpp"

namespace hkflow {

struct RootOptions {
  double tol = 1e-12;  // on |f - c|
  int max_bisections = 200;
  double lo = 1e-6;
  double hi = 1e3;
  int max_expand = 60;
};

struct RootResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::infinity();
  bool found = false;
};

/// Solves f(x,u) = c for u > 0 by bisection on an automatically expanded
/// bracket. `found` is false when no sign change can be bracketed.
inline RootResult solve_level(const LocalFitness& lf, double c, const RootOptions& opt = {},
                              double u_cap = std::numeric_limits<double>::infinity()) {
  auto g = [&](double u) -> double {
    try {
      return lf.f(u) - c;
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  double lo = opt.lo, hi = std::min(opt.hi, u_cap);
  double glo = g(lo), ghi = g(hi);
  for (int k = 0; k < opt.max_expand && !(glo > 0.0); ++k) {
    lo *= 0.5;
    glo = g(lo);
  }
  for (int k = 0; k < opt.max_expand && !(ghi < 0.0) && hi < u_cap; ++k) {
    hi = std::min(hi * 2.0, u_cap);
    ghi = g(hi);
  }
  RootResult r;
  if (glo == 0.0) return {lo, 0.0, true};
  if (ghi == 0.0) return {hi, 0.0, true};
  if (!(glo > 0.0) || !(ghi < 0.0)) return r;
  r.found = true;
  r.value = std::abs(glo) < std::abs(ghi) ? lo : hi;
  r.residual = std::min(std::abs(glo), std::abs(ghi));
  for (int k = 0; k < opt.max_bisections && r.residual > opt.tol; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double gm = g(mid);
    if (std::abs(gm) < r.residual) {
      r.residual = std::abs(gm);
      r.value = mid;
    }
    if (gm > 0.0) lo = mid;
    else if (gm < 0.0) hi = mid;
    else break;
  }
  return r;
}

/// Per-cell m(x_i) with residual |f(x_i, m_i)|.
struct EquilibriumField {
  GridField values;
  GridField residual;

  const Grid& grid() const { return values.grid(); }
};

/// Per-cell u_c(x_i) for one level c; cells without a root have exists = 0
/// and a NaN value.
struct ComparisonProfile {
  double level = 0.0;
  GridField values;
  GridField residual;
  std::vector<char> exists;

  bool exists_everywhere() const {
    return std::all_of(exists.begin(), exists.end(), [](char e) { return e != 0; });
  }
};

inline EquilibriumField solve_m(const FitnessModel& model, const Grid& grid, const RootOptions& opt = {}) {
  EquilibriumField eq{GridField(grid), GridField(grid)};
  for (int i = 0; i < grid.n_cells(); ++i) {
    const RootResult r = solve_level(model.at(grid.center(i)), 0.0, opt, model.u_max());
    if (!r.found)
      throw BracketError("cannot bracket f(x,.) = 0 at x=" + std::to_string(grid.center(i)) +
                         "; assumptions (f3)/(f4) look violated");
    eq.values[i] = r.value;
    eq.residual[i] = r.residual;
  }
  return eq;
}

inline ComparisonProfile solve_uc(const FitnessModel& model, const Grid& grid, double c,
                                  const RootOptions& opt = {}) {
  ComparisonProfile p{c, GridField(grid), GridField(grid), std::vector<char>(grid.n_cells(), 0)};
  for (int i = 0; i < grid.n_cells(); ++i) {
    const RootResult r = solve_level(model.at(grid.center(i)), c, opt, model.u_max());
    p.exists[i] = r.found ? 1 : 0;
    p.values[i] = r.found ? r.value : std::numeric_limits<double>::quiet_NaN();
    p.residual[i] = r.residual;
  }
  return p;
}

/// f^-(x,u) = max(-f, 0); zero at u = 0 where f is +inf or positive.
inline double negative_part_of_f(const LocalFitness& lf, double u) {
  if (u <= 0.0) return 0.0;
  return std::max(-lf.f(u), 0.0);
}

/// inf{ xi >= 0 : sup_x f(x,xi) <= -esssup_x f^-(x,u0(x)) }, evaluated as the
/// sup of u_c over the cell centers and both end points of [a,b].
inline double linfty_bound(const FitnessModel& model, const GridField& u0, const RootOptions& opt = {}) {
  const Grid& grid = u0.grid();
  double worst = 0.0;
  for (int i = 0; i < grid.n_cells(); ++i) {
    if (u0[i] < 0.0) throw DomainError("initial data must be nonnegative");
    worst = std::max(worst, negative_part_of_f(model.at(grid.center(i)), u0[i]));
  }
  const double c = -worst;
  std::vector<double> xs = grid.centers();
  xs.push_back(grid.a());
  xs.push_back(grid.b());
  double bound = 0.0;
  for (double x : xs) {
    const RootResult r = solve_level(model.at(x), c, opt, model.u_max());
    if (!r.found)
      throw BracketError("cannot bracket f(x,.) = " + std::to_string(c) + " at x=" + std::to_string(x) +
                         "; assumption (large-u) looks violated");
    bound = std::max(bound, r.value);
  }
  return bound;
}

/// || min(u0, m) ||_{L1}, the lower bound on the mass of the solution.
inline double l1_lower_bound(const GridField& u0, const GridField& m) {
  double s = 0.0;
  for (int i = 0; i < u0.size(); ++i) s += std::min(u0[i], m[i]);
  return s * u0.grid().dx();
}

inline void write_profile_csv(const std::string& path, const GridField& values, const GridField& residual,
                              const std::string& column, const std::vector<char>* exists = nullptr) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "# columns: x," << column << ",residual" << (exists ? ",exists" : "") << '\n';
  out << "x," << column << ",residual" << (exists ? ",exists" : "") << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < values.size(); ++i) {
    out << values.grid().center(i) << ',' << values[i] << ',' << residual[i];
    if (exists) out << ',' << int((*exists)[i]);
    out << '\n';
  }
}

inline void write_equilibrium_csv(const std::string& path, const EquilibriumField& eq) {
  write_profile_csv(path, eq.values, eq.residual, "m");
}

inline void write_comparison_csv(const std::string& path, const ComparisonProfile& p) {
  write_profile_csv(path, p.values, p.residual, "u_c", &p.exists);
}

}  // namespace hkflow
