#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hkflow/errors.hpp"

namespace hkflow {

/// Uniform cell-centered grid on [a,b]. Face j sits at a + j*dx, j = 0..n;
/// faces 0 and n are the (no-flux) boundary.
class Grid {
 public:
  static constexpr int kMinCells = 8;

  Grid(double a, double b, int n_cells) : a_(a), b_(b), n_(n_cells) {
    if (!(a < b)) throw Error("grid requires a < b");
    if (n_cells < kMinCells) throw Error("n_cells >= 8 required, got " + std::to_string(n_cells));
    dx_ = (b - a) / n_cells;
  }

  double a() const { return a_; }
  double b() const { return b_; }
  int n_cells() const { return n_; }
  double dx() const { return dx_; }
  double center(int i) const { return a_ + (i + 0.5) * dx_; }
  double face(int j) const { return a_ + j * dx_; }

  std::vector<double> centers() const {
    std::vector<double> xs(n_);
    for (int i = 0; i < n_; ++i) xs[i] = center(i);
    return xs;
  }

  bool operator==(const Grid& o) const { return a_ == o.a_ && b_ == o.b_ && n_ == o.n_; }

 private:
  double a_, b_;
  int n_;
  double dx_;
};

/// Cell-averaged scalar on a Grid.
class GridField {
 public:
  explicit GridField(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.n_cells(), fill) {}

  GridField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.n_cells())
      throw Error("field length " + std::to_string(values_.size()) + " does not match n_cells " +
                  std::to_string(grid_.n_cells()));
  }

  /// Samples fn at the cell centers.
  static GridField from_function(Grid grid, const std::function<double(double)>& fn) {
    GridField w(grid);
    for (int i = 0; i < grid.n_cells(); ++i) w[i] = fn(grid.center(i));
    return w;
  }

  const Grid& grid() const { return grid_; }
  int size() const { return grid_.n_cells(); }
  double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values_) m = std::max(m, v);
    return m;
  }
  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values_) m = std::min(m, v);
    return m;
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Midpoint rule: dx * sum w_i.
inline double integrate_field(const GridField& w) {
  double s = 0.0;
  for (double v : w.values()) s += v;
  return w.grid().dx() * s;
}

/// L1 norm, dx * sum |w_i|.
inline double l1_norm(const GridField& w) {
  double s = 0.0;
  for (double v : w.values()) s += std::abs(v);
  return w.grid().dx() * s;
}

inline double linf_distance(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Discrete gradient on faces: interior face j gets (w_j - w_{j-1})/dx,
/// boundary faces 0 (no flux). Length n_cells + 1.
inline std::vector<double> face_gradient(const GridField& w) {
  const int n = w.size();
  const double inv_dx = 1.0 / w.grid().dx();
  std::vector<double> g(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j < n; ++j) g[j] = (w[j] - w[j - 1]) * inv_dx;
  return g;
}

/// Discrete divergence of a face flux on raw arrays: cell i gets
/// (F_{i+1} - F_i)/dx. Rejects nonzero boundary fluxes.
inline std::vector<double> face_divergence(double dx, const std::vector<double>& flux) {
  if (flux.size() < 2) throw Error("face flux needs at least two entries");
  if (flux.front() != 0.0 || flux.back() != 0.0)
    throw Error("nonzero boundary flux violates the no-flux condition");
  std::vector<double> div(flux.size() - 1);
  for (std::size_t i = 0; i + 1 < flux.size(); ++i) div[i] = (flux[i + 1] - flux[i]) / dx;
  return div;
}

inline GridField face_divergence(const Grid& grid, const std::vector<double>& flux) {
  if (static_cast<int>(flux.size()) != grid.n_cells() + 1)
    throw Error("face flux must have n_cells + 1 entries");
  return GridField(grid, face_divergence(grid.dx(), flux));
}

// ---------------------------------------------------------------------------
// Snapshot CSV: '#' schema line, header row, one row per cell, 17 digits.

inline void write_snapshot_csv(std::ostream& out, const GridField& w, const std::string& column = "u",
                               const std::vector<std::string>& comments = {}) {
  out << "# columns: x," << column << '\n';
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "x," << column << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < w.size(); ++i) out << w.grid().center(i) << ',' << w[i] << '\n';
}

inline void write_snapshot_csv(const std::string& path, const GridField& w,
                               const std::string& column = "u",
                               const std::vector<std::string>& comments = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_snapshot_csv(out, w, column, comments);
}

/// Reads a snapshot CSV (x,value) onto `grid`; the x column must match the
/// cell centers.
inline GridField read_snapshot_csv(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open snapshot '" + path + "'");
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x = 0.0, v = 0.0;
    if (!(ss >> x >> v)) continue;  // header row
    const int i = static_cast<int>(vals.size());
    if (i >= grid.n_cells() || std::abs(x - grid.center(i)) > 1e-9 * (grid.b() - grid.a()))
      throw Error("snapshot '" + path + "' does not match the grid");
    vals.push_back(v);
  }
  return GridField(grid, std::move(vals));
}

}  // namespace hkflow
