#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hkflow/errors.hpp"
#include "hkflow/expression.hpp"

namespace hkflow {

/// Natural cubic spline through strictly increasing abscissae.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> xs, std::vector<double> ys) : x_(std::move(xs)), y_(std::move(ys)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ConfigError("tabulated profile needs at least two (x,value) rows");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw ConfigError("tabulated profile: x must be strictly increasing");
    // Second derivatives by the Thomas algorithm; natural end conditions.
    m_.assign(n, 0.0);
    if (n > 2) {
      std::vector<double> c(n, 0.0), d(n, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
        const double r = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        const double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (r - a * d[i - 1]) / denom;
      }
      for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
    }
  }

  double value(double x) const {
    const auto [i, t, h] = locate(x);
    const double a = 1.0 - t, b = t;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double derivative(double x) const {
    const auto [i, t, h] = locate(x);
    const double a = 1.0 - t, b = t;
    return (y_[i + 1] - y_[i]) / h +
           (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  struct Loc {
    std::size_t i;
    double t;
    double h;
  };

  Loc locate(double x) const {
    if (x < x_.front() - 1e-12 * (1.0 + std::abs(x_.front())) ||
        x > x_.back() + 1e-12 * (1.0 + std::abs(x_.back())))
      throw DomainError("tabulated profile evaluated outside its table at x=" + std::to_string(x));
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    return {i, (x - x_[i]) / h, h};
  }

  std::vector<double> x_, y_, m_;
};

/// A smooth function of x on [a,b]: constant, expression, or tabulated samples.
class SpatialProfile {
 public:
  SpatialProfile() : rep_(0.0) {}

  static SpatialProfile constant(double c) {
    SpatialProfile p;
    p.rep_ = c;
    return p;
  }
  static SpatialProfile expression(Expression e) {
    SpatialProfile p;
    p.rep_ = std::move(e);
    return p;
  }
  static SpatialProfile parse(const std::string& src) {
    Expression e = Expression::parse(src);
    if (!e.depends_on_x()) return constant(e(0.0));
    return expression(std::move(e));
  }
  static SpatialProfile tabulated(std::vector<double> xs, std::vector<double> ys) {
    SpatialProfile p;
    p.rep_ = std::make_shared<const CubicSpline>(std::move(xs), std::move(ys));
    return p;
  }

  /// Reads a two-column CSV (x,value). Lines starting with '#' and a
  /// non-numeric header row are skipped.
  static SpatialProfile from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile CSV '" + path + "'");
    std::vector<double> xs, ys;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double x = 0.0, y = 0.0;
      if (!(ss >> x >> y)) {
        if (xs.empty()) continue;  // header row
        throw ConfigError("profile CSV '" + path + "': malformed row", lineno);
      }
      xs.push_back(x);
      ys.push_back(y);
    }
    return tabulated(std::move(xs), std::move(ys));
  }

  double operator()(double x) const {
    if (auto c = std::get_if<double>(&rep_)) return *c;
    if (auto e = std::get_if<Expression>(&rep_)) return (*e)(x);
    return std::get<std::shared_ptr<const CubicSpline>>(rep_)->value(x);
  }

  double derivative(double x) const {
    if (std::holds_alternative<double>(rep_)) return 0.0;
    if (auto e = std::get_if<Expression>(&rep_)) return e->d_dx(x);
    return std::get<std::shared_ptr<const CubicSpline>>(rep_)->derivative(x);
  }

  bool is_constant() const { return std::holds_alternative<double>(rep_); }

  std::string describe() const {
    if (auto c = std::get_if<double>(&rep_)) {
      std::ostringstream s;
      s.precision(17);
      s << *c;
      return s.str();
    }
    if (auto e = std::get_if<Expression>(&rep_)) return e->source();
    return "tabulated";
  }

  /// Checks the profile is finite on [a,b] (and positive if required) at `samples` points.
  void check_on(double a, double b, bool require_positive, int samples = 257) const {
    for (int i = 0; i < samples; ++i) {
      const double x = a + (b - a) * i / (samples - 1);
      const double v = (*this)(x);
      if (!std::isfinite(v)) throw DomainError("profile not finite at x=" + std::to_string(x));
      if (require_positive && !(v > 0.0))
        throw DomainError("profile must be strictly positive; value " + std::to_string(v) +
                          " at x=" + std::to_string(x));
    }
  }

 private:
  std::variant<double, Expression, std::shared_ptr<const CubicSpline>> rep_;
};

}  // namespace hkflow
