#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hkflow/hkflow.hpp"

namespace testing {

// Independent quadrature oracle (Boost) for integrals the library computes
// with its own Gauss-Kronrod code.
template <class F>
double oracle_integral(F f, double lo, double hi) {
  if (lo == hi) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, lo, hi);
}

inline hkflow::GridField field(const hkflow::Grid& g, const std::string& expr) {
  const auto e = hkflow::Expression::parse(expr);
  return hkflow::GridField::from_function(g, [&](double x) { return e(x); });
}

inline hkflow::FitnessModel logistic(const std::string& m = "1") {
  return hkflow::FitnessModel::logistic(hkflow::SpatialProfile::parse(m));
}

inline hkflow::FitnessModel boltzmann(const std::string& V = "0") {
  return hkflow::FitnessModel::boltzmann(hkflow::SpatialProfile::parse(V));
}

/// Logistic f = m(x) - u - x u^2 given through the custom interface;
/// exercises Phi_x != 0.
inline hkflow::FitnessModel custom_quadratic() {
  hkflow::CustomFitness c;
  c.f = [](double x, double u) { return 1.0 + 0.5 * std::sin(M_PI * x) - u - x * u * u; };
  c.f_u = [](double x, double u) { return -1.0 - 2.0 * x * u; };
  c.f_x = [](double x, double u) { return 0.5 * M_PI * std::cos(M_PI * x) - u * u; };
  c.f_xu = [](double, double u) { return -2.0 * u; };
  c.x_lo = 0.0;
  c.x_hi = 1.0;
  c.u_hi = 1e4;
  c.description = "1+0.5*sin(pi*x)-u-x*u^2";
  return hkflow::FitnessModel::custom(c);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hkflow_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

/// Numeric rows of a CSV with '#' comments and one header row.
inline std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace testing
