#pragma once

// Fitness nonlinearities f(x,u) and the scalar functions derived from them:
//
//   Phi(x,u)   = -int_0^u xi f_u(x,xi) dxi
//   Phi_x(x,u) = -int_0^u xi f_xu(x,xi) dxi
//   Psi(x,u)   =  int_0^u Phi(x,xi) dxi
//   E(x,u)     = -int_{m(x)}^u f(x,xi) dxi
//
// Logistic, Power and Boltzmann models have closed forms; Custom models go
// through adaptive quadrature. The quadrature route is exposed for every kind
// so the two can be cross-checked.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hkflow/errors.hpp"
#include "hkflow/profile.hpp"
#include "hkflow/quadrature.hpp"

namespace hkflow {

enum class ModelKind { Logistic, Power, Boltzmann, Custom };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Power: return "power";
    case ModelKind::Boltzmann: return "boltzmann";
    case ModelKind::Custom: return "custom";
  }
  return "?";
}

/// User-supplied fitness with its partial derivatives and the rectangle
/// [x_lo,x_hi] x [u_lo,u_hi] on which the evaluators are valid.
struct CustomFitness {
  std::function<double(double, double)> f;
  std::function<double(double, double)> f_u;
  std::function<double(double, double)> f_x;
  std::function<double(double, double)> f_xu;
  double x_lo = 0.0;
  double x_hi = 1.0;
  double u_lo = 0.0;
  double u_hi = 1e3;
  std::string description = "custom";
};

class FitnessModel;

/// A fitness model frozen at one position x. Spatial profiles are evaluated
/// once on construction, so repeated evaluation in u is cheap.
class LocalFitness {
 public:
  double x() const { return x_; }
  ModelKind kind() const { return kind_; }

  double f(double u) const {
    check_u(u, true);
    switch (kind_) {
      case ModelKind::Logistic: return p_ - u;
      case ModelKind::Power: return sign_ * (p_ - std::pow(u, alpha_));
      case ModelKind::Boltzmann: return -(std::log(u) + p_);
      case ModelKind::Custom: return custom_->f(x_, u);
    }
    return 0.0;
  }

  double f_u(double u) const {
    check_u(u, true);
    switch (kind_) {
      case ModelKind::Logistic: return -1.0;
      case ModelKind::Power: return -std::abs(alpha_) * std::pow(u, alpha_ - 1.0);
      case ModelKind::Boltzmann: return -1.0 / u;
      case ModelKind::Custom: return custom_->f_u(x_, u);
    }
    return 0.0;
  }

  double f_x(double u) const {
    check_u(u, true);
    switch (kind_) {
      case ModelKind::Logistic: return dp_;
      case ModelKind::Power: return sign_ * dp_;
      case ModelKind::Boltzmann: return -dp_;
      case ModelKind::Custom: return custom_->f_x(x_, u);
    }
    return 0.0;
  }

  double f_xu(double u) const {
    check_u(u, true);
    if (kind_ == ModelKind::Custom) return custom_->f_xu(x_, u);
    return 0.0;
  }

  double phi(double u) const {
    check_u(u, false);
    switch (kind_) {
      case ModelKind::Logistic: return 0.5 * u * u;
      case ModelKind::Power: return std::abs(alpha_) * std::pow(u, alpha_ + 1.0) / (alpha_ + 1.0);
      case ModelKind::Boltzmann: return u;
      case ModelKind::Custom: return phi_by_quadrature(u).value;
    }
    return 0.0;
  }

  double phi_x(double u) const {
    check_u(u, false);
    if (kind_ == ModelKind::Custom) return phi_x_by_quadrature(u).value;
    return 0.0;
  }

  double psi(double u) const {
    check_u(u, false);
    switch (kind_) {
      case ModelKind::Logistic: return u * u * u / 6.0;
      case ModelKind::Power:
        return std::abs(alpha_) * std::pow(u, alpha_ + 2.0) / ((alpha_ + 1.0) * (alpha_ + 2.0));
      case ModelKind::Boltzmann: return 0.5 * u * u;
      case ModelKind::Custom: return psi_by_quadrature(u).value;
    }
    return 0.0;
  }

  /// E(x,u) relative to the root m_x of f(x,.) = 0. Clamped at zero against
  /// rounding.
  double entropy_density(double u, double m_x) const {
    check_u(u, false);
    double e = 0.0;
    switch (kind_) {
      case ModelKind::Logistic: e = (u - m_x) * (0.5 * (u + m_x) - p_); break;
      case ModelKind::Power: {
        const double beta = alpha_ + 1.0;
        const double pow_diff =
            u > 0.0 ? std::pow(m_x, beta) * std::expm1(beta * std::log(u / m_x)) : -std::pow(m_x, beta);
        e = sign_ * (-p_ * (u - m_x) + pow_diff / beta);
        break;
      }
      case ModelKind::Boltzmann: {
        const double lin = (u - m_x) * (std::log(m_x) + p_);
        e = (u > 0.0 ? u * std::log(u / m_x) : 0.0) - u + m_x + lin;
        break;
      }
      case ModelKind::Custom: e = entropy_density_by_quadrature(u, m_x).value; break;
    }
    return std::max(e, 0.0);
  }

  /// u f with the continuous extension u f = 0 at u = 0.
  double reaction(double u) const { return u > 0.0 ? u * f(u) : 0.0; }

  /// Phi_x + u f_x, zero at u = 0.
  double drift(double u) const { return u > 0.0 ? phi_x(u) + u * f_x(u) : 0.0; }

  /// Diffusion coefficient -u f_u of the quasilinear form (= d Phi / du).
  double diffusivity(double u) const {
    if (u <= 0.0) {
      if (kind_ == ModelKind::Power && alpha_ < 0.0) return std::numeric_limits<double>::infinity();
      if (kind_ == ModelKind::Custom) return 0.0;
      return kind_ == ModelKind::Boltzmann ? 1.0 : 0.0;
    }
    return -u * f_u(u);
  }

  // Quadrature routes, valid for every kind.

  QuadResult phi_by_quadrature(double u, double tol = kQuadTol) const {
    return integrate_from_origin([&](double xi) { return -xi * f_u(xi); }, u, tol);
  }

  QuadResult phi_x_by_quadrature(double u, double tol = kQuadTol) const {
    return integrate_from_origin([&](double xi) { return -xi * f_xu(xi); }, u, tol);
  }

  /// Psi = -int_0^u (u - xi) xi f_u dxi (Cauchy's repeated-integral formula).
  QuadResult psi_by_quadrature(double u, double tol = kQuadTol) const {
    return integrate_from_origin([&](double xi) { return -(u - xi) * xi * f_u(xi); }, u, tol);
  }

  QuadResult entropy_density_by_quadrature(double u, double m_x, double tol = kQuadTol) const {
    auto g = [&](double xi) { return f(xi); };
    if (u >= kOriginSplit) {
      // E = int_u^m f
      return integrate_adaptive(g, u, m_x, tol);
    }
    const QuadResult whole = integrate_from_origin(g, m_x, tol);
    const QuadResult head = u > 0.0 ? integrate_origin_tail(g, u) : QuadResult{};
    return {whole.value - head.value, whole.error + head.error};
  }

 private:
  friend class FitnessModel;

  void check_u(double u, bool needs_positive) const {
    if (!(u >= 0.0)) throw DomainError("density must be nonnegative, got u=" + std::to_string(u));
    if (needs_positive && u == 0.0 &&
        (kind_ == ModelKind::Boltzmann || (kind_ == ModelKind::Power && alpha_ < 0.0)))
      throw DomainError(to_string(kind_) + " fitness is undefined at u=0");
    if (kind_ == ModelKind::Custom) {
      if (x_ < custom_->x_lo || x_ > custom_->x_hi || u > custom_->u_hi ||
          (u < custom_->u_lo && !(u == 0.0 && !needs_positive)))
        throw DomainError("custom fitness evaluated outside its validity rectangle at (x,u)=(" +
                          std::to_string(x_) + "," + std::to_string(u) + ")");
    }
  }

  double x_ = 0.0;
  ModelKind kind_ = ModelKind::Logistic;
  double p_ = 0.0;   // profile value: m, k or V
  double dp_ = 0.0;  // profile derivative
  double alpha_ = 1.0;
  double sign_ = 1.0;
  std::shared_ptr<const CustomFitness> custom_;
};

/// Immutable description of the fitness nonlinearity.
class FitnessModel {
 public:
  /// f = m(x) - u.
  static FitnessModel logistic(SpatialProfile m) {
    FitnessModel model(ModelKind::Logistic);
    model.profile_ = std::move(m);
    return model;
  }

  /// f = k(x) - u^alpha for alpha > 0, f = u^alpha - k(x) for -1 < alpha < 0.
  static FitnessModel power(double alpha, SpatialProfile k = SpatialProfile::constant(1.0)) {
    if (!(alpha > -1.0) || alpha == 0.0)
      throw DomainError("power model requires alpha > -1 and alpha != 0");
    FitnessModel model(ModelKind::Power);
    model.alpha_ = alpha;
    model.profile_ = std::move(k);
    return model;
  }

  /// f = -(log u + V(x)).
  static FitnessModel boltzmann(SpatialProfile V) {
    FitnessModel model(ModelKind::Boltzmann);
    model.profile_ = std::move(V);
    return model;
  }

  static FitnessModel custom(CustomFitness c) {
    if (!c.f || !c.f_u || !c.f_x || !c.f_xu)
      throw DomainError("custom fitness requires f, f_u, f_x and f_xu evaluators");
    if (!(c.x_lo < c.x_hi) || !(c.u_lo >= 0.0) || !(c.u_lo < c.u_hi))
      throw DomainError("custom fitness: invalid validity rectangle");
    FitnessModel model(ModelKind::Custom);
    model.custom_ = std::make_shared<const CustomFitness>(std::move(c));
    return model;
  }

  ModelKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const SpatialProfile& profile() const { return profile_; }
  const CustomFitness* custom() const { return custom_.get(); }

  /// Short human-readable tag, e.g. "logistic(m=1+0.5*sin(pi*x))".
  std::string tag() const {
    std::ostringstream s;
    s.precision(17);
    switch (kind_) {
      case ModelKind::Logistic: s << "logistic(m=" << profile_.describe() << ")"; break;
      case ModelKind::Power: s << "power(alpha=" << alpha_ << ",k=" << profile_.describe() << ")"; break;
      case ModelKind::Boltzmann: s << "boltzmann(V=" << profile_.describe() << ")"; break;
      case ModelKind::Custom: s << "custom(" << custom_->description << ")"; break;
    }
    return s.str();
  }

  /// True when the model is independent of x (spatially homogeneous).
  bool homogeneous() const { return kind_ != ModelKind::Custom && profile_.is_constant(); }

  /// Largest u the model may be evaluated at.
  double u_max() const {
    return kind_ == ModelKind::Custom ? custom_->u_hi : std::numeric_limits<double>::infinity();
  }

  LocalFitness at(double x) const {
    LocalFitness l;
    l.x_ = x;
    l.kind_ = kind_;
    l.alpha_ = alpha_;
    l.sign_ = alpha_ > 0.0 ? 1.0 : -1.0;
    if (kind_ == ModelKind::Custom) {
      l.custom_ = custom_;
    } else {
      l.p_ = profile_(x);
      l.dp_ = profile_.derivative(x);
      if (kind_ == ModelKind::Power && !(l.p_ > 0.0))
        throw DomainError("power model offset profile must be positive");
    }
    return l;
  }

 private:
  explicit FitnessModel(ModelKind k) : kind_(k) {}

  ModelKind kind_;
  SpatialProfile profile_ = SpatialProfile::constant(1.0);
  double alpha_ = 1.0;
  std::shared_ptr<const CustomFitness> custom_;
};

inline double eval_f(const FitnessModel& model, double x, double u) { return model.at(x).f(u); }
inline double eval_phi(const FitnessModel& model, double x, double u) { return model.at(x).phi(u); }
inline double eval_phi_x(const FitnessModel& model, double x, double u) {
  return model.at(x).phi_x(u);
}
inline double eval_psi(const FitnessModel& model, double x, double u) { return model.at(x).psi(u); }
/// E(x,u); `m_x` is the root of f(x,.) = 0 (see equilibrium.hpp).
inline double eval_entropy_density(const FitnessModel& model, double x, double u, double m_x) {
  return model.at(x).entropy_density(u, m_x);
}

// ---------------------------------------------------------------------------
// Assumption checks at probe points

struct ProbeGrid {
  int n_x = 21;
  int n_u = 21;
  double u_min = 1e-6;
  double u_max = 1e3;
};

struct ValidationEntry {
  std::string name;
  bool passed = true;
  double witness_x = 0.0;
  double witness_u = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  const ValidationEntry& entry(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw Error("no validation entry named " + name);
  }
  bool passed(const std::string& name) const { return entry(name).passed; }

  /// (f2)-(f4): needed for the equilibrium to exist.
  bool required_passed() const { return passed("f2") && passed("f3") && passed("f4"); }
  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
  }

  std::string to_text() const {
    std::ostringstream s;
    s.precision(10);
    for (const auto& e : entries) {
      s << e.name << ' ' << (e.passed ? "pass" : "FAIL");
      if (!e.passed) s << " witness_x=" << e.witness_x << " witness_u=" << e.witness_u;
      if (!e.detail.empty()) s << " # " << e.detail;
      s << '\n';
    }
    return s.str();
  }
};

/// Checks the standing assumptions on f at probe points of [a,b] x [u_min,u_max]
/// (u log-spaced). Failures are report entries, never exceptions.
inline ValidationReport validate_model(const FitnessModel& model, double a, double b,
                                       const ProbeGrid& probes = {}) {
  double u_lo = probes.u_min, u_hi = probes.u_max;
  if (const CustomFitness* c = model.custom()) {
    a = std::max(a, c->x_lo);
    b = std::min(b, c->x_hi);
    u_lo = std::max(u_lo, c->u_lo > 0.0 ? c->u_lo : u_lo);
    u_hi = std::min(u_hi, c->u_hi);
  }
  std::vector<double> xs, us;
  for (int i = 0; i < probes.n_x; ++i)
    xs.push_back(probes.n_x == 1 ? a : a + (b - a) * i / (probes.n_x - 1));
  for (int j = 0; j < probes.n_u; ++j)
    us.push_back(probes.n_u == 1 ? u_lo
                                 : u_lo * std::pow(u_hi / u_lo, static_cast<double>(j) / (probes.n_u - 1)));

  ValidationReport report;
  report.entries.reserve(8);  // entries are referenced below
  auto safe = [](auto&& fn) -> double {
    try {
      return fn();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto add = [&](std::string name, std::string detail) -> ValidationEntry& {
    report.entries.push_back({std::move(name), true, 0.0, 0.0, std::move(detail)});
    return report.entries.back();
  };
  auto fail_at = [](ValidationEntry& e, double x, double u) {
    if (e.passed) {
      e.passed = false;
      e.witness_x = x;
      e.witness_u = u;
    }
  };

  // Small-u probe sequence for the continuity conditions.
  std::vector<double> small;
  for (double d = u_lo; d >= std::max(1e-14, model.custom() ? model.custom()->u_lo : 0.0) &&
                        small.size() < 5;
       d *= 1e-2)
    if (d > 0.0) small.push_back(d);

  ValidationEntry& f2 = add("f2", "f_u < 0 (parabolicity)");
  ValidationEntry& f3 = add("f3", "f(x,u_max) < 0");
  ValidationEntry& f4 = add("f4", "f(x,u_min) > 0");
  ValidationEntry& f1b = add("f1b", "u f extends continuously to u=0");
  ValidationEntry& f1d = add("f1d", "u f_x -> 0 as u -> 0");
  ValidationEntry& f5 = add("f5", "heuristic: u*g(u) -> 0 near u=0");
  ValidationEntry& large = add("large-u", "f_x = 0 for large u, or f -> -inf");
  ValidationEntry& smallu = add("small-u", "f_x = 0 for small u, or f -> +inf");

  for (double x : xs) {
    const LocalFitness lf = model.at(x);
    for (double u : us) {
      const double fu = safe([&] { return lf.f_u(u); });
      if (!(fu < 0.0)) fail_at(f2, x, u);
    }
    const double f_hi = safe([&] { return lf.f(u_hi); });
    if (!(f_hi < 0.0)) fail_at(f3, x, u_hi);
    const double f_lo = safe([&] { return lf.f(u_lo); });
    if (!(f_lo > 0.0)) fail_at(f4, x, u_lo);

    // Cauchy-style check on the sequence u f(u_k), u f_x(u_k).
    double prev_uf = std::numeric_limits<double>::quiet_NaN(), prev_step = INFINITY;
    for (double u : small) {
      const double uf = safe([&] { return u * lf.f(u); });
      const double ufx = safe([&] { return u * lf.f_x(u); });
      if (!std::isfinite(uf)) fail_at(f1b, x, u);
      if (!std::isfinite(prev_uf)) {
        prev_uf = uf;
      } else {
        const double step = std::abs(uf - prev_uf);
        if (step > prev_step + 1e-12) fail_at(f1b, x, u);
        prev_step = step;
        prev_uf = uf;
      }
      if (!std::isfinite(ufx)) fail_at(f1d, x, u);
      const double g = safe([&] {
        return std::abs(lf.f(u)) + u * std::abs(lf.f_u(u)) + u * std::abs(lf.f_xu(u));
      });
      if (!std::isfinite(g)) fail_at(f5, x, u);
    }
    if (!small.empty()) {
      const double u = small.back();
      const double ufx = safe([&] { return u * lf.f_x(u); });
      if (!(std::abs(ufx) < 1e-6)) fail_at(f1d, x, u);
      const double ug = safe([&] {
        return u * (std::abs(lf.f(u)) + u * std::abs(lf.f_u(u)) + u * std::abs(lf.f_xu(u)));
      });
      if (!(ug < 1e-3)) fail_at(f5, x, u);
    }

    // (large-u)
    {
      const double fx = safe([&] { return lf.f_x(u_hi); });
      const bool flat = std::abs(fx) < 1e-12;
      const double u_far = std::min(u_hi * 1e3, model.u_max());
      const double f_far = safe([&] { return lf.f(u_far); });
      const bool diverges = u_far > u_hi && f_far <= f_hi - 1.0;
      if (!flat && !diverges) fail_at(large, x, u_hi);
    }
    // (small-u)
    {
      const double fx = safe([&] { return lf.f_x(u_lo); });
      const bool flat = std::abs(fx) < 1e-12;
      const double u_near = small.empty() ? u_lo : small.back();
      const double f_near = safe([&] { return lf.f(u_near); });
      const bool diverges = u_near < u_lo && f_near >= f_lo + 1.0;
      if (!flat && !diverges) fail_at(smallu, x, u_lo);
    }
  }
  return report;
}

}  // namespace hkflow
