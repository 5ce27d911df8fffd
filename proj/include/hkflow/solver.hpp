#pragma once

// Explicit finite-volume integration of
//
//   d_t u = Lap Phi - Div(Phi_x + u f_x) + u f,   no-flux boundary,
//
// on a cell-centered grid. Face flux J = -grad Phi + D with D = Phi_x + u f_x
// upwinded; the cell update is -(J_{i+1} - J_i)/dx + u_i f_i.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hkflow/bound_model.hpp"
#include "hkflow/equilibrium.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/functionals.hpp"
#include "hkflow/grid.hpp"
#include "hkflow/trajectory.hpp"

namespace hkflow {

enum class TimeScheme { ExplicitEuler, Heun };
enum class DtPolicy { Fixed, Cfl };

/// How the donor value of the drift D = Phi_x + u f_x is formed at a face.
/// Upwind: D of the upwind cell (first order). Muscl: D at the face from the
/// minmod-limited reconstruction of u on the upwind side (second order in
/// smooth regions, first order at extrema).
enum class DriftScheme { Upwind, Muscl };

inline constexpr double kCflEps = 1e-30;
inline constexpr double kMaxDt = 1.0;

struct SolverConfig {
  TimeScheme scheme = TimeScheme::Heun;
  DtPolicy dt_policy = DtPolicy::Cfl;
  double dt = 1e-4;  // fixed policy
  double safety = 0.5;  // cfl policy
  double t_end = 1.0;
  double output_every = 0.01;
  double positivity_floor = 0.0;
  long max_steps = 50'000'000;
  DriftScheme drift = DriftScheme::Muscl;

  void validate() const {
    if (!(t_end > 0.0)) throw Error("t_end must be > 0");
    if (!(output_every > 0.0)) throw Error("output_every must be > 0");
    if (dt_policy == DtPolicy::Fixed && !(dt > 0.0)) throw Error("fixed dt must be > 0");
    if (dt_policy == DtPolicy::Cfl && !(safety > 0.0 && safety <= 1.0))
      throw Error("cfl safety must lie in (0,1]");
    if (!(positivity_floor >= 0.0)) throw Error("positivity_floor must be >= 0");
    if (max_steps <= 0) throw Error("max_steps must be positive");
  }
};

struct State {
  double t = 0.0;
  GridField u;
};

/// Mass bookkeeping of one step: int u' - int u = reaction_mass + clipped_mass.
struct StepInfo {
  double clipped_mass = 0.0;
  double reaction_mass = 0.0;
};

/// Discrete operator and time stepper for one (model, grid) pair. Holds
/// scratch buffers, so one Stepper must not be shared between threads.
class Stepper {
 public:
  Stepper(const FitnessModel& model, const Grid& grid, DriftScheme drift = DriftScheme::Muscl)
      : bm_(model, grid), drift_(drift) {
    const std::size_t n = static_cast<std::size_t>(grid.n_cells());
    phi_.resize(n);
    slope_.resize(n);
    flux_.resize(n + 1);
    k1_.resize(n);
    k2_.resize(n);
    u1_.resize(n);
  }

  const BoundModel& bound() const { return bm_; }
  const Grid& grid() const { return bm_.grid(); }

  /// out = L(u). Also leaves the total reaction dx*sum u f in last_reaction().
  void rhs(const std::vector<double>& u, std::vector<double>& out) {
    const int n = grid().n_cells();
    const double dx = grid().dx();
    for (int i = 0; i < n; ++i) {
      double p = std::numeric_limits<double>::quiet_NaN();
      std::string why;
      try {
        p = u[i] > 0.0 ? bm_.cell(i).phi(u[i]) : 0.0;
      } catch (const Error& e) {
        why = std::string(": ") + e.what();
      }
      if (!std::isfinite(p))
        throw SolverError("non-finite Phi at cell " + std::to_string(i) + " (x=" +
                          std::to_string(grid().center(i)) + ", u=" + std::to_string(u[i]) + ")" + why);
      phi_[i] = p;
    }
    if (drift_ == DriftScheme::Muscl) {
      // Boundary cells only reconstruct at their inner face; the one-sided
      // slope puts that value between the two cell averages.
      slope_[0] = u[1] - u[0];
      slope_[n - 1] = u[n - 1] - u[n - 2];
      for (int i = 1; i + 1 < n; ++i) slope_[i] = minmod(u[i] - u[i - 1], u[i + 1] - u[i]);
    }
    flux_[0] = flux_[n] = 0.0;
    for (int j = 1; j < n; ++j) flux_[j] = -(phi_[j] - phi_[j - 1]) / dx + face_drift(u, j);
    double reaction = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = bm_.cell(i).reaction(u[i]);
      reaction += r;
      out[i] = -(flux_[i + 1] - flux_[i]) / dx + r;
    }
    last_reaction_ = reaction * dx;
  }

  double last_reaction() const { return last_reaction_; }

  double cfl_dt(const std::vector<double>& u, double safety) const {
    const int n = grid().n_cells();
    const double dx = grid().dx();
    double diff = 0.0, react = 0.0, vel = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(u[i] > 0.0)) continue;
      diff = std::max(diff, bm_.cell(i).diffusivity(u[i]));
      react = std::max(react, std::abs(bm_.cell(i).f(u[i])));
    }
    for (int j = 1; j < n; ++j) {
      const double dl = bm_.cell(j - 1).drift(u[j - 1]);
      const double dr = bm_.cell(j).drift(u[j]);
      const int donor = (dl + dr) >= 0.0 ? j - 1 : j;
      const double d = donor == j - 1 ? dl : dr;
      if (u[donor] > 0.0) vel = std::max(vel, std::abs(d) / u[donor]);
    }
    const double dt = safety * std::min({dx * dx / (2.0 * diff + kCflEps), dx / (vel + kCflEps),
                                         1.0 / (react + kCflEps)});
    return std::min(dt, kMaxDt);
  }

  /// Advances u by dt in place; negatives are clipped to `floor`. Throws
  /// SolverError when max u exceeds `blow_up` afterwards.
  StepInfo step(std::vector<double>& u, double dt, TimeScheme scheme, double floor,
                double blow_up = std::numeric_limits<double>::infinity()) {
    const int n = grid().n_cells();
    const double dx = grid().dx();
    StepInfo info;
    rhs(u, k1_);
    const double r1 = last_reaction_;
    if (scheme == TimeScheme::ExplicitEuler) {
      for (int i = 0; i < n; ++i) u[i] += dt * k1_[i];
      info.reaction_mass = dt * r1;
      info.clipped_mass = clip(u, floor, dx);
    } else {
      for (int i = 0; i < n; ++i) u1_[i] = u[i] + dt * k1_[i];
      const double c1 = clip(u1_, floor, dx);
      rhs(u1_, k2_);
      const double r2 = last_reaction_;
      for (int i = 0; i < n; ++i) u[i] = 0.5 * (u[i] + u1_[i] + dt * k2_[i]);
      info.reaction_mass = 0.5 * dt * (r1 + r2);
      info.clipped_mass = 0.5 * c1 + clip(u, floor, dx);
    }
    double top = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(u[i]))
        throw SolverError("non-finite density at cell " + std::to_string(i) + " after step dt=" +
                          std::to_string(dt));
      top = std::max(top, u[i]);
    }
    if (top > blow_up)
      throw SolverError("blow-up guard: max u = " + std::to_string(top) + " exceeds 10x the L-infinity bound");
    return info;
  }

 private:
  static double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
  }

  static double clip(std::vector<double>& u, double floor, double dx) {
    double added = 0.0;
    for (double& v : u) {
      if (v < floor) {
        added += floor - v;
        v = floor;
      }
    }
    return added * dx;
  }

  double face_drift(const std::vector<double>& u, int j) const {
    if (drift_ == DriftScheme::Upwind) {
      const double dl = bm_.cell(j - 1).drift(u[j - 1]);
      const double dr = bm_.cell(j).drift(u[j]);
      return (dl + dr) >= 0.0 ? dl : dr;
    }
    const double ul = std::max(u[j - 1] + 0.5 * slope_[j - 1], 0.0);
    const double ur = std::max(u[j] - 0.5 * slope_[j], 0.0);
    const double dl = bm_.face(j).drift(ul);
    const double dr = bm_.face(j).drift(ur);
    return (dl + dr) >= 0.0 ? dl : dr;
  }

  BoundModel bm_;
  DriftScheme drift_;
  std::vector<double> phi_, slope_, flux_, k1_, k2_, u1_;
  double last_reaction_ = 0.0;
};

// ---------------------------------------------------------------------------
// Free-function interface

inline GridField rhs(const FitnessModel& model, const State& state, DriftScheme drift = DriftScheme::Muscl) {
  Stepper s(model, state.u.grid(), drift);
  GridField out(state.u.grid());
  s.rhs(state.u.values(), out.values());
  return out;
}

inline double cfl_dt(const FitnessModel& model, const State& state, double safety) {
  return Stepper(model, state.u.grid()).cfl_dt(state.u.values(), safety);
}

/// One step from `state`. The blow-up guard uses the L-infinity bound of
/// `state.u` itself.
inline State step(const FitnessModel& model, const State& state, double dt, const SolverConfig& config = {},
                  StepInfo* info = nullptr) {
  Stepper s(model, state.u.grid(), config.drift);
  State next = state;
  const double guard = 10.0 * linfty_bound(model, state.u);
  const StepInfo si = s.step(next.u.values(), dt, config.scheme, config.positivity_floor, guard);
  next.t = state.t + dt;
  if (info) *info = si;
  return next;
}

struct IntegrateOptions {
  std::vector<double> snapshot_times;
  bool keep_fields = false;
  double bound_slack = 1e-2;
};

/// Runs from u0 to t_end, recording diagnostics every output_every (and at
/// t_end). Bound violations are recorded as audit flags, not thrown.
inline TrajectoryRecord integrate(const FitnessModel& model, const GridField& u0, const SolverConfig& config,
                                  const IntegrateOptions& opts = {}) {
  config.validate();
  const Grid& grid = u0.grid();
  for (int i = 0; i < u0.size(); ++i)
    if (!(u0[i] >= 0.0) || !std::isfinite(u0[i]))
      throw DomainError("initial data must be finite and nonnegative (cell " + std::to_string(i) + ")");
  for (double ts : opts.snapshot_times)
    if (ts < 0.0 || ts > config.t_end) throw Error("snapshot time outside [0, t_end]");

  Stepper stepper(model, grid, config.drift);
  const BoundModel& bm = stepper.bound();
  TrajectoryRecord rec(grid);
  rec.model_tag = model.tag();
  rec.m = solve_m(model, grid).values;
  rec.linfty_bound = linfty_bound(model, u0);
  rec.l1_lower_bound = l1_lower_bound(u0, rec.m);
  const double guard = 10.0 * rec.linfty_bound;

  std::vector<double> snaps = opts.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;

  GridField u = u0;
  double clipped_since = 0.0;
  double last_dt = 0.0;

  auto record = [&](double t) {
    Sample s;
    s.t = t;
    s.mass = integrate_field(u);
    s.linfty = u.max_abs();
    s.l1 = l1_norm(u);
    s.entropy = entropy(bm, rec.m, u);
    s.energy = energy(bm, u);
    const Production p = entropy_production_detail(bm, u);
    s.production = p.value;
    s.production_flag = p.flagged;
    s.clipped_mass = clipped_since;
    s.dt_used = last_dt;
    clipped_since = 0.0;
    if (s.linfty > rec.linfty_bound * (1.0 + opts.bound_slack))
      rec.flags.push_back({"linfty", t, s.linfty, rec.linfty_bound});
    if (s.l1 < rec.l1_lower_bound * (1.0 - opts.bound_slack))
      rec.flags.push_back({"l1_lower", t, s.l1, rec.l1_lower_bound});
    rec.samples.push_back(s);
    if (opts.keep_fields) rec.fields.push_back(u);
  };
  auto take_snapshots = [&](double t) {
    while (next_snap < snaps.size() && snaps[next_snap] <= t + 1e-12 * std::max(1.0, t)) {
      rec.snapshots.emplace_back(snaps[next_snap], u);
      ++next_snap;
    }
  };

  record(0.0);
  take_snapshots(0.0);

  double t = 0.0;
  long k_out = 1;
  long steps = 0;
  const double t_tol = 1e-12 * std::max(1.0, config.t_end);
  while (t < config.t_end - t_tol) {
    double t_out = k_out * config.output_every;
    // Round-off in k*output_every must not leave a sliver step before t_end.
    if (t_out > config.t_end - 1e-6 * config.output_every) t_out = config.t_end;
    double target = t_out;
    if (next_snap < snaps.size()) target = std::min(target, snaps[next_snap]);
    double dt = config.dt_policy == DtPolicy::Fixed ? config.dt : stepper.cfl_dt(u.values(), config.safety);
    bool hit = false;
    if (t + dt >= target - t_tol) {
      dt = target - t;
      hit = true;
    }
    if (dt > 0.0) {
      const StepInfo info =
          stepper.step(u.values(), dt, config.scheme, config.positivity_floor, guard);
      clipped_since += info.clipped_mass;
      last_dt = dt;
      ++steps;
      if (steps > config.max_steps)
        throw SolverError("max_steps exhausted at t=" + std::to_string(t));
    }
    t = hit ? target : t + dt;
    take_snapshots(t);
    if (hit && target == t_out) {
      record(t);
      ++k_out;
    }
  }
  rec.steps = steps;
  rec.final_state = u;
  return rec;
}

}  // namespace hkflow
