#pragma once

// Energy W(u) = int Psi, relative entropy H(u) = int E and the entropy
// production
//
//   D(u) = int u f^2 + int_{u>0} (1/u) | -grad Phi + Phi_x + u f_x |^2
//
// on a uniform grid.

#include <cmath>

#include "hkflow/bound_model.hpp"
#include "hkflow/grid.hpp"

namespace hkflow {

/// Faces touching a cell with u <= kProductionFloor are left out of the
/// gradient part of the production.
inline constexpr double kProductionFloor = 1e-12;

inline double entropy(const BoundModel& bm, const GridField& m, const GridField& u) {
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += bm.cell(i).entropy_density(u[i], m[i]);
  return s * u.grid().dx();
}

inline double entropy(const FitnessModel& model, const GridField& m, const GridField& u) {
  return entropy(BoundModel(model, u.grid()), m, u);
}

inline double energy(const BoundModel& bm, const GridField& u) {
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += bm.cell(i).psi(u[i]);
  return s * u.grid().dx();
}

inline double energy(const FitnessModel& model, const GridField& u) {
  return energy(BoundModel(model, u.grid()), u);
}

struct Production {
  double value = 0.0;
  double reaction_part = 0.0;
  double gradient_part = 0.0;
  double excluded_fraction = 0.0;
  /// More than 1% of the interior faces were excluded.
  bool flagged = false;
};

inline Production entropy_production_detail(const BoundModel& bm, const GridField& u,
                                            double floor = kProductionFloor) {
  const int n = u.size();
  const double dx = u.grid().dx();
  Production p;
  for (int i = 0; i < n; ++i) {
    if (u[i] > 0.0) {
      const double fi = bm.cell(i).f(u[i]);
      p.reaction_part += u[i] * fi * fi;
    }
  }
  p.reaction_part *= dx;

  int excluded = 0;
  double prev_phi = bm.cell(0).phi(u[0]);
  double prev_drift = bm.cell(0).drift(u[0]);
  for (int j = 1; j < n; ++j) {
    const double phi = bm.cell(j).phi(u[j]);
    const double drift = bm.cell(j).drift(u[j]);
    if (u[j - 1] > floor && u[j] > floor) {
      const double inv_u = 0.5 * (1.0 / u[j - 1] + 1.0 / u[j]);  // 1 / harmonic mean
      const double bracket = -(phi - prev_phi) / dx + 0.5 * (prev_drift + drift);
      p.gradient_part += dx * inv_u * bracket * bracket;
    } else {
      ++excluded;
    }
    prev_phi = phi;
    prev_drift = drift;
  }
  p.value = p.reaction_part + p.gradient_part;
  p.excluded_fraction = n > 1 ? static_cast<double>(excluded) / (n - 1) : 0.0;
  p.flagged = p.excluded_fraction > 0.01;
  return p;
}

inline double entropy_production(const BoundModel& bm, const GridField& u) {
  return entropy_production_detail(bm, u).value;
}

inline double entropy_production(const FitnessModel& model, const GridField& u) {
  return entropy_production(BoundModel(model, u.grid()), u);
}

}  // namespace hkflow
