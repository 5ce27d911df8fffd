#pragma once

#include <fstream>
#include <iomanip>
#include <string>
#include <utility>
#include <vector>

#include "hkflow/errors.hpp"
#include "hkflow/grid.hpp"

namespace hkflow {

/// Diagnostics recorded at one output time.
struct Sample {
  double t = 0.0;
  double mass = 0.0;  // int u
  double linfty = 0.0;
  double l1 = 0.0;
  double entropy = 0.0;
  double energy = 0.0;
  double production = 0.0;
  double clipped_mass = 0.0;  // clipped since the previous sample
  double dt_used = 0.0;
  bool production_flag = false;
};

/// A recorded violation of one of the a priori bounds.
struct AuditFlag {
  std::string check;
  double t = 0.0;
  double value = 0.0;
  double bound = 0.0;
};

struct TrajectoryRecord {
  explicit TrajectoryRecord(const Grid& g) : grid(g), m(g), final_state(g) {}

  std::string model_tag;
  Grid grid;
  std::vector<Sample> samples;
  /// u at every sample (only when requested).
  std::vector<GridField> fields;
  std::vector<std::pair<double, GridField>> snapshots;
  std::vector<AuditFlag> flags;
  GridField m;
  double linfty_bound = 0.0;
  double l1_lower_bound = 0.0;
  GridField final_state;
  long steps = 0;

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(samples.size());
    for (const auto& s : samples) t.push_back(s.t);
    return t;
  }
};

inline const char* kTrajectoryColumns = "t,mass,linfty,l1,entropy,energy,production,clipped_mass,dt_used";

/// Writes the trajectory CSV. `header_comments` land in the '#' header block
/// (rate fits, model tag).
inline void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& rec,
                                 const std::vector<std::string>& header_comments = {}) {
  out << "# columns: " << kTrajectoryColumns << '\n';
  out << "# model: " << rec.model_tag << '\n';
  out << std::setprecision(17);
  out << "# grid: a=" << rec.grid.a() << " b=" << rec.grid.b() << " n_cells=" << rec.grid.n_cells() << '\n';
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << kTrajectoryColumns << '\n';
  for (const auto& s : rec.samples) {
    out << s.t << ',' << s.mass << ',' << s.linfty << ',' << s.l1 << ',' << s.entropy << ',' << s.energy << ','
        << s.production << ',' << s.clipped_mass << ',' << s.dt_used << '\n';
  }
}

inline void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec,
                                 const std::vector<std::string>& header_comments = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_trajectory_csv(out, rec, header_comments);
}

}  // namespace hkflow
