#pragma once

#include <vector>

#include "hkflow/fitness.hpp"
#include "hkflow/grid.hpp"

namespace hkflow {

/// A fitness model evaluated on a grid: LocalFitness slices at every cell
/// center and every face. Built once per (model, grid) pair.
class BoundModel {
 public:
  BoundModel(const FitnessModel& model, const Grid& grid) : model_(model), grid_(grid) {
    cells_.reserve(grid.n_cells());
    for (int i = 0; i < grid.n_cells(); ++i) cells_.push_back(model.at(grid.center(i)));
    faces_.reserve(grid.n_cells() + 1);
    for (int j = 0; j <= grid.n_cells(); ++j) faces_.push_back(model.at(grid.face(j)));
  }

  const FitnessModel& model() const { return model_; }
  const Grid& grid() const { return grid_; }
  const LocalFitness& cell(int i) const { return cells_[static_cast<std::size_t>(i)]; }
  const LocalFitness& face(int j) const { return faces_[static_cast<std::size_t>(j)]; }

 private:
  FitnessModel model_;
  Grid grid_;
  std::vector<LocalFitness> cells_;
  std::vector<LocalFitness> faces_;
};

}  // namespace hkflow
