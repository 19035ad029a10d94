// Copyright 2026 The TweezerLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include "tweezerlab/errors.hpp"

namespace tweezerlab {

// Uniform grid on [-half_width, half_width], endpoints included.
struct SpatialGrid {
  int size = 0;
  double half_width = 1.0;
  double spacing = 0.0;
  Eigen::VectorXd points;
};

namespace detail {
inline int& minimum_grid_points() {
  static int value = 8;
  return value;
}
}  // namespace detail

// Test builds may relax the lower bound to exercise tiny hand-checkable grids.
inline void set_minimum_grid_points_for_testing(int value) { detail::minimum_grid_points() = value; }

inline SpatialGrid build_grid(int grid_points, double half_width = 1.0) {
  if (grid_points < detail::minimum_grid_points())
    throw ConfigError("grid needs at least " + std::to_string(detail::minimum_grid_points()) +
                      " points, got " + std::to_string(grid_points));
  if (!(half_width > 0.0)) throw ConfigError("grid half width must be positive");
  SpatialGrid grid;
  grid.size = grid_points;
  grid.half_width = half_width;
  grid.spacing = 2.0 * half_width / (grid_points - 1);
  grid.points.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) grid.points[i] = -half_width + i * grid.spacing;
  grid.points[grid_points - 1] = half_width;
  return grid;
}

}  // namespace tweezerlab
