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

#include <cmath>

#include "tweezerlab/errors.hpp"

namespace tweezerlab {

// Fixed constants of the two-tweezer transport problem. All quantities are
// dimensionless; the grid spans [-domain_half_width, +domain_half_width].
struct PhysicsParams {
  double mass = 1.0;
  double fixed_amplitude = 130.0;  // B, depth of the tweezer holding the atom
  double sigma = 0.125;            // Gaussian tweezer width
  double x_start = 0.55;           // atom and fixed tweezer
  double x_end = -0.55;            // target
  double amp_min = 0.0;
  double amp_max = 160.0;
  double domain_half_width = 1.0;

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("mass must be positive");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(fixed_amplitude >= 0.0)) throw ConfigError("fixed amplitude must be non-negative");
    if (!(amp_min >= 0.0)) throw ConfigError("amp_min must be non-negative");
    if (!(amp_max > amp_min)) throw ConfigError("amp_max must exceed amp_min");
    if (!(domain_half_width > 0.0)) throw ConfigError("domain half width must be positive");
    if (!(std::abs(x_start) < domain_half_width) || !(std::abs(x_end) < domain_half_width))
      throw ConfigError("tweezer endpoints must lie strictly inside the domain");
  }

  // Same problem seen through the mirror x -> -x.
  PhysicsParams mirrored() const {
    PhysicsParams m = *this;
    m.x_start = -x_start;
    m.x_end = -x_end;
    return m;
  }
};

// Controls are piecewise constant with this step length in every reported
// experiment, so N = round(T / kStepDuration).
inline constexpr double kStepDuration = 0.0025;

inline int steps_for_duration(double duration) {
  return static_cast<int>(std::lround(duration / kStepDuration));
}

}  // namespace tweezerlab
