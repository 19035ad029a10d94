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

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/params.hpp"

namespace tweezerlab {

struct ControlStep {
  double position = 0.0;
  double amplitude = 0.0;

  friend bool operator==(const ControlStep&, const ControlStep&) = default;
};

// Distance within which a pinned first step counts as sitting on x_end. A
// discrete position grid may not contain x_end exactly (s = 128 does not).
inline constexpr double kPinTolerance = 0.01;

// Piecewise-constant control of the movable tweezer: `steps.size()` equal
// slices of `duration`.
struct Protocol {
  double duration = 0.0;
  std::vector<ControlStep> steps;
  bool first_step_fixed = false;
  std::map<std::string, std::string> meta;

  int size() const { return static_cast<int>(steps.size()); }
  double step_duration() const { return duration / static_cast<double>(steps.size()); }

  friend bool operator==(const Protocol& a, const Protocol& b) {
    return a.duration == b.duration && a.steps == b.steps &&
           a.first_step_fixed == b.first_step_fixed;
  }
};

inline std::string step_field(std::size_t index, const char* name) {
  std::ostringstream os;
  os << "steps[" << index << "]." << name;
  return os.str();
}

// Throws SchemaError/BoundsError naming the offending field.
inline void validate(const Protocol& p, const PhysicsParams& params) {
  if (!std::isfinite(p.duration) || !(p.duration > 0.0))
    throw BoundsError("duration", "must be a positive finite number");
  if (p.steps.empty()) throw SchemaError("steps", "at least one step is required");
  for (std::size_t k = 0; k < p.steps.size(); ++k) {
    const auto& s = p.steps[k];
    if (!std::isfinite(s.position) || std::abs(s.position) > params.domain_half_width) {
      std::ostringstream os;
      os << s.position << " outside [" << -params.domain_half_width << ", "
         << params.domain_half_width << "]";
      throw BoundsError(step_field(k, "x"), os.str());
    }
    if (!std::isfinite(s.amplitude) || s.amplitude < params.amp_min ||
        s.amplitude > params.amp_max) {
      std::ostringstream os;
      os << s.amplitude << " outside [" << params.amp_min << ", " << params.amp_max << "]";
      throw BoundsError(step_field(k, "amp"), os.str());
    }
  }
  if (p.first_step_fixed && std::abs(p.steps.front().position - params.x_end) > kPinTolerance) {
    std::ostringstream os;
    os << "first step is pinned but sits at " << p.steps.front().position << ", not "
       << params.x_end;
    throw BoundsError(step_field(0, "x"), os.str());
  }
}

// Clamp every control into its box.
inline void project_to_bounds(Protocol& p, const PhysicsParams& params) {
  for (auto& s : p.steps) {
    s.position = std::clamp(s.position, -params.domain_half_width, params.domain_half_width);
    s.amplitude = std::clamp(s.amplitude, params.amp_min, params.amp_max);
  }
}

}  // namespace tweezerlab
