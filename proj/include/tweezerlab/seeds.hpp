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
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/params.hpp"
#include "tweezerlab/protocol.hpp"
#include "tweezerlab/protocol_io.hpp"

namespace tweezerlab {

enum class SeedKind { kUniform, kLinearRamp, kCubicRamp, kKassLike, kFromFile, kHeatRidge };

inline SeedKind parse_seed_kind(const std::string& name) {
  if (name == "uniform") return SeedKind::kUniform;
  if (name == "linear" || name == "linear-ramp") return SeedKind::kLinearRamp;
  if (name == "cubic" || name == "cubic-ramp") return SeedKind::kCubicRamp;
  if (name == "kass" || name == "kass-like") return SeedKind::kKassLike;
  if (name == "file" || name == "from-file") return SeedKind::kFromFile;
  if (name == "ridge" || name == "heat-ridge") return SeedKind::kHeatRidge;
  throw ConfigError("unknown seed kind '" + name + "'");
}

inline const char* seed_kind_name(SeedKind kind) {
  switch (kind) {
    case SeedKind::kUniform: return "uniform";
    case SeedKind::kLinearRamp: return "linear-ramp";
    case SeedKind::kCubicRamp: return "cubic-ramp";
    case SeedKind::kKassLike: return "kass-like";
    case SeedKind::kFromFile: return "from-file";
    case SeedKind::kHeatRidge: return "heat-ridge";
  }
  return "unknown";
}

struct SeedSpec {
  SeedKind kind = SeedKind::kUniform;
  // kFromFile / kHeatRidge: either a protocol given directly or a path to one.
  std::optional<Protocol> source;
  std::string path;
  // kKassLike amplitude range; mean 100.
  double kass_amp_low = 40.0;
  double kass_amp_high = 160.0;
};

// Piecewise-linear resampling in normalized step time: step k of N sits at
// tau = k / (N - 1). Duration is unchanged; new_steps == N is the identity.
inline Protocol resample(const Protocol& p, int new_steps, bool pin_first = false,
                         double pinned_position = PhysicsParams{}.x_end) {
  if (new_steps < 2) throw ConfigError("resample needs at least 2 steps");
  if (p.steps.empty()) throw ConfigError("cannot resample an empty protocol");
  Protocol out;
  out.duration = p.duration;
  out.meta = p.meta;
  out.first_step_fixed = pin_first || p.first_step_fixed;
  const int n = p.size();
  out.steps.resize(static_cast<std::size_t>(new_steps));
  for (int j = 0; j < new_steps; ++j) {
    if (n == 1) {
      out.steps[j] = p.steps[0];
      continue;
    }
    if (new_steps == n) {
      out.steps[j] = p.steps[j];
      continue;
    }
    const double u = static_cast<double>(j) * (n - 1) / (new_steps - 1);
    const int lo = std::min(static_cast<int>(std::floor(u)), n - 2);
    const double f = u - lo;
    const auto& a = p.steps[lo];
    const auto& b = p.steps[lo + 1];
    out.steps[j] = {a.position + f * (b.position - a.position),
                    a.amplitude + f * (b.amplitude - a.amplitude)};
  }
  if (pin_first) out.steps[0].position = pinned_position;
  return out;
}

inline Protocol make_seed(const SeedSpec& spec, double duration, int steps,
                          const PhysicsParams& params, std::uint64_t rng_seed) {
  if (!(duration > 0.0)) throw ConfigError("seed duration must be positive");
  if (steps < 1) throw ConfigError("seed needs at least one step");
  std::mt19937_64 rng(rng_seed);
  Protocol p;
  p.duration = duration;
  p.steps.resize(static_cast<std::size_t>(steps));
  const auto tau = [steps](int k) { return steps == 1 ? 0.0 : static_cast<double>(k) / (steps - 1); };
  const double travel = params.x_end - params.x_start;

  switch (spec.kind) {
    case SeedKind::kUniform: {
      std::uniform_real_distribution<double> pos(-params.domain_half_width,
                                                 params.domain_half_width);
      std::uniform_real_distribution<double> amp(params.amp_min, params.amp_max);
      for (auto& s : p.steps) {
        s.position = pos(rng);
        s.amplitude = amp(rng);
      }
      break;
    }
    case SeedKind::kLinearRamp:
      for (int k = 0; k < steps; ++k)
        p.steps[k] = {params.x_start + travel * tau(k), params.amp_max};
      break;
    case SeedKind::kCubicRamp:
      for (int k = 0; k < steps; ++k) {
        const double t = tau(k);
        p.steps[k] = {params.x_start + travel * (3 * t * t - 2 * t * t * t), params.amp_max};
      }
      break;
    case SeedKind::kKassLike: {
      // Constant speed out to the atom over the first half, back over the rest.
      std::uniform_real_distribution<double> amp(spec.kass_amp_low, spec.kass_amp_high);
      const int half = std::max(steps / 2, 1);
      for (int k = 0; k < steps; ++k) {
        double x;
        if (k < half)
          x = half == 1 ? params.x_end
                        : params.x_end + (params.x_start - params.x_end) * k / (half - 1.0);
        else
          x = params.x_start + (params.x_end - params.x_start) * (k - half + 1.0) / (steps - half);
        p.steps[k] = {x, amp(rng)};
      }
      break;
    }
    case SeedKind::kFromFile:
    case SeedKind::kHeatRidge: {
      const Protocol source = spec.source ? *spec.source : load_protocol(spec.path, params);
      Protocol r = steps >= 2 ? resample(source, steps) : Protocol{source.duration, {source.steps[0]}};
      p.steps = std::move(r.steps);
      break;
    }
  }
  p.meta["seed"] = seed_kind_name(spec.kind);
  validate(p, params);
  return p;
}

}  // namespace tweezerlab
