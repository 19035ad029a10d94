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

#include <random>
#include <vector>

#include "oracles.hpp"
#include "tweezerlab/protocol.hpp"

namespace testing_support {

inline tweezerlab::Protocol random_protocol(std::mt19937_64& rng, double duration, int steps,
                                            const tweezerlab::PhysicsParams& params = {}) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0), amp(params.amp_min, params.amp_max);
  tweezerlab::Protocol p;
  p.duration = duration;
  for (int k = 0; k < steps; ++k) p.steps.push_back({pos(rng), amp(rng)});
  return p;
}

inline std::vector<oracle::Step> to_oracle(const tweezerlab::Protocol& p) {
  std::vector<oracle::Step> out;
  for (const auto& s : p.steps) out.push_back({s.position, s.amplitude});
  return out;
}

}  // namespace testing_support
