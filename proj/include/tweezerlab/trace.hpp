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

#include <cstddef>
#include <vector>

namespace tweezerlab {

// Fidelity after every update. `boundaries` holds the index of the first value
// of each sweep (stochastic ascent) or resolution stage (gradient methods).
struct FidelityTrace {
  std::vector<double> values;
  std::vector<std::size_t> boundaries;

  void begin_segment() { boundaries.push_back(values.size()); }
  void push(double f) { values.push_back(f); }
  bool empty() const { return values.empty(); }
  double back() const { return values.back(); }
};

}  // namespace tweezerlab
