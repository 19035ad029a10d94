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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/params.hpp"
#include "tweezerlab/run_record.hpp"

namespace tweezerlab {

inline constexpr int kPositionBins = 40;
inline constexpr int kAmplitudeBins = 32;

// Uniform bins over [low, high]; the top edge belongs to the last bin.
struct Binning {
  double low = 0.0;
  double high = 1.0;
  int bins = 1;

  double width() const { return (high - low) / bins; }
  double center(int b) const { return low + (b + 0.5) * width(); }
  double lower_edge(int b) const { return low + b * width(); }
  int bin(double v) const {
    const int b = static_cast<int>(std::floor((v - low) / width()));
    return std::clamp(b, 0, bins - 1);
  }
};

// Histograms of positions and amplitudes per step; counts(bin, step).
struct HeatMap {
  Binning position;
  Binning amplitude;
  Eigen::MatrixXi position_counts;
  Eigen::MatrixXi amplitude_counts;
  int source_runs = 0;
  int top_k = 0;
  std::vector<std::string> selected_ids;
  double duration = 0.0;
  bool first_step_fixed = false;

  int steps() const { return static_cast<int>(position_counts.cols()); }
};

// Top-k runs by final fidelity (ties by run id), every selected run adding one
// count per column to each histogram.
inline HeatMap build_heatmap(const std::vector<RunRecord>& runs, int top_k,
                             const PhysicsParams& params = {}, int position_bins = kPositionBins,
                             int amplitude_bins = kAmplitudeBins) {
  if (runs.empty()) throw ConfigError("heat map needs at least one run");
  if (top_k < 1 || top_k > static_cast<int>(runs.size()))
    throw ConfigError("top_k must lie in [1, " + std::to_string(runs.size()) + "]");
  if (position_bins < 1 || amplitude_bins < 1) throw ConfigError("bin counts must be positive");
  const int n = runs.front().protocol.size();
  for (const auto& r : runs)
    if (r.protocol.size() != n) throw ConfigError("runs in a heat map must share the step count");

  std::vector<const RunRecord*> order;
  for (const auto& r : runs) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const RunRecord* a, const RunRecord* b) {
    if (a->fidelity != b->fidelity) return a->fidelity > b->fidelity;
    return a->id < b->id;
  });
  order.resize(static_cast<std::size_t>(top_k));

  HeatMap h;
  h.position = {-params.domain_half_width, params.domain_half_width, position_bins};
  h.amplitude = {params.amp_min, params.amp_max, amplitude_bins};
  h.position_counts = Eigen::MatrixXi::Zero(position_bins, n);
  h.amplitude_counts = Eigen::MatrixXi::Zero(amplitude_bins, n);
  h.source_runs = static_cast<int>(runs.size());
  h.top_k = top_k;
  h.duration = order.front()->protocol.duration;
  h.first_step_fixed = true;
  for (const RunRecord* r : order) {
    h.selected_ids.push_back(r->id);
    h.first_step_fixed = h.first_step_fixed && r->protocol.first_step_fixed;
    for (int k = 0; k < n; ++k) {
      ++h.position_counts(h.position.bin(r->protocol.steps[k].position), k);
      ++h.amplitude_counts(h.amplitude.bin(r->protocol.steps[k].amplitude), k);
    }
  }
  return h;
}

// Bin chosen per column: among bins holding at least 90% of the column's
// maximum, the one nearest the previous choice; the first column takes its
// maximum. Ties go to the lower bin. Columns left empty repeat the previous
// choice (or bin 0 at the start).
inline std::vector<int> ridge_bins(const Eigen::MatrixXi& counts) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index k = 0; k < counts.cols(); ++k) {
    const int top = counts.col(k).maxCoeff();
    int choice = -1;
    if (top > 0) {
      for (int b = 0; b < counts.rows(); ++b) {
        if (counts(b, k) < 0.9 * top) continue;
        if (prev < 0) {
          if (counts(b, k) == top) {
            choice = b;
            break;
          }
        } else if (choice < 0 || std::abs(b - prev) < std::abs(choice - prev)) {
          choice = b;
        }
      }
    } else {
      choice = prev < 0 ? 0 : prev;
    }
    out.push_back(choice);
    prev = choice;
  }
  return out;
}

namespace detail {

inline Eigen::MatrixXi without_bins(Eigen::MatrixXi counts, const std::vector<int>& bins) {
  for (Eigen::Index k = 0; k < counts.cols(); ++k) counts(bins[k], k) = 0;
  return counts;
}

}  // namespace detail

// Protocol traced along the ridge, at bin centres. With `second`, the first
// ridge's bins are removed and the ridge is traced again.
inline Protocol extract_ridge(const HeatMap& h, const PhysicsParams& params = {},
                              bool second = false) {
  if (h.steps() == 0 || h.top_k == 0) throw ConfigError("heat map is empty");
  std::vector<int> pos = ridge_bins(h.position_counts);
  std::vector<int> amp = ridge_bins(h.amplitude_counts);
  if (second) {
    pos = ridge_bins(detail::without_bins(h.position_counts, pos));
    amp = ridge_bins(detail::without_bins(h.amplitude_counts, amp));
  }
  Protocol p;
  p.duration = h.duration;
  for (int k = 0; k < h.steps(); ++k)
    p.steps.push_back({h.position.center(pos[k]), h.amplitude.center(amp[k])});
  if (h.first_step_fixed) {
    p.first_step_fixed = true;
    p.steps.front().position = params.x_end;
  }
  p.meta["seed"] = second ? "heat-ridge-2" : "heat-ridge";
  return p;
}

inline void write_heatmap_csv(const HeatMap& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write heat map " + path.string());
  out.precision(17);
  out << "step,bin_low,bin_high,count,channel\n";
  const auto emit = [&](const Eigen::MatrixXi& counts, const Binning& b, const char* channel) {
    for (Eigen::Index k = 0; k < counts.cols(); ++k)
      for (int i = 0; i < b.bins; ++i)
        out << k << ',' << b.lower_edge(i) << ',' << b.lower_edge(i + 1) << ',' << counts(i, k)
            << ',' << channel << '\n';
  };
  emit(h.position_counts, h.position, "position");
  emit(h.amplitude_counts, h.amplitude, "amplitude");
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tweezerlab
