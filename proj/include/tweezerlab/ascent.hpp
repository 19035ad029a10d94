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
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/adam.hpp"
#include "tweezerlab/errors.hpp"
#include "tweezerlab/gradient.hpp"
#include "tweezerlab/simulation.hpp"
#include "tweezerlab/trace.hpp"

namespace tweezerlab {

// Projected adaptive-moment ascent shared by GRAPE and Krotov. Parameters are
// laid out as [x_1..x_N, A_1..A_N]; positions and amplitudes may share one
// optimizer or get one each with their own learning rate.
struct AscentSettings {
  double position_learning_rate = 0.1;
  double amplitude_learning_rate = 0.1;
  bool separate_channels = false;  // one optimizer per channel
  int max_iterations = 2000;
  int patience = 50;              // iterations without best-fidelity gain before decay
  double min_improvement = 1e-6;  // gain that counts as progress
  double decay = 0.5;
  double learning_rate_floor = 1e-5;
  double gradient_tolerance = 1e-12;  // stop when the projected gradient vanishes
  bool fix_first_step = true;
  Adam::Settings adam{};
};

// Gradient and fidelity of a protocol on one resolution.
using GradientFunction =
    std::function<GradientReport(const Protocol&, const Problem&, const Targets&)>;

enum class StageStop { kIterationCap, kLearningRateFloor, kVanishingGradient };

inline const char* stage_stop_name(StageStop s) {
  switch (s) {
    case StageStop::kIterationCap: return "iteration-cap";
    case StageStop::kLearningRateFloor: return "learning-rate-floor";
    case StageStop::kVanishingGradient: return "vanishing-gradient";
  }
  return "unknown";
}

struct StageSummary {
  int grid_points = 0;
  int iterations = 0;
  double start_fidelity = 0.0;
  double best_fidelity = 0.0;
  StageStop stop = StageStop::kIterationCap;
};

struct StageOutcome {
  Protocol best;
  double best_fidelity = 0.0;
  StageSummary summary;
};

inline void pin_first_step(Protocol& p, const PhysicsParams& params) {
  p.first_step_fixed = true;
  p.steps.front().position = params.x_end;
}

namespace detail {

inline Eigen::VectorXd pack(const Protocol& p) {
  const auto n = static_cast<Eigen::Index>(p.steps.size());
  Eigen::VectorXd theta(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    theta[k] = p.steps[k].position;
    theta[n + k] = p.steps[k].amplitude;
  }
  return theta;
}

inline void unpack(const Eigen::VectorXd& theta, Protocol& p) {
  const auto n = static_cast<Eigen::Index>(p.steps.size());
  for (Eigen::Index k = 0; k < n; ++k) p.steps[k] = {theta[k], theta[n + k]};
}

}  // namespace detail

// One resolution stage: iterate from `start`, keep the best protocol seen.
inline StageOutcome run_ascent_stage(Protocol start, const Problem& problem,
                                     const Targets& targets, const GradientFunction& gradient,
                                     const AscentSettings& s, FidelityTrace& trace) {
  const PhysicsParams& params = problem.params();
  if (start.steps.empty()) throw ConfigError("ascent needs a non-empty protocol");
  project_to_bounds(start, params);
  if (s.fix_first_step) pin_first_step(start, params);

  const auto n = static_cast<Eigen::Index>(start.steps.size());
  struct Group {
    Eigen::Index offset, size;
    Adam adam;
  };
  const auto adam = [&](Eigen::Index size, double lr) {
    Adam::Settings a = s.adam;
    a.learning_rate = lr;
    return Adam(size, a);
  };
  std::vector<Group> groups;
  if (s.separate_channels) {
    groups.push_back({0, n, adam(n, s.position_learning_rate)});
    groups.push_back({n, n, adam(n, s.amplitude_learning_rate)});
  } else {
    groups.push_back({0, 2 * n, adam(2 * n, s.position_learning_rate)});
  }

  Eigen::VectorXd lower(2 * n), upper(2 * n);
  lower.head(n).setConstant(-params.domain_half_width);
  upper.head(n).setConstant(params.domain_half_width);
  lower.tail(n).setConstant(params.amp_min);
  upper.tail(n).setConstant(params.amp_max);

  Protocol current = start;
  StageOutcome out;
  out.summary.grid_points = problem.grid_points();
  trace.begin_segment();

  double reference = -1.0;  // best fidelity at the last decay or progress
  int stalled = 0;
  int it = 0;
  for (;; ++it) {
    GradientReport g = gradient(current, problem, targets);
    trace.push(g.fidelity);
    if (it == 0) {
      out.summary.start_fidelity = g.fidelity;
      reference = g.fidelity;
    }
    if (it == 0 || g.fidelity > out.best_fidelity) {
      out.best_fidelity = g.fidelity;
      out.best = current;
    }
    if (it >= s.max_iterations) {
      out.summary.stop = StageStop::kIterationCap;
      break;
    }
    // Decay after `patience` iterations in a row without enough progress.
    const bool progressed = out.best_fidelity >= reference + s.min_improvement;
    if (progressed) {
      reference = out.best_fidelity;
      stalled = 0;
    } else if (it > 0 && ++stalled >= s.patience) {
      stalled = 0;
      reference = out.best_fidelity;
      bool all_below = true;
      for (auto& grp : groups) {
        grp.adam.set_learning_rate(grp.adam.learning_rate() * s.decay);
        all_below = all_below && grp.adam.learning_rate() < s.learning_rate_floor;
      }
      if (all_below) {
        out.summary.stop = StageStop::kLearningRateFloor;
        break;
      }
    }

    Eigen::VectorXd grad(2 * n);
    grad.head(n) = g.d_position;
    grad.tail(n) = g.d_amplitude;
    if (s.fix_first_step) {
      grad[0] = 0.0;
      grad[n] = 0.0;
    }
    Eigen::VectorXd theta = detail::pack(current);
    // Projected gradient: components pushing out of the box do not count.
    double projected = 0.0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      const bool blocked = (theta[i] <= lower[i] && grad[i] < 0.0) ||
                           (theta[i] >= upper[i] && grad[i] > 0.0);
      if (!blocked) projected = std::max(projected, std::abs(grad[i]));
    }
    if (projected < s.gradient_tolerance) {
      out.summary.stop = StageStop::kVanishingGradient;
      break;
    }
    for (auto& grp : groups)
      theta.segment(grp.offset, grp.size) += grp.adam.step(grad.segment(grp.offset, grp.size));
    theta = theta.cwiseMax(lower).cwiseMin(upper);
    detail::unpack(theta, current);
    if (s.fix_first_step) current.steps.front() = start.steps.front();
  }
  out.summary.iterations = it;
  out.summary.best_fidelity = out.best_fidelity;
  return out;
}

// Protocol carried unchanged to a finer grid and re-scored there; the next
// stage starts with fresh optimizer moments.
struct PromotedState {
  Protocol protocol;
  double fidelity = 0.0;
  int grid_points = 0;
};

inline PromotedState promote_resolution(const Protocol& best, int next_grid_points,
                                        int current_grid_points, const PhysicsParams& params,
                                        const TargetSpec& target = {}) {
  if (next_grid_points <= current_grid_points)
    throw ConfigError("promotion must move to a finer grid");
  const Problem problem(params, next_grid_points);
  const Targets t = make_targets(problem, target);
  return {best, fidelity(best, t.initial, t.target, problem), next_grid_points};
}

struct ScheduledRun {
  Protocol protocol;
  double fidelity = 0.0;  // at the final resolution
  int grid_points = 0;
  FidelityTrace trace;
  std::vector<StageSummary> stages;
};

inline void check_schedule(const std::vector<int>& schedule) {
  if (schedule.empty()) throw ConfigError("resolution schedule is empty");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1])
      throw ConfigError("resolution schedule must be strictly increasing");
}

// Runs the stages schedule[first..] starting from `init`, promoting the best
// protocol of each stage to the next resolution.
inline ScheduledRun run_schedule(Protocol init, const PhysicsParams& params,
                                 const TargetSpec& target, const std::vector<int>& schedule,
                                 std::size_t first, const AscentSettings& settings,
                                 const GradientFunction& gradient) {
  check_schedule(schedule);
  ScheduledRun run;
  Protocol current = std::move(init);
  for (std::size_t i = first; i < schedule.size(); ++i) {
    const Problem problem(params, schedule[i]);
    const Targets t = make_targets(problem, target);
    StageOutcome stage = run_ascent_stage(current, problem, t, gradient, settings, run.trace);
    run.stages.push_back(stage.summary);
    current = std::move(stage.best);
    run.fidelity = stage.best_fidelity;
    run.grid_points = schedule[i];
  }
  run.protocol = std::move(current);
  return run;
}

}  // namespace tweezerlab
