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
#include <cstdint>
#include <vector>

#include "tweezerlab/ascent.hpp"
#include "tweezerlab/gradient.hpp"
#include "tweezerlab/parallel.hpp"
#include "tweezerlab/seeds.hpp"

namespace tweezerlab {

inline std::vector<int> default_schedule() { return {32, 64, 128, 256, 512}; }

struct GrapeConfig {
  double duration = 0.2;
  int steps = 80;
  SeedSpec init{};  // uniform-random unless a source protocol is given
  double learning_rate = 0.1;
  int patience = 50;
  int max_iterations = 2000;  // per resolution
  std::vector<int> schedule = default_schedule();
  std::uint64_t rng_seed = 0;
  bool fix_first_step = true;
  TargetSpec target{};
  PropagatorEngine engine = PropagatorEngine::kChebyshev;

  void validate() const {
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
    check_schedule(schedule);
  }

  AscentSettings ascent() const {
    AscentSettings s;
    s.position_learning_rate = learning_rate;
    s.amplitude_learning_rate = learning_rate;
    s.separate_channels = false;
    s.max_iterations = max_iterations;
    s.patience = patience;
    s.fix_first_step = fix_first_step;
    return s;
  }
};

// Result of one optimizer run through its resolution schedule.
struct GradientRun {
  Protocol initial;
  Protocol protocol;
  double fidelity = 0.0;  // at the last resolution of the schedule
  int grid_points = 0;
  std::uint64_t rng_seed = 0;
  FidelityTrace trace;
  std::vector<StageSummary> stages;
};

inline GradientFunction grape_gradient(PropagatorEngine engine) {
  return [engine](const Protocol& p, const Problem& problem, const Targets& t) {
    return fidelity_gradient(p, t.initial, t.target, problem, engine);
  };
}

inline Protocol initial_protocol(const SeedSpec& init, double duration, int steps,
                                 bool fix_first_step, const PhysicsParams& params,
                                 std::uint64_t rng_seed) {
  Protocol p = make_seed(init, duration, steps, params, rng_seed);
  if (fix_first_step) pin_first_step(p, params);
  return p;
}

// Everything a gradient optimizer needs besides the per-run seed.
struct GradientSetup {
  SeedSpec init;
  double duration = 0.2;
  int steps = 80;
  bool fix_first_step = true;
  std::vector<int> schedule = default_schedule();
  TargetSpec target;
  AscentSettings settings;
  GradientFunction gradient;
};

// Restarts r = 0..count-1 with seeds first_seed + r, each run only on the
// coarsest grid of the schedule.
inline std::vector<GradientRun> coarse_restarts(const GradientSetup& setup,
                                                const PhysicsParams& params,
                                                std::uint64_t first_seed, int count,
                                                int threads) {
  if (count < 1) throw ConfigError("restarts must be at least 1");
  check_schedule(setup.schedule);
  std::vector<GradientRun> runs(static_cast<std::size_t>(count));
  const Problem coarse(params, setup.schedule.front());
  const Targets targets = make_targets(coarse, setup.target);
  parallel_for(runs.size(), threads, [&](std::size_t r) {
    GradientRun& run = runs[r];
    run.rng_seed = first_seed + r;
    run.initial = initial_protocol(setup.init, setup.duration, setup.steps, setup.fix_first_step,
                                   params, run.rng_seed);
    StageOutcome o =
        run_ascent_stage(run.initial, coarse, targets, setup.gradient, setup.settings, run.trace);
    run.protocol = std::move(o.best);
    run.fidelity = o.best_fidelity;
    run.grid_points = setup.schedule.front();
    run.stages.push_back(o.summary);
  });
  return runs;
}

// Index of the best run; ties go to the lowest index.
inline std::size_t best_run(const std::vector<GradientRun>& runs) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].fidelity > runs[best].fidelity) best = r;
  return best;
}

// Carries a coarse run through the remaining resolutions.
inline GradientRun refine(GradientRun run, const GradientSetup& setup,
                          const PhysicsParams& params) {
  if (setup.schedule.size() < 2) return run;
  ScheduledRun rest = run_schedule(run.protocol, params, setup.target, setup.schedule, 1,
                                   setup.settings, setup.gradient);
  run.protocol = std::move(rest.protocol);
  run.fidelity = rest.fidelity;
  run.grid_points = rest.grid_points;
  for (std::size_t b : rest.trace.boundaries)
    run.trace.boundaries.push_back(b + run.trace.values.size());
  run.trace.values.insert(run.trace.values.end(), rest.trace.values.begin(),
                          rest.trace.values.end());
  run.stages.insert(run.stages.end(), rest.stages.begin(), rest.stages.end());
  return run;
}

inline GradientRun run_gradient_method(const GradientSetup& setup, const PhysicsParams& params,
                                       std::uint64_t rng_seed, int restarts, int threads) {
  auto runs = coarse_restarts(setup, params, rng_seed, restarts, threads);
  return refine(std::move(runs[best_run(runs)]), setup, params);
}

inline GradientSetup grape_setup(const GrapeConfig& config) {
  config.validate();
  return {config.init,     config.duration, config.steps,    config.fix_first_step,
          config.schedule, config.target,   config.ascent(), grape_gradient(config.engine)};
}

// One GRAPE run (restarts = 1) or the batch scheme: many restarts on the
// coarsest grid, best promoted up the schedule. Restart r uses rng_seed + r.
inline GradientRun run_grape(const GrapeConfig& config, const PhysicsParams& params,
                             int restarts = 1, int threads = 1) {
  return run_gradient_method(grape_setup(config), params, config.rng_seed, restarts, threads);
}

}  // namespace tweezerlab
