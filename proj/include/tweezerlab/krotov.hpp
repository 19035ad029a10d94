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

#include <cstdint>
#include <vector>

#include "tweezerlab/grape.hpp"

namespace tweezerlab {

struct KrotovConfig {
  double duration = 0.2;
  int steps = 80;
  SeedSpec init{};
  double position_learning_rate = 0.01;
  double amplitude_learning_rate = 0.1;
  int patience = 50;
  int max_iterations = 1500;
  std::vector<int> schedule = default_schedule();
  std::uint64_t rng_seed = 0;
  bool fix_first_step = true;
  TargetSpec target{};
  PropagatorEngine engine = PropagatorEngine::kChebyshev;

  void validate() const {
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (!(position_learning_rate > 0.0) || !(amplitude_learning_rate > 0.0))
      throw ConfigError("learning rates must be positive");
    if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
    check_schedule(schedule);
  }

  AscentSettings ascent() const {
    AscentSettings s;
    s.position_learning_rate = position_learning_rate;
    s.amplitude_learning_rate = amplitude_learning_rate;
    s.separate_channels = true;
    s.max_iterations = max_iterations;
    s.patience = patience;
    s.fix_first_step = fix_first_step;
    return s;
  }
};

// chi[k] for k = 0..N, chi[N] = phi <phi|psi_N>, chi[k-1] = U_k^dagger chi[k].
struct Costate {
  std::vector<Eigen::VectorXcd> chi;
};

inline Costate backward_sweep(const std::vector<StepKernel>& kernels, const WaveFunction& phi,
                              const std::vector<Eigen::VectorXcd>& states) {
  if (states.size() != kernels.size() + 1)
    throw ConfigError("backward sweep needs N + 1 forward states");
  Costate c;
  const std::size_t n = kernels.size();
  c.chi.resize(n + 1);
  c.chi[n] = phi.amplitudes * phi.amplitudes.dot(states.back());
  Eigen::VectorXcd scratch;
  for (std::size_t k = n; k > 0; --k) {
    c.chi[k - 1] = c.chi[k];
    kernels[k - 1].apply_adjoint(c.chi[k - 1], scratch);
  }
  return c;
}

inline Costate backward_sweep(const Protocol& protocol, const WaveFunction& phi,
                              const std::vector<Eigen::VectorXcd>& states, const Problem& problem,
                              PropagatorEngine engine = PropagatorEngine::kChebyshev) {
  return backward_sweep(build_kernels(protocol, problem, engine), phi, states);
}

// dF/dtheta_k = 2 Re <chi_k| dU_k/dtheta |psi_{k-1}>.
inline GradientReport krotov_gradient(const Protocol& protocol, const WaveFunction& psi,
                                      const WaveFunction& phi, const Problem& problem,
                                      PropagatorEngine engine = PropagatorEngine::kChebyshev) {
  check_state(psi, problem, "initial state");
  check_state(phi, problem, "target state");
  const auto kernels = build_kernels(protocol, problem, engine);
  const auto states = forward_states(kernels, psi.amplitudes);
  const Costate costate = backward_sweep(kernels, phi, states);
  const auto n = static_cast<Eigen::Index>(kernels.size());
  GradientReport report;
  report.fidelity = std::norm(phi.amplitudes.dot(states.back()));
  report.d_position.resize(n);
  report.d_amplitude.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto d = kernels[k].derivative_overlaps(costate.chi[k + 1], states[k]);
    report.d_position[k] = 2.0 * d[0].real();
    report.d_amplitude[k] = 2.0 * d[1].real();
  }
  return report;
}

inline GradientFunction krotov_gradient_function(PropagatorEngine engine) {
  return [engine](const Protocol& p, const Problem& problem, const Targets& t) {
    return krotov_gradient(p, t.initial, t.target, problem, engine);
  };
}

inline GradientSetup krotov_setup(const KrotovConfig& config) {
  config.validate();
  return {config.init,     config.duration, config.steps,    config.fix_first_step,
          config.schedule, config.target,   config.ascent(), krotov_gradient_function(config.engine)};
}

inline GradientRun run_krotov(const KrotovConfig& config, const PhysicsParams& params,
                              int restarts = 1, int threads = 1) {
  return run_gradient_method(krotov_setup(config), params, config.rng_seed, restarts, threads);
}

}  // namespace tweezerlab
