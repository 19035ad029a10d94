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
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/grid.hpp"
#include "tweezerlab/params.hpp"
#include "tweezerlab/protocol.hpp"
#include "tweezerlab/spectral.hpp"

namespace tweezerlab {

// Everything that depends only on the constants and the grid resolution:
// kinetic operator, fixed-tweezer profile, initial and target states.
// Immutable once built, so one instance may be shared across threads.
class Problem {
 public:
  Problem(const PhysicsParams& params, int grid_points)
      : params_(params), grid_(build_grid(grid_points, params.domain_half_width)) {
    params_.validate();
    kinetic_ = kinetic_matrix(grid_, params_.mass);
    fixed_potential_ =
        tweezer_potential(grid_, params_.x_start, params_.fixed_amplitude, params_.sigma);
    target_potential_ =
        tweezer_potential(grid_, params_.x_end, params_.fixed_amplitude, params_.sigma);
    initial_hamiltonian_ = SpectralHamiltonian(with_potential(fixed_potential_));
    target_hamiltonian_ = SpectralHamiltonian(with_potential(target_potential_));
    initial_ = ground_state(initial_hamiltonian_);
    target_ = ground_state(target_hamiltonian_);
  }

  const PhysicsParams& params() const { return params_; }
  const SpatialGrid& grid() const { return grid_; }
  int grid_points() const { return grid_.size; }
  const SymmetricTridiagonal& kinetic() const { return kinetic_; }
  const Eigen::VectorXd& fixed_potential() const { return fixed_potential_; }

  // Ground state with only the fixed tweezer at x_start.
  const WaveFunction& initial_state() const { return initial_; }
  // Ground state of the mirrored well at x_end.
  const WaveFunction& target_state() const { return target_; }
  const SpectralHamiltonian& initial_hamiltonian() const { return initial_hamiltonian_; }
  const SpectralHamiltonian& target_hamiltonian() const { return target_hamiltonian_; }

  SpectralHamiltonian step_hamiltonian(const ControlStep& s) const {
    return tweezerlab::step_hamiltonian(kinetic_, fixed_potential_, grid_, params_.sigma,
                                        s.position, s.amplitude);
  }

 private:
  SymmetricTridiagonal with_potential(const Eigen::VectorXd& well) const {
    SymmetricTridiagonal t = kinetic_;
    t.diag -= well;
    return t;
  }

  PhysicsParams params_;
  SpatialGrid grid_;
  SymmetricTridiagonal kinetic_;
  Eigen::VectorXd fixed_potential_;
  Eigen::VectorXd target_potential_;
  SpectralHamiltonian initial_hamiltonian_;
  SpectralHamiltonian target_hamiltonian_;
  WaveFunction initial_;
  WaveFunction target_;
};

// Step spectra and forward states of one protocol: states[k] is the state
// after k steps, states[0] the initial state.
struct Trajectory {
  double dt = 0.0;
  std::vector<SpectralHamiltonian> spectra;
  std::vector<Eigen::VectorXcd> phases;
  std::vector<Eigen::VectorXcd> states;
};

inline void check_state(const WaveFunction& w, const Problem& problem, const char* what) {
  if (w.size() != problem.grid_points())
    throw ConfigError(std::string(what) + " has " + std::to_string(w.size()) +
                      " amplitudes, grid has " + std::to_string(problem.grid_points()));
}

inline Trajectory propagate(const Protocol& protocol, const WaveFunction& psi0,
                            const Problem& problem) {
  validate(protocol, problem.params());
  check_state(psi0, problem, "initial state");
  Trajectory tr;
  tr.dt = protocol.step_duration();
  const auto n = protocol.steps.size();
  tr.spectra.reserve(n);
  tr.phases.reserve(n);
  tr.states.reserve(n + 1);
  tr.states.push_back(psi0.amplitudes);
  Eigen::VectorXcd scratch;
  for (const auto& step : protocol.steps) {
    tr.spectra.push_back(problem.step_hamiltonian(step));
    tr.phases.push_back(tr.spectra.back().phases(tr.dt));
    Eigen::VectorXcd next = tr.states.back();
    apply_propagator(tr.spectra.back(), tr.phases.back(), next, scratch);
    tr.states.push_back(std::move(next));
  }
  return tr;
}

// All N+1 states psi_0 .. psi_N.
inline std::vector<WaveFunction> evolve(const Protocol& protocol, const WaveFunction& psi0,
                                        const Problem& problem) {
  Trajectory tr = propagate(protocol, psi0, problem);
  std::vector<WaveFunction> out;
  out.reserve(tr.states.size());
  for (auto& s : tr.states) out.push_back(WaveFunction{std::move(s)});
  return out;
}

// <target|psi>, the target given as a ket.
inline cplx overlap(const WaveFunction& target, const Eigen::VectorXcd& psi) {
  return target.amplitudes.dot(psi);  // dot() conjugates its left operand
}

// |<phi|U_P|psi>|^2
inline double fidelity(const Protocol& protocol, const WaveFunction& psi, const WaveFunction& phi,
                       const Problem& problem) {
  check_state(phi, problem, "target state");
  Trajectory tr = propagate(protocol, psi, problem);
  return std::norm(overlap(phi, tr.states.back()));
}

inline double fidelity(const Protocol& protocol, const Problem& problem) {
  return fidelity(protocol, problem.initial_state(), problem.target_state(), problem);
}

// Populations |<e_j|psi_k>|^2 of the n_levels lowest instantaneous eigenstates.
// The controllable tweezer is off before and after the protocol, so row 0 is
// resolved in the initial Hamiltonian and row N in the target Hamiltonian;
// rows 1..N-1 use the Hamiltonian of the step that produced psi_k.
inline Eigen::MatrixXd excitation_spectrum(const Protocol& protocol, const WaveFunction& psi0,
                                           const Problem& problem, int n_levels) {
  if (n_levels < 1 || n_levels > problem.grid_points())
    throw ConfigError("level count must be in [1, grid points]");
  Trajectory tr = propagate(protocol, psi0, problem);
  const auto n = static_cast<Eigen::Index>(protocol.steps.size());
  Eigen::MatrixXd pop(n + 1, n_levels);
  Eigen::VectorXcd coeff;
  for (Eigen::Index k = 0; k <= n; ++k) {
    const SpectralHamiltonian& h = k == 0   ? problem.initial_hamiltonian()
                                   : k == n ? problem.target_hamiltonian()
                                            : tr.spectra[static_cast<std::size_t>(k - 1)];
    to_eigenbasis(h.eigenvectors().leftCols(n_levels), tr.states[static_cast<std::size_t>(k)],
                  coeff);
    pop.row(k) = coeff.cwiseAbs2().transpose();
  }
  return pop;
}

// Target whose bra is q1 <phi| + q2 <psi|, renormalized. As a ket that is
// conj(q1) phi + conj(q2) psi.
inline WaveFunction superposition_target(const WaveFunction& phi, const WaveFunction& psi, cplx q1,
                                         cplx q2) {
  if (q1 == cplx{} && q2 == cplx{}) throw ConfigError("superposition coefficients are both zero");
  if (phi.size() != psi.size()) throw ConfigError("superposition of states on different grids");
  Eigen::VectorXcd v = std::conj(q1) * phi.amplitudes + std::conj(q2) * psi.amplitudes;
  const double norm = v.norm();
  if (!(norm > 1e-12)) throw NumericalError("superposition target vanishes");
  return WaveFunction{v / norm};
}

// Which target the optimizers aim for. q1 = 1, q2 = 0 is the plain transport
// problem; other values give the superposition variant. States are rebuilt
// per grid resolution.
struct TargetSpec {
  cplx q1{1.0, 0.0};
  cplx q2{0.0, 0.0};

  bool is_plain() const { return q1 == cplx(1.0, 0.0) && q2 == cplx{}; }
};

struct Targets {
  WaveFunction initial;
  WaveFunction target;
};

inline Targets make_targets(const Problem& problem, const TargetSpec& spec = {}) {
  if (spec.is_plain()) return {problem.initial_state(), problem.target_state()};
  return {problem.initial_state(),
          superposition_target(problem.target_state(), problem.initial_state(), spec.q1, spec.q2)};
}

}  // namespace tweezerlab
