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

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/chebyshev.hpp"
#include "tweezerlab/simulation.hpp"

namespace tweezerlab {

// How step propagators and their parameter derivatives are evaluated.
// kSpectral works in the step Hamiltonian's eigenbasis (Daleckii-Krein
// divided differences, O(n^3) per derivative); kChebyshev differentiates the
// Chebyshev series (O(n r dt)). Both are exact to rounding error.
enum class PropagatorEngine { kSpectral, kChebyshev };

// dH/dx and dH/dA for one control step, as diagonals.
inline std::array<Eigen::VectorXd, 2> control_derivative_directions(const Problem& problem,
                                                                   const ControlStep& step) {
  const auto& p = problem.params();
  return {-tweezer_potential_position_derivative(problem.grid(), step.position, step.amplitude,
                                                 p.sigma),
          -tweezer_potential(problem.grid(), step.position, 1.0, p.sigma)};
}

namespace detail {

// (exp(-i dt a) - exp(-i dt b)) / (a - b), and its limit -i dt exp(-i dt a).
inline cplx divided_difference(double a, double b, cplx ea, cplx eb, double dt) {
  const double delta = a - b;
  const double z = dt * delta;
  if (std::abs(z) < 1e-5) {
    // eb * (exp(-i z) - 1) / delta expanded in z
    const cplx iz(0.0, -z);
    return eb * cplx(0.0, -dt) * (1.0 + iz / 2.0 + iz * iz / 6.0);
  }
  return (ea - eb) / delta;
}

}  // namespace detail

// <chi| dU/dtheta_p |x> in the eigenbasis of h, for diagonal dH/dtheta_p.
inline void spectral_derivative_overlaps(const SpectralHamiltonian& h, double dt,
                                         const Eigen::VectorXcd& chi, const Eigen::VectorXcd& x,
                                         std::span<const Eigen::VectorXd> directions,
                                         std::span<cplx> out) {
  const Eigen::MatrixXd& v = h.eigenvectors();
  const Eigen::VectorXd& w = h.eigenvalues();
  const Eigen::Index n = w.size();
  const Eigen::VectorXcd e = h.phases(dt);
  Eigen::VectorXcd alpha, beta;
  to_eigenbasis(v, chi, alpha);
  to_eigenbasis(v, x, beta);
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      m(i, j) = std::conj(alpha[i]) * detail::divided_difference(w[i], w[j], e[i], e[j], dt) *
                beta[j];
  // sum_ij (V^T D V)_ij M_ij = sum_r d_r q_r with q_r = sum_ij V_ri M_ij V_rj.
  const Eigen::MatrixXcd vm = v.cast<cplx>() * m;
  const Eigen::VectorXcd q = (vm.array() * v.cast<cplx>().array()).rowwise().sum();
  for (std::size_t p = 0; p < directions.size(); ++p)
    out[p] = (directions[p].cast<cplx>().array() * q.array()).sum();
}

// Propagator of one control step plus derivative overlaps, in either engine.
class StepKernel {
 public:
  StepKernel(const Problem& problem, const ControlStep& step, double dt, PropagatorEngine engine)
      : engine_(engine), dt_(dt), directions_(control_derivative_directions(problem, step)) {
    SymmetricTridiagonal t = problem.kinetic();
    t.diag -= problem.fixed_potential();
    if (step.amplitude != 0.0)
      t.diag -= tweezer_potential(problem.grid(), step.position, step.amplitude,
                                  problem.params().sigma);
    if (engine_ == PropagatorEngine::kSpectral) {
      spectral_ = SpectralHamiltonian(std::move(t));
      phases_ = spectral_.phases(dt);
    } else {
      chebyshev_ = ChebyshevPropagator(t, dt);
    }
  }

  void apply(Eigen::VectorXcd& x, Eigen::VectorXcd& scratch) const {
    if (engine_ == PropagatorEngine::kSpectral) {
      apply_propagator(spectral_, phases_, x, scratch);
    } else {
      chebyshev_.apply(x, scratch);
      x.swap(scratch);
    }
  }

  void apply_adjoint(Eigen::VectorXcd& x, Eigen::VectorXcd& scratch) const {
    if (engine_ == PropagatorEngine::kSpectral) {
      apply_adjoint_propagator(spectral_, phases_, x, scratch);
    } else {
      chebyshev_.apply_adjoint(x, scratch);
      x.swap(scratch);
    }
  }

  // {<chi|dU/dx|x>, <chi|dU/dA|x>}
  std::array<cplx, 2> derivative_overlaps(const Eigen::VectorXcd& chi,
                                          const Eigen::VectorXcd& x) const {
    std::array<cplx, 2> out{};
    if (engine_ == PropagatorEngine::kSpectral)
      spectral_derivative_overlaps(spectral_, dt_, chi, x, directions_, out);
    else
      chebyshev_.derivative_overlaps(chi, x, directions_, out);
    return out;
  }

 private:
  PropagatorEngine engine_;
  double dt_;
  std::array<Eigen::VectorXd, 2> directions_;
  SpectralHamiltonian spectral_;
  Eigen::VectorXcd phases_;
  ChebyshevPropagator chebyshev_;
};

inline std::vector<StepKernel> build_kernels(const Protocol& protocol, const Problem& problem,
                                             PropagatorEngine engine) {
  validate(protocol, problem.params());
  std::vector<StepKernel> kernels;
  kernels.reserve(protocol.steps.size());
  for (const auto& s : protocol.steps)
    kernels.emplace_back(problem, s, protocol.step_duration(), engine);
  return kernels;
}

// psi_0 .. psi_N
inline std::vector<Eigen::VectorXcd> forward_states(const std::vector<StepKernel>& kernels,
                                                    const Eigen::VectorXcd& psi0) {
  std::vector<Eigen::VectorXcd> states;
  states.reserve(kernels.size() + 1);
  states.push_back(psi0);
  Eigen::VectorXcd scratch;
  for (const auto& k : kernels) {
    Eigen::VectorXcd next = states.back();
    k.apply(next, scratch);
    states.push_back(std::move(next));
  }
  return states;
}

struct GradientReport {
  double fidelity = 0.0;
  Eigen::VectorXd d_position;   // dF/dx_k
  Eigen::VectorXd d_amplitude;  // dF/dA_k
  // Scale-aware finite-difference residual, NaN until check_gradient() runs.
  double fd_residual = std::numeric_limits<double>::quiet_NaN();
};

// Exact dF/dtheta_k = 2 Re(conj(c) <phi|U_N..U_{k+1} dU_k U_{k-1}..U_1|psi>),
// c = <phi|U_P|psi>, from one forward pass over states and one backward pass
// over bra prefixes.
inline GradientReport fidelity_gradient(const Protocol& protocol, const WaveFunction& psi,
                                        const WaveFunction& phi, const Problem& problem,
                                        PropagatorEngine engine = PropagatorEngine::kChebyshev) {
  check_state(psi, problem, "initial state");
  check_state(phi, problem, "target state");
  const auto kernels = build_kernels(protocol, problem, engine);
  const auto states = forward_states(kernels, psi.amplitudes);
  const std::size_t n = kernels.size();
  const cplx c = phi.amplitudes.dot(states.back());

  GradientReport report;
  report.fidelity = std::norm(c);
  report.d_position.resize(static_cast<Eigen::Index>(n));
  report.d_amplitude.resize(static_cast<Eigen::Index>(n));
  // Row vector a_k = <phi| U_N ... U_{k+1}; U is symmetric, so a U = (U a^T)^T.
  Eigen::VectorXcd row = phi.amplitudes.conjugate(), scratch;
  for (std::size_t k = n; k-- > 0;) {
    const auto d = kernels[k].derivative_overlaps(row.conjugate(), states[k]);
    report.d_position[static_cast<Eigen::Index>(k)] = 2.0 * std::real(std::conj(c) * d[0]);
    report.d_amplitude[static_cast<Eigen::Index>(k)] = 2.0 * std::real(std::conj(c) * d[1]);
    kernels[k].apply(row, scratch);
  }
  return report;
}

// Fills report.fd_residual with the worst central-difference mismatch, h = 1e-6:
// relative error where |FD| >= 1e-8, a tenth of the absolute error below that
// (so one threshold covers both regimes). Only step k changes between the two
// evaluations, so the difference c+ - c- = a (U+ - U-) b is formed directly
// and F+ - F- = Re((c+ - c-) conj(c+ + c-)) avoids cancellation in F itself.
inline double check_gradient(GradientReport& report, const Protocol& protocol,
                             const WaveFunction& psi, const WaveFunction& phi,
                             const Problem& problem, double h = 1e-6) {
  const auto kernels = build_kernels(protocol, problem, PropagatorEngine::kSpectral);
  const auto states = forward_states(kernels, psi.amplitudes);
  const std::size_t n = kernels.size();
  // rows[k] = <phi| U_N ... U_{k+1}, stored as a plain (unconjugated) vector.
  std::vector<Eigen::VectorXcd> rows(n + 1);
  rows[n] = phi.amplitudes.conjugate();
  Eigen::VectorXcd scratch;
  for (std::size_t k = n; k > 0; --k) {
    rows[k - 1] = rows[k];
    kernels[k - 1].apply(rows[k - 1], scratch);
  }
  const double dt = protocol.step_duration();
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (int which = 0; which < 2; ++which) {
      ControlStep plus = protocol.steps[k], minus = protocol.steps[k];
      double& vp = which == 0 ? plus.position : plus.amplitude;
      double& vm = which == 0 ? minus.position : minus.amplitude;
      vp += h;
      vm -= h;
      Protocol bounded = protocol;
      bounded.steps[k] = plus;
      project_to_bounds(bounded, problem.params());
      plus = bounded.steps[k];
      bounded.steps[k] = minus;
      project_to_bounds(bounded, problem.params());
      minus = bounded.steps[k];
      const double span = which == 0 ? plus.position - minus.position
                                     : plus.amplitude - minus.amplitude;
      const SpectralHamiltonian hp = problem.step_hamiltonian(plus);
      const SpectralHamiltonian hm = problem.step_hamiltonian(minus);
      Eigen::VectorXcd up = states[k], um = states[k];
      apply_propagator(hp, hp.phases(dt), up, scratch);
      apply_propagator(hm, hm.phases(dt), um, scratch);
      const cplx cp = (rows[k + 1].transpose() * up).value();
      const cplx cm = (rows[k + 1].transpose() * um).value();
      const cplx diff = (rows[k + 1].transpose() * (up - um)).value();
      const double fd = std::real(diff * std::conj(cp + cm)) / span;
      const double analytic = which == 0 ? report.d_position[static_cast<Eigen::Index>(k)]
                                         : report.d_amplitude[static_cast<Eigen::Index>(k)];
      const double err = std::abs(analytic - fd);
      worst = std::max(worst, std::abs(fd) >= 1e-8 ? err / std::abs(fd) : 0.1 * err);
    }
  }
  report.fd_residual = worst;
  return worst;
}

}  // namespace tweezerlab
