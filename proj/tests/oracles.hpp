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

// Independent long-double reference for the fidelity, written without any
// library code: dense Hamiltonians, dense eigensolver, dense propagators.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using real = long double;
using cplx = std::complex<real>;
using MatR = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using VecR = Eigen::Matrix<real, Eigen::Dynamic, 1>;
using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using VecC = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

struct Step {
  real x, a;
};

struct Model {
  int n;
  real mass = 1, b = 130, sigma = 0.125L, x0 = 0.55L, x1 = -0.55L;
  VecR grid;

  explicit Model(int points) : n(points), grid(points) {
    for (int i = 0; i < n; ++i) grid[i] = -1 + 2 * static_cast<real>(i) / (n - 1);
  }

  VecR well(real c, real a) const {
    VecR v(n);
    for (int i = 0; i < n; ++i) {
      const real d = grid[i] - c;
      v[i] = a * std::exp(-d * d / (2 * sigma * sigma));
    }
    return v;
  }

  MatR hamiltonian(const VecR& wells) const {
    const real h = 2 / static_cast<real>(n - 1);
    const real k = 1 / (2 * mass * h * h);
    MatR m = MatR::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = 2 * k - wells[i];
      if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -k;
    }
    return m;
  }

  VecC ground(real c) const {
    Eigen::SelfAdjointEigenSolver<MatR> es(hamiltonian(well(c, b)));
    VecR g = es.eigenvectors().col(0);
    Eigen::Index imax;
    g.cwiseAbs().maxCoeff(&imax);
    if (g[imax] < 0) g = -g;
    return g.cast<cplx>();
  }

  MatC propagator(const Step& s, real dt) const {
    Eigen::SelfAdjointEigenSolver<MatR> es(hamiltonian(well(x0, b) + well(s.x, s.a)));
    const MatR& v = es.eigenvectors();
    VecC ph(n);
    for (int i = 0; i < n; ++i) ph[i] = std::exp(cplx(0, -dt * es.eigenvalues()[i]));
    return v.cast<cplx>() * ph.asDiagonal() * v.transpose().cast<cplx>();
  }

  real fidelity(const std::vector<Step>& steps, real duration) const {
    const real dt = duration / static_cast<real>(steps.size());
    VecC psi = ground(x0);
    for (const auto& s : steps) psi = propagator(s, dt) * psi;
    const cplx c = ground(x1).dot(psi);
    return std::norm(c);
  }

  // Central differences, h = 1e-6: {dF/dx_k..., dF/dA_k...}. Prefix states and
  // suffix rows are shared; each perturbation re-solves only its own step.
  std::vector<real> fd_gradient(const std::vector<Step>& steps, real duration,
                                real h = 1e-6L) const {
    const std::size_t n = steps.size();
    const real dt = duration / static_cast<real>(n);
    std::vector<MatC> u;
    for (const auto& s : steps) u.push_back(propagator(s, dt));
    std::vector<VecC> states{ground(x0)};
    for (const auto& m : u) states.push_back(m * states.back());
    std::vector<VecC> rows(n + 1);  // rows[k] = (<phi| U_N .. U_{k+1})^T
    rows[n] = ground(x1).conjugate();
    for (std::size_t k = n; k > 0; --k) rows[k - 1] = u[k - 1].transpose() * rows[k];
    std::vector<real> g(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      for (int which = 0; which < 2; ++which) {
        Step p = steps[k], m = steps[k];
        (which == 0 ? p.x : p.a) += h;
        (which == 0 ? m.x : m.a) -= h;
        const VecC up = propagator(p, dt) * states[k], um = propagator(m, dt) * states[k];
        const cplx cp = rows[k + 1].transpose() * up, cm = rows[k + 1].transpose() * um;
        g[which * n + k] = (std::norm(cp) - std::norm(cm)) / (2 * h);
      }
    }
    return g;
  }
};

}  // namespace oracle
