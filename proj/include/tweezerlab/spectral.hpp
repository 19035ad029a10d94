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

#include <lapacke.h>

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/grid.hpp"
#include "tweezerlab/params.hpp"

namespace tweezerlab {

using cplx = std::complex<double>;

// Real symmetric tridiagonal matrix: `diag` has n entries, `off` n-1.
struct SymmetricTridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;

  Eigen::Index size() const { return diag.size(); }

  Eigen::MatrixXd dense() const {
    const Eigen::Index n = diag.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.diagonal() = diag;
    for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = off[i];
    return m;
  }
};

// Second-order finite-difference kinetic operator -1/(2m) d^2/dx^2 with
// Dirichlet walls: (0.5 / (m dh^2)) * tridiag(-1, 2, -1).
inline SymmetricTridiagonal kinetic_matrix(const SpatialGrid& grid, double mass) {
  if (!(mass > 0.0)) throw ConfigError("mass must be positive");
  const double scale = 0.5 / (mass * grid.spacing * grid.spacing);
  SymmetricTridiagonal t;
  t.diag = Eigen::VectorXd::Constant(grid.size, 2.0 * scale);
  t.off = Eigen::VectorXd::Constant(grid.size - 1, -scale);
  return t;
}

// Diagonal of a Gaussian tweezer, amplitude * exp(-(x - center)^2 / (2 sigma^2)).
// The result is the well depth profile; Hamiltonians subtract it.
inline Eigen::VectorXd tweezer_potential(const SpatialGrid& grid, double center, double amplitude,
                                         double sigma) {
  if (!(amplitude >= 0.0)) throw ConfigError("tweezer amplitude must be non-negative");
  const double inv = 1.0 / (2.0 * sigma * sigma);
  return (-(grid.points.array() - center).square() * inv).exp() * amplitude;
}

// d/dcenter of tweezer_potential.
inline Eigen::VectorXd tweezer_potential_position_derivative(const SpatialGrid& grid, double center,
                                                             double amplitude, double sigma) {
  const double s2 = sigma * sigma;
  const Eigen::ArrayXd dx = grid.points.array() - center;
  return (amplitude / s2) * dx * (-dx.square() / (2.0 * s2)).exp();
}

// Full eigendecomposition of a symmetric tridiagonal matrix (LAPACK dstevr).
// Eigenvalues ascending, eigenvectors as orthonormal columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> tridiagonal_eigensystem(
    const SymmetricTridiagonal& t) {
  const lapack_int n = static_cast<lapack_int>(t.size());
  Eigen::VectorXd d = t.diag;
  Eigen::VectorXd e(n);  // dstevr wants n entries of workspace in e
  if (n > 1) e.head(n - 1) = t.off;
  e[n - 1] = 0.0;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', n, d.data(), e.data(), 0.0,
                                         0.0, 0, 0, 0.0, &found, w.data(), z.data(), n,
                                         support.data());
  if (info != 0 || found != n)
    throw NumericalError("tridiagonal eigensolver failed (info=" + std::to_string(info) +
                         ", found=" + std::to_string(found) + ")");
  return {std::move(w), std::move(z)};
}

// Hamiltonian of one control setting together with its eigendecomposition.
// Immutable after construction.
class SpectralHamiltonian {
 public:
  SpectralHamiltonian() = default;
  explicit SpectralHamiltonian(SymmetricTridiagonal t) : tridiagonal_(std::move(t)) {
    auto [w, v] = tridiagonal_eigensystem(tridiagonal_);
    eigenvalues_ = std::move(w);
    eigenvectors_ = std::move(v);
  }

  Eigen::Index size() const { return tridiagonal_.size(); }
  const SymmetricTridiagonal& tridiagonal() const { return tridiagonal_; }
  Eigen::MatrixXd matrix() const { return tridiagonal_.dense(); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

  // exp(-i dt lambda_j) for every eigenvalue.
  Eigen::VectorXcd phases(double dt) const {
    Eigen::VectorXcd p(eigenvalues_.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) p[j] = std::polar(1.0, -dt * eigenvalues_[j]);
    return p;
  }

 private:
  SymmetricTridiagonal tridiagonal_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

// Normalized state on the grid.
struct WaveFunction {
  Eigen::VectorXcd amplitudes;

  Eigen::Index size() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }
};

// Dense propagator exp(-i dt H).
struct Unitary {
  Eigen::MatrixXcd entries;
};

namespace detail {

using InterleavedMap = Eigen::Map<Eigen::Matrix<double, 2, Eigen::Dynamic>>;
using ConstInterleavedMap = Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>>;

inline ConstInterleavedMap interleaved(const Eigen::VectorXcd& v) {
  return ConstInterleavedMap(reinterpret_cast<const double*>(v.data()), 2, v.size());
}
inline InterleavedMap interleaved(Eigen::VectorXcd& v) {
  return InterleavedMap(reinterpret_cast<double*>(v.data()), 2, v.size());
}

}  // namespace detail

// out = V^T x for a real basis V and complex x. The complex vector is viewed as
// a 2 x n real matrix so the product runs as a single real GEMM.
template <typename Basis>
void to_eigenbasis(const Eigen::MatrixBase<Basis>& basis, const Eigen::VectorXcd& x,
                   Eigen::VectorXcd& out) {
  out.resize(basis.cols());
  detail::interleaved(out).noalias() = detail::interleaved(x) * basis;
}

// out = V c.
template <typename Basis>
void from_eigenbasis(const Eigen::MatrixBase<Basis>& basis, const Eigen::VectorXcd& coefficients,
                     Eigen::VectorXcd& out) {
  out.resize(basis.rows());
  detail::interleaved(out).noalias() = detail::interleaved(coefficients) * basis.transpose();
}

// x <- exp(-i dt H) x, using precomputed phases exp(-i dt lambda).
inline void apply_propagator(const SpectralHamiltonian& h, const Eigen::VectorXcd& phases,
                             Eigen::VectorXcd& x, Eigen::VectorXcd& scratch) {
  to_eigenbasis(h.eigenvectors(), x, scratch);
  scratch.array() *= phases.array();
  from_eigenbasis(h.eigenvectors(), scratch, x);
}

// Row-vector form: r <- r exp(-i dt H). H is real symmetric, so the transpose
// of the propagator equals the propagator and the same kernel applies.
inline void apply_propagator_to_row(const SpectralHamiltonian& h, const Eigen::VectorXcd& phases,
                                    Eigen::VectorXcd& row, Eigen::VectorXcd& scratch) {
  apply_propagator(h, phases, row, scratch);
}

// x <- exp(+i dt H) x.
inline void apply_adjoint_propagator(const SpectralHamiltonian& h, const Eigen::VectorXcd& phases,
                                     Eigen::VectorXcd& x, Eigen::VectorXcd& scratch) {
  to_eigenbasis(h.eigenvectors(), x, scratch);
  scratch.array() *= phases.array().conjugate();
  from_eigenbasis(h.eigenvectors(), scratch, x);
}

// H = T - B g(x_start) - A g(x_tweezer), with the fixed-tweezer profile
// supplied precomputed.
inline SpectralHamiltonian step_hamiltonian(const SymmetricTridiagonal& kinetic,
                                            const Eigen::VectorXd& fixed_potential,
                                            const SpatialGrid& grid, double sigma,
                                            double tweezer_pos, double tweezer_amp) {
  SymmetricTridiagonal t = kinetic;
  t.diag -= fixed_potential;
  if (tweezer_amp != 0.0) t.diag -= tweezer_potential(grid, tweezer_pos, tweezer_amp, sigma);
  return SpectralHamiltonian(std::move(t));
}

inline SpectralHamiltonian hamiltonian(const SpatialGrid& grid, const PhysicsParams& params,
                                       double tweezer_pos, double tweezer_amp) {
  if (!(tweezer_amp >= params.amp_min && tweezer_amp <= params.amp_max))
    throw ConfigError("tweezer amplitude " + std::to_string(tweezer_amp) + " outside [" +
                      std::to_string(params.amp_min) + ", " + std::to_string(params.amp_max) +
                      "]");
  return step_hamiltonian(kinetic_matrix(grid, params.mass),
                          tweezer_potential(grid, params.x_start, params.fixed_amplitude,
                                            params.sigma),
                          grid, params.sigma, tweezer_pos, tweezer_amp);
}

// Lowest eigenvector, sign fixed so its largest-magnitude entry is positive.
inline WaveFunction ground_state(const SpectralHamiltonian& h) {
  const auto& w = h.eigenvalues();
  if (w.size() >= 2 && w[1] - w[0] < 1e-10)
    throw NumericalError("degenerate ground state (gap " + std::to_string(w[1] - w[0]) + ")");
  Eigen::VectorXd v = h.eigenvectors().col(0);
  Eigen::Index peak = 0;
  v.cwiseAbs().maxCoeff(&peak);
  if (v[peak] < 0.0) v = -v;
  v.normalize();
  return WaveFunction{v.cast<cplx>()};
}

inline Unitary propagator(const SpectralHamiltonian& h, double dt) {
  if (!(dt > 0.0)) throw ConfigError("propagator time step must be positive");
  const Eigen::MatrixXd& v = h.eigenvectors();
  const Eigen::VectorXcd p = h.phases(dt);
  Eigen::MatrixXcd scaled = v.cast<cplx>() * p.asDiagonal();
  return Unitary{scaled * v.transpose().cast<cplx>()};
}

}  // namespace tweezerlab
