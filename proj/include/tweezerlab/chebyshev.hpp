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
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/spectral.hpp"

namespace tweezerlab {

// exp(-i dt H) for a symmetric tridiagonal H as a Chebyshev series:
//
//   exp(-i dt H) = exp(-i dt c) sum_k a_k T_k((H - c) / r),
//   a_0 = J_0(r dt), a_k = 2 (-i)^k J_k(r dt),
//
// with [c - r, c + r] a Gershgorin enclosure of the spectrum. The series is
// truncated once the Bessel coefficients fall below machine precision, so
// results agree with the eigenbasis propagator to rounding error. Applying it
// costs O(n r dt) instead of an O(n^2) eigensolve per step, and the same
// recurrence differentiated term by term gives exact propagator derivatives
// along diagonal perturbations of H.
class ChebyshevPropagator {
 public:
  ChebyshevPropagator() = default;
  ChebyshevPropagator(const SymmetricTridiagonal& h, double dt) : dt_(dt) {
    if (!(dt > 0.0)) throw ConfigError("propagator time step must be positive");
    const Eigen::Index n = h.size();
    double lo = h.diag[0], hi = h.diag[0];
    for (Eigen::Index i = 0; i < n; ++i) {
      double radius = 0.0;
      if (i > 0) radius += std::abs(h.off[i - 1]);
      if (i + 1 < n) radius += std::abs(h.off[i]);
      lo = std::min(lo, h.diag[i] - radius);
      hi = std::max(hi, h.diag[i] + radius);
    }
    center_ = 0.5 * (hi + lo);
    radius_ = std::max(0.5 * (hi - lo), 1e-12);
    diag_ = (h.diag.array() - center_) / radius_;
    off_ = h.off / radius_;
    coefficients_ = series_coefficients(radius_ * dt);
    shift_ = std::polar(1.0, -dt * center_);
  }

  double dt() const { return dt_; }
  double radius() const { return radius_; }
  std::size_t terms() const { return coefficients_.size(); }

  // y = exp(-i dt H) x
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    Eigen::VectorXcd prev = x, cur, next;
    y = coefficients_[0] * x;
    if (coefficients_.size() > 1) {
      multiply(x, cur);
      y += coefficients_[1] * cur;
    }
    for (std::size_t k = 2; k < coefficients_.size(); ++k) {
      multiply(cur, next);
      next = 2.0 * next - prev;
      y += coefficients_[k] * next;
      std::swap(prev, cur);
      std::swap(cur, next);
    }
    y *= shift_;
  }

  // y = exp(+i dt H) x. H is real, so U^dagger x = conj(U conj(x)).
  void apply_adjoint(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    apply(x.conjugate(), y);
    y = y.conjugate().eval();
  }

  // For each diagonal direction d_p, returns <chi| dU/dtheta_p |x> where
  // dH/dtheta_p = diag(d_p).
  void derivative_overlaps(const Eigen::VectorXcd& chi, const Eigen::VectorXcd& x,
                           std::span<const Eigen::VectorXd> directions,
                           std::span<cplx> out) const {
    const std::size_t nd = directions.size();
    std::vector<Eigen::ArrayXd> scaled(nd);
    for (std::size_t p = 0; p < nd; ++p) scaled[p] = directions[p].array() / radius_;

    // T_k x and d(T_k x) along each direction, three-term recurrences.
    Eigen::VectorXcd prev = x, cur, next;
    std::vector<Eigen::VectorXcd> dprev(nd), dcur(nd), dnext(nd);
    std::vector<cplx> acc(nd, cplx{});
    multiply(x, cur);
    for (std::size_t p = 0; p < nd; ++p) {
      dprev[p] = Eigen::VectorXcd::Zero(x.size());
      dcur[p] = (scaled[p] * x.array()).matrix();
      if (coefficients_.size() > 1) acc[p] += coefficients_[1] * chi.dot(dcur[p]);
    }
    Eigen::VectorXcd tmp;
    for (std::size_t k = 2; k < coefficients_.size(); ++k) {
      for (std::size_t p = 0; p < nd; ++p) {
        multiply(dcur[p], tmp);
        dnext[p] = 2.0 * (tmp + (scaled[p] * cur.array()).matrix()) - dprev[p];
        acc[p] += coefficients_[k] * chi.dot(dnext[p]);
      }
      multiply(cur, next);
      next = 2.0 * next - prev;
      std::swap(prev, cur);
      std::swap(cur, next);
      for (std::size_t p = 0; p < nd; ++p) {
        std::swap(dprev[p], dcur[p]);
        std::swap(dcur[p], dnext[p]);
      }
    }
    for (std::size_t p = 0; p < nd; ++p) out[p] = shift_ * acc[p];
  }

 private:
  static std::vector<cplx> series_coefficients(double z) {
    // J_k(z) decays superexponentially once k exceeds z; the derivative series
    // weights terms by up to k^2, so keep going well past 1e-16.
    const int kmax = static_cast<int>(z + 30.0 + 12.0 * std::cbrt(z + 1.0));
    std::vector<cplx> a;
    a.reserve(static_cast<std::size_t>(kmax) + 1);
    const cplx minus_i(0.0, -1.0);
    cplx phase(1.0, 0.0);
    for (int k = 0; k <= kmax; ++k) {
      const double j = std::cyl_bessel_j(static_cast<double>(k), z);
      a.push_back((k == 0 ? 1.0 : 2.0) * j * phase);
      phase *= minus_i;
    }
    while (a.size() > 2 && std::abs(a.back()) < 1e-22) a.pop_back();
    return a;
  }

  // y = H' x with H' the rescaled tridiagonal matrix.
  void multiply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    const Eigen::Index n = x.size();
    y.resize(n);
    if (n == 1) {
      y[0] = diag_[0] * x[0];
      return;
    }
    y[0] = diag_[0] * x[0] + off_[0] * x[1];
    for (Eigen::Index i = 1; i + 1 < n; ++i)
      y[i] = diag_[i] * x[i] + off_[i - 1] * x[i - 1] + off_[i] * x[i + 1];
    y[n - 1] = diag_[n - 1] * x[n - 1] + off_[n - 2] * x[n - 2];
  }

  double dt_ = 0.0;
  double center_ = 0.0;
  double radius_ = 1.0;
  Eigen::VectorXd diag_;
  Eigen::VectorXd off_;
  std::vector<cplx> coefficients_;
  cplx shift_{1.0, 0.0};
};

}  // namespace tweezerlab
