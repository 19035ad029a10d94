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
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/parallel.hpp"
#include "tweezerlab/simulation.hpp"
#include "tweezerlab/trace.hpp"

namespace tweezerlab {

inline constexpr double kDefaultBankCapBytes = 2.5e9;
inline constexpr double kImprovementSlack = 1e-12;

struct SAConfig {
  double duration = 0.1;
  int steps = 40;
  int positions = 128;  // s, uniformly spaced over the domain
  std::vector<double> amplitude_choices{160.0};
  bool fix_first_step = false;
  std::uint64_t rng_seed = 0;
  int max_sweeps = 200;
  TargetSpec target{};
  double bank_cap_bytes = kDefaultBankCapBytes;

  std::vector<double> position_grid(const PhysicsParams& params) const {
    std::vector<double> g(static_cast<std::size_t>(positions));
    const double w = params.domain_half_width;
    for (int i = 0; i < positions; ++i)
      g[i] = positions == 1 ? 0.0 : -w + 2.0 * w * i / (positions - 1);
    return g;
  }

  // Grid index closest to x_end; lowest index on a tie.
  int pinned_position_index(const PhysicsParams& params) const {
    const auto g = position_grid(params);
    int best = 0;
    for (int i = 1; i < positions; ++i)
      if (std::abs(g[i] - params.x_end) < std::abs(g[best] - params.x_end)) best = i;
    return best;
  }

  void validate(const PhysicsParams& params) const {
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (positions < 1) throw ConfigError("positions must be at least 1");
    if (amplitude_choices.empty()) throw ConfigError("amplitude_choices is empty");
    for (double a : amplitude_choices)
      if (!(a >= params.amp_min && a <= params.amp_max))
        throw ConfigError("amplitude choice " + std::to_string(a) + " out of range");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
    if (fix_first_step) {
      const double d = std::abs(position_grid(params)[pinned_position_index(params)] - params.x_end);
      if (d > kPinTolerance)
        throw ConfigError("position grid has no point near x_end for the fixed first step");
    }
  }
};

// Candidate k = position_index * |amplitudes| + amplitude_index. Candidate
// eigenvectors are stored side by side so one product scores every candidate.
class UnitaryBank {
 public:
  UnitaryBank() = default;

  static double estimate_bytes(int grid_points, int candidates) {
    const double n = grid_points;
    return candidates * (n * n * sizeof(double) + n * sizeof(cplx));
  }

  UnitaryBank(const Problem& problem, const SAConfig& config) {
    const PhysicsParams& params = problem.params();
    config.validate(params);
    n_ = problem.grid_points();
    positions_ = config.position_grid(params);
    amplitudes_ = config.amplitude_choices;
    const int k_total = candidates();
    const double bytes = estimate_bytes(n_, k_total);
    if (bytes > config.bank_cap_bytes)
      throw CapacityError("unitary bank needs " + std::to_string(bytes / 1e9) +
                          " GB, above the cap of " + std::to_string(config.bank_cap_bytes / 1e9) +
                          " GB");
    dt_ = config.duration / config.steps;
    vectors_.resize(n_, static_cast<Eigen::Index>(n_) * k_total);
    phases_.resize(n_, k_total);
    for (int k = 0; k < k_total; ++k) {
      const SpectralHamiltonian h = problem.step_hamiltonian(step(k));
      vectors_.middleCols(static_cast<Eigen::Index>(k) * n_, n_) = h.eigenvectors();
      phases_.col(k) = h.phases(dt_);
    }
  }

  int candidates() const { return static_cast<int>(positions_.size() * amplitudes_.size()); }
  int grid_points() const { return n_; }
  double dt() const { return dt_; }
  const std::vector<double>& positions() const { return positions_; }
  const std::vector<double>& amplitudes() const { return amplitudes_; }

  int index(int position_index, int amplitude_index) const {
    return position_index * static_cast<int>(amplitudes_.size()) + amplitude_index;
  }
  ControlStep step(int k) const {
    const auto na = static_cast<int>(amplitudes_.size());
    return {positions_[k / na], amplitudes_[k % na]};
  }

  auto eigenvectors(int k) const {
    return vectors_.middleCols(static_cast<Eigen::Index>(k) * n_, n_);
  }
  auto phases(int k) const { return phases_.col(k); }
  const Eigen::MatrixXd& all_eigenvectors() const { return vectors_; }
  const Eigen::MatrixXcd& all_phases() const { return phases_; }

  // x <- U_k x (U_k is symmetric, so this also serves row vectors).
  void apply(int k, Eigen::VectorXcd& x, Eigen::VectorXcd& scratch) const {
    to_eigenbasis(eigenvectors(k), x, scratch);
    scratch.array() *= phases(k).array();
    from_eigenbasis(eigenvectors(k), scratch, x);
  }

  // Dense U_k, for checks.
  Unitary unitary(int k) const {
    const Eigen::MatrixXd v = eigenvectors(k);
    return {v.cast<cplx>() * phases(k).asDiagonal() * v.transpose().cast<cplx>()};
  }

 private:
  int n_ = 0;
  double dt_ = 0.0;
  std::vector<double> positions_;
  std::vector<double> amplitudes_;
  Eigen::MatrixXd vectors_;
  Eigen::MatrixXcd phases_;
};

inline std::shared_ptr<const UnitaryBank> precompute_unitaries(const SAConfig& config,
                                                               const Problem& problem) {
  return std::make_shared<const UnitaryBank>(problem, config);
}

struct CoordinateChoice {
  int index = 0;
  double fidelity = 0.0;
};

// argmax_k |a U_k b|^2 over all candidates, lowest index on ties. `a` is the
// row vector <phi| U_N .. U_{i+1} stored as a plain column, `b` the state
// U_{i-1} .. U_1 |psi>.
inline CoordinateChoice coordinate_update(const UnitaryBank& bank, const Eigen::VectorXcd& a,
                                          const Eigen::VectorXcd& b) {
  const Eigen::Index n = bank.grid_points();
  Eigen::Matrix<double, 4, Eigen::Dynamic, Eigen::RowMajor> ab(4, n);
  ab.row(0) = a.real().transpose();
  ab.row(1) = a.imag().transpose();
  ab.row(2) = b.real().transpose();
  ab.row(3) = b.imag().transpose();
  Eigen::Matrix<double, 4, Eigen::Dynamic> proj(4, n * bank.candidates());
  proj.noalias() = ab * bank.all_eigenvectors();
  CoordinateChoice best{0, -1.0};
  for (int k = 0; k < bank.candidates(); ++k) {
    const auto block = proj.middleCols(static_cast<Eigen::Index>(k) * n, n);
    const auto ph = bank.phases(k);
    cplx c{};
    for (Eigen::Index j = 0; j < n; ++j)
      c += ph[j] * cplx(block(0, j), block(1, j)) * cplx(block(2, j), block(3, j));
    const double f = std::norm(c);
    if (f > best.fidelity) best = {k, f};
  }
  return best;
}

struct SAResult {
  Protocol protocol;
  std::vector<int> indices;  // candidate per step
  double fidelity = 0.0;
  FidelityTrace trace;
  int sweeps = 0;
  bool converged = false;
  std::uint64_t rng_seed = 0;
  // Largest |tracked - recomputed| fidelity seen in the per-sweep spot check.
  double max_tracking_error = 0.0;
};

namespace detail {

// |<phi| U_P |psi>|^2 from scratch through the bank.
inline double bank_fidelity(const UnitaryBank& bank, const std::vector<int>& indices,
                            const Targets& t) {
  Eigen::VectorXcd x = t.initial.amplitudes, scratch;
  for (int k : indices) bank.apply(k, x, scratch);
  return std::norm(t.target.amplitudes.dot(x));
}

}  // namespace detail

inline Protocol protocol_from_indices(const UnitaryBank& bank, const std::vector<int>& indices,
                                      double duration, bool first_step_fixed) {
  Protocol p;
  p.duration = duration;
  p.first_step_fixed = first_step_fixed;
  for (int k : indices) p.steps.push_back(bank.step(k));
  return p;
}

inline SAResult run_stochastic_ascent(const SAConfig& config, const UnitaryBank& bank,
                                      const Targets& targets, const PhysicsParams& params) {
  config.validate(params);
  if (bank.candidates() != config.positions * static_cast<int>(config.amplitude_choices.size()) ||
      std::abs(bank.dt() - config.duration / config.steps) > 1e-15)
    throw ConfigError("unitary bank does not match the configuration");
  const int n_steps = config.steps;
  std::mt19937_64 rng(config.rng_seed);
  std::uniform_int_distribution<int> pick(0, bank.candidates() - 1);
  std::vector<int> x(static_cast<std::size_t>(n_steps));
  for (int& k : x) k = pick(rng);

  std::vector<int> order;
  if (config.fix_first_step) {
    const int top = static_cast<int>(std::max_element(config.amplitude_choices.begin(),
                                                      config.amplitude_choices.end()) -
                                     config.amplitude_choices.begin());
    x[0] = bank.index(config.pinned_position_index(params), top);
  }
  for (int i = config.fix_first_step ? 1 : 0; i < n_steps; ++i) order.push_back(i);

  // fwd[i]: state after steps 0..i-1; bwd[i]: row <phi| U_{N-1} .. U_i.
  // Entries fwd[0..fv] and bwd[bv..N] are current.
  std::vector<Eigen::VectorXcd> fwd(n_steps + 1), bwd(n_steps + 1);
  fwd[0] = targets.initial.amplitudes;
  bwd[n_steps] = targets.target.amplitudes.conjugate();
  int fv = 0, bv = n_steps;
  Eigen::VectorXcd scratch;
  auto forward_to = [&](int i) {
    for (; fv < i; ++fv) {
      fwd[fv + 1] = fwd[fv];
      bank.apply(x[fv], fwd[fv + 1], scratch);
    }
  };
  auto backward_to = [&](int i) {
    for (; bv > i; --bv) {
      bwd[bv - 1] = bwd[bv];
      bank.apply(x[bv - 1], bwd[bv - 1], scratch);
    }
  };

  SAResult result;
  result.rng_seed = config.rng_seed;
  double current = detail::bank_fidelity(bank, x, targets);
  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    result.trace.begin_segment();
    bool improved = false;
    for (int i : order) {
      forward_to(i);
      backward_to(i + 1);
      const CoordinateChoice c = coordinate_update(bank, bwd[i + 1], fwd[i]);
      if (c.index != x[i] && c.fidelity > current + kImprovementSlack) {
        x[i] = c.index;
        current = c.fidelity;
        improved = true;
        fv = std::min(fv, i);
        bv = std::max(bv, i + 1);
      }
      result.trace.push(current);
    }
    ++result.sweeps;
    const double check = detail::bank_fidelity(bank, x, targets);
    result.max_tracking_error = std::max(result.max_tracking_error, std::abs(check - current));
    if (!improved) {
      result.converged = true;
      break;
    }
  }
  result.indices = x;
  result.fidelity = current;
  result.protocol = protocol_from_indices(bank, x, config.duration, config.fix_first_step);
  result.protocol.meta["algorithm"] = "sa";
  return result;
}

inline SAResult run_stochastic_ascent(const SAConfig& config, const PhysicsParams& params,
                                      int grid_points = 512) {
  const Problem problem(params, grid_points);
  const UnitaryBank bank(problem, config);
  return run_stochastic_ascent(config, bank, make_targets(problem, config.target), params);
}

// Restart r uses rng_seed + r; results are ordered by restart.
inline std::vector<SAResult> run_stochastic_ascent_batch(const SAConfig& config,
                                                         const PhysicsParams& params,
                                                         int restarts, int threads,
                                                         int grid_points = 512) {
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  const Problem problem(params, grid_points);
  const UnitaryBank bank(problem, config);
  const Targets targets = make_targets(problem, config.target);
  std::vector<SAResult> out(static_cast<std::size_t>(restarts));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    SAConfig c = config;
    c.rng_seed = config.rng_seed + r;
    out[r] = run_stochastic_ascent(c, bank, targets, params);
  });
  return out;
}

}  // namespace tweezerlab
