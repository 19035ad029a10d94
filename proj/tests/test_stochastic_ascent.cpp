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

#include <cmath>

#include <gtest/gtest.h>

#include "tweezerlab/stochastic_ascent.hpp"

using namespace tweezerlab;

namespace {

const Problem& problem64() {
  static const Problem p(PhysicsParams{}, 64);
  return p;
}

SAConfig small_config() {
  SAConfig c;
  c.duration = 0.05;
  c.steps = 20;
  c.positions = 16;
  return c;
}

}  // namespace

TEST(UnitaryBank, SizeAndUnitarity) {
  SAConfig c = small_config();
  c.amplitude_choices = {80.0, 160.0};
  const UnitaryBank bank(problem64(), c);
  ASSERT_EQ(bank.candidates(), 32);
  EXPECT_DOUBLE_EQ(bank.dt(), 0.0025);
  for (int k : {0, 7, 31}) {
    const Unitary u = bank.unitary(k);
    const Eigen::MatrixXcd id = u.entries.adjoint() * u.entries;
    EXPECT_LE((id - Eigen::MatrixXcd::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(bank.step(bank.index(3, 1)).amplitude, 160.0);
  EXPECT_DOUBLE_EQ(bank.step(bank.index(3, 1)).position, -1.0 + 2.0 * 3 / 15);
}

TEST(UnitaryBank, MatchesDensePropagator) {
  const SAConfig c = small_config();
  const UnitaryBank bank(problem64(), c);
  const Unitary u = bank.unitary(5);
  const Eigen::MatrixXcd ref = propagator(problem64().step_hamiltonian(bank.step(5)), 0.0025).entries;
  EXPECT_LE((u.entries - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UnitaryBank, ZeroAmplitudeMakesAllUnitariesEqual) {
  SAConfig c = small_config();
  c.amplitude_choices = {0.0};
  const UnitaryBank bank(problem64(), c);
  const Unitary first = bank.unitary(0);
  for (int k = 1; k < bank.candidates(); ++k)
    EXPECT_LE((bank.unitary(k).entries - first.entries).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(UnitaryBank, FullSizeBankAtFullResolution) {
  const Problem p(PhysicsParams{}, 512);
  SAConfig c;
  const UnitaryBank bank(p, c);
  EXPECT_EQ(bank.candidates(), 128);
  EXPECT_EQ(bank.all_eigenvectors().rows(), 512);
  EXPECT_EQ(bank.all_eigenvectors().cols(), 128 * 512);
}

TEST(UnitaryBank, CapacityErrorAboveCap) {
  SAConfig c = small_config();
  c.bank_cap_bytes = 1e5;
  EXPECT_THROW(UnitaryBank(problem64(), c), CapacityError);
}

TEST(SAConfig, RejectsBadAmplitudes) {
  SAConfig c = small_config();
  c.amplitude_choices = {170.0};
  EXPECT_THROW(c.validate(PhysicsParams{}), ConfigError);
  c.amplitude_choices = {};
  EXPECT_THROW(c.validate(PhysicsParams{}), ConfigError);
}

TEST(SAConfig, PinnedIndexIsNearestGridPoint) {
  SAConfig c;
  c.positions = 201;
  EXPECT_EQ(c.pinned_position_index(PhysicsParams{}), 45);
  EXPECT_NEAR(c.position_grid(PhysicsParams{})[45], -0.55, 1e-15);
  c.positions = 128;
  const int i = c.pinned_position_index(PhysicsParams{});
  EXPECT_LE(std::abs(c.position_grid(PhysicsParams{})[i] + 0.55), 1.0 / 127);
}

TEST(SAConfig, FixedFirstStepNeedsNearbyGridPoint) {
  SAConfig c;
  c.fix_first_step = true;
  c.positions = 21;  // nearest point is 0.05 away
  EXPECT_THROW(c.validate(PhysicsParams{}), ConfigError);
  c.positions = 128;
  EXPECT_NO_THROW(c.validate(PhysicsParams{}));
}

TEST(CoordinateUpdate, SingleCandidateKeepsFidelity) {
  SAConfig c = small_config();
  c.positions = 1;
  const UnitaryBank bank(problem64(), c);
  const Targets t = make_targets(problem64());
  std::vector<int> x(20, 0);
  // a and b around step 7.
  Eigen::VectorXcd b = t.initial.amplitudes, a = t.target.amplitudes.conjugate(), s;
  for (int k = 0; k < 7; ++k) bank.apply(0, b, s);
  for (int k = 19; k > 7; --k) bank.apply(0, a, s);
  const CoordinateChoice choice = coordinate_update(bank, a, b);
  EXPECT_EQ(choice.index, 0);
  EXPECT_NEAR(choice.fidelity, fidelity(protocol_from_indices(bank, x, 0.05, false), problem64()),
              1e-12);
}

TEST(CoordinateUpdate, MatchesExhaustiveEvolve) {
  SAConfig c;
  c.duration = 0.005;
  c.steps = 2;
  c.positions = 4;
  const UnitaryBank bank(problem64(), c);
  const Targets t = make_targets(problem64());
  for (int fixed = 0; fixed < 4; ++fixed) {
    // Update step 1 with step 0 held at `fixed`.
    Eigen::VectorXcd b = t.initial.amplitudes, s;
    bank.apply(fixed, b, s);
    const Eigen::VectorXcd a = t.target.amplitudes.conjugate();
    const CoordinateChoice choice = coordinate_update(bank, a, b);
    int best = -1;
    double best_f = -1.0;
    for (int k = 0; k < 4; ++k) {
      const double f = fidelity(protocol_from_indices(bank, {fixed, k}, 0.005, false), problem64());
      if (f > best_f) best_f = f, best = k;
    }
    EXPECT_EQ(choice.index, best);
    EXPECT_NEAR(choice.fidelity, best_f, 1e-12);
  }
}

TEST(StochasticAscent, MonotoneTraceAndLocalOptimum) {
  SAConfig c = small_config();
  c.rng_seed = 4;
  const UnitaryBank bank(problem64(), c);
  const Targets t = make_targets(problem64());
  const SAResult r = run_stochastic_ascent(c, bank, t, PhysicsParams{});
  ASSERT_TRUE(r.converged);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t i = 1; i < r.trace.values.size(); ++i)
    EXPECT_GE(r.trace.values[i], r.trace.values[i - 1] - 1e-12);
  EXPECT_EQ(r.trace.boundaries.size(), static_cast<std::size_t>(r.sweeps));
  EXPECT_LE(r.max_tracking_error, 1e-9);
  EXPECT_NEAR(r.fidelity, fidelity(r.protocol, problem64()), 1e-9);
  // No single-coordinate change improves the result.
  for (int i = 0; i < c.steps; ++i) {
    for (int k = 0; k < bank.candidates(); ++k) {
      auto x = r.indices;
      x[i] = k;
      EXPECT_LE(fidelity(protocol_from_indices(bank, x, c.duration, false), problem64()),
                r.fidelity + 1e-12);
    }
  }
}

TEST(StochasticAscent, FixedFirstStepIsPinnedAndUntouched) {
  SAConfig c = small_config();
  c.positions = 41;  // contains -0.55
  c.amplitude_choices = {100.0, 160.0};
  c.fix_first_step = true;
  c.rng_seed = 9;
  const UnitaryBank bank(problem64(), c);
  const SAResult r = run_stochastic_ascent(c, bank, make_targets(problem64()), PhysicsParams{});
  EXPECT_TRUE(r.protocol.first_step_fixed);
  EXPECT_NEAR(r.protocol.steps[0].position, -0.55, 1e-12);
  EXPECT_EQ(r.protocol.steps[0].amplitude, 160.0);
  // One trace entry per free step per sweep.
  EXPECT_EQ(r.trace.values.size(), static_cast<std::size_t>(r.sweeps * (c.steps - 1)));
}

TEST(StochasticAscent, Deterministic) {
  SAConfig c = small_config();
  c.rng_seed = 12;
  const UnitaryBank bank(problem64(), c);
  const Targets t = make_targets(problem64());
  const SAResult a = run_stochastic_ascent(c, bank, t, PhysicsParams{});
  const SAResult b = run_stochastic_ascent(c, bank, t, PhysicsParams{});
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.trace.values, b.trace.values);
}

TEST(StochasticAscent, SerialAndParallelRestartsAgree) {
  SAConfig c = small_config();
  c.rng_seed = 100;
  const auto serial = run_stochastic_ascent_batch(c, PhysicsParams{}, 4, 1, 64);
  const auto parallel = run_stochastic_ascent_batch(c, PhysicsParams{}, 4, 4, 64);
  ASSERT_EQ(serial.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(serial[r].rng_seed, 100 + r);
    EXPECT_EQ(serial[r].indices, parallel[r].indices);
    EXPECT_EQ(serial[r].fidelity, parallel[r].fidelity);
  }
  EXPECT_NE(serial[0].trace.values, serial[1].trace.values);
}

TEST(StochasticAscent, MaxSweepsFlagsNonConvergence) {
  SAConfig c = small_config();
  c.max_sweeps = 1;
  c.rng_seed = 1;
  const SAResult r = run_stochastic_ascent(c, PhysicsParams{}, 64);
  EXPECT_EQ(r.sweeps, 1);
  EXPECT_FALSE(r.converged);
}
