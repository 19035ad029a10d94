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
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tweezerlab/harness.hpp"

using namespace tweezerlab;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() /
                 ("tweezerlab_" + name + "_" +
                  std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  std::filesystem::remove_all(d);
  return d;
}

SweepSpec small_sa_sweep() {
  SweepSpec s;
  s.algorithm = Algorithm::kStochasticAscent;
  s.durations = {0.05, 0.025};
  s.restarts = 3;
  s.grid_points = 64;
  s.sa.positions = 16;
  return s;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Qsl, Definition) {
  EXPECT_FALSE(qsl(std::map<double, double>{{0.1, 0.5}, {0.2, 0.998}}).has_value());
  EXPECT_EQ(qsl(std::map<double, double>{{0.1, 0.5}, {0.2, 0.9995}}), 0.2);
  EXPECT_EQ(qsl(std::map<double, double>{{0.16, 0.9992}, {0.18, 0.9995}}), 0.16);
  EXPECT_FALSE(qsl(std::map<double, double>{}).has_value());
}

TEST(Durations, ParseAndQuantize) {
  const auto r = parse_durations("0.10:0.02:0.20");
  ASSERT_EQ(r.size(), 6u);
  EXPECT_NEAR(r.front(), 0.1, 1e-15);
  EXPECT_NEAR(r.back(), 0.2, 1e-15);
  for (double t : r) EXPECT_NEAR(t / kStepDuration, std::round(t / kStepDuration), 1e-9);
  // Permuted lists give the same sorted set.
  EXPECT_EQ(parse_durations("0.2,0.1,0.16"), parse_durations("0.1,0.16,0.2"));
  EXPECT_NEAR(quantize_duration(0.1637), 0.1625, 1e-15);
  EXPECT_THROW(parse_durations("abc"), ConfigError);
  EXPECT_THROW(quantize_duration(0.001), ConfigError);
}

TEST(Sweep, QslInvariantUnderPermutation) {
  SweepSpec a = small_sa_sweep(), b = small_sa_sweep();
  b.durations = {0.025, 0.05};
  const SweepResult ra = run_sweep(a, PhysicsParams{});
  const SweepResult rb = run_sweep(b, PhysicsParams{});
  EXPECT_EQ(ra.best, rb.best);
  EXPECT_EQ(ra.qsl, rb.qsl);
  EXPECT_EQ(ra.per_run.at(0.05).size(), 3u);
}

TEST(Sweep, PersistsAndResumes) {
  const auto dir = temp_dir("resume");
  RunStore store(dir);
  const SweepResult first = run_sweep(small_sa_sweep(), PhysicsParams{}, &store);
  const auto records = store.all();
  ASSERT_EQ(records.size(), 6u);
  for (const auto& r : records) {
    EXPECT_EQ(r.algorithm, "sa");
    EXPECT_EQ(r.grid_points, 64);
    EXPECT_NEAR(verify_record(r, PhysicsParams{}), r.fidelity, 1e-9);
  }
  // Tamper with one stored fidelity: a resumed sweep must read it back
  // rather than recompute it.
  RunRecord tampered = records.front();
  tampered.fidelity = 0.999999;
  store.put(tampered);
  const SweepResult second = run_sweep(small_sa_sweep(), PhysicsParams{}, &store);
  EXPECT_EQ(store.all().size(), 6u);
  const double t = quantize_duration(tampered.protocol.duration);
  EXPECT_EQ(second.best.at(t), 0.999999);
  EXPECT_EQ(sweep_from_store(store, "sa").best.at(t), 0.999999);
  EXPECT_EQ(first.per_run.size(), second.per_run.size());
  std::filesystem::remove_all(dir);
}

TEST(Sweep, GradientMethodStoresCoarseAndFinalRuns) {
  const auto dir = temp_dir("grape");
  RunStore store(dir);
  SweepSpec s;
  s.algorithm = Algorithm::kGrape;
  s.durations = {0.05};
  s.restarts = 2;
  s.grape.max_iterations = 20;
  s.grape.schedule = {32, 64};
  const SweepResult r = run_sweep(s, PhysicsParams{}, &store);
  const auto records = store.all();
  ASSERT_EQ(records.size(), 3u);
  int coarse = 0, final_runs = 0;
  for (const auto& rec : records) {
    EXPECT_NEAR(verify_record(rec, PhysicsParams{}), rec.fidelity, 1e-9);
    if (rec.algorithm == "grape-coarse") {
      ++coarse;
      EXPECT_EQ(rec.grid_points, 32);
    } else {
      ++final_runs;
      EXPECT_EQ(rec.algorithm, "grape");
      EXPECT_EQ(rec.grid_points, 64);
      EXPECT_EQ(r.best.at(0.05), rec.fidelity);
    }
  }
  EXPECT_EQ(coarse, 2);
  EXPECT_EQ(final_runs, 1);
  std::filesystem::remove_all(dir);
}

TEST(Sweep, KrotovSweepRuns) {
  SweepSpec s;
  s.algorithm = Algorithm::kKrotov;
  s.durations = {0.025};
  s.restarts = 2;
  s.krotov.max_iterations = 10;
  s.krotov.schedule = {32};
  const SweepResult r = run_sweep(s, PhysicsParams{});
  EXPECT_EQ(r.per_run.at(0.025).size(), 1u);
}

TEST(Superposition, PlainCoefficientsReduceToVanillaSweep) {
  const SweepSpec s = small_sa_sweep();
  const SweepResult vanilla = run_sweep(s, PhysicsParams{});
  const SweepResult plain = superposition_experiment({1.0, 0.0}, {0.0, 0.0}, s.durations,
                                                     s.restarts, s.sa, PhysicsParams{}, 1, 0,
                                                     nullptr, 64);
  EXPECT_EQ(plain.per_run, vanilla.per_run);
  EXPECT_EQ(plain.best, vanilla.best);
}

TEST(Superposition, KeepsRunsApartInTheStore) {
  const auto dir = temp_dir("super");
  RunStore store(dir);
  SweepSpec s = small_sa_sweep();
  s.durations = {0.025};
  s.target = {{std::sqrt(0.5), 0.0}, {0.0, std::sqrt(0.5)}};
  run_sweep(s, PhysicsParams{}, &store);
  for (const auto& r : store.all()) EXPECT_EQ(r.algorithm, "sa-superposition");
  EXPECT_TRUE(sweep_from_store(store, "sa").best.empty());
  std::filesystem::remove_all(dir);
}

TEST(Export, TraceCsv) {
  RunRecord a, b;
  a.id = "a";
  a.trace.values = {0.1, 0.2};
  b.id = "b";
  b.trace.values = {0.3};
  const auto path = std::filesystem::temp_directory_path() / "tweezerlab_trace.csv";
  export_trace({a, b}, path);
  std::ifstream in(path);
  std::string header, l1, l3;
  std::getline(in, header);
  std::getline(in, l1);
  std::getline(in, l3);
  std::getline(in, l3);
  EXPECT_EQ(header, "run_id,update_index,fidelity");
  EXPECT_EQ(l1, "a,0,0.10000000000000001");
  EXPECT_EQ(l3.substr(0, 4), "b,0,");
  std::filesystem::remove(path);
  EXPECT_THROW(export_trace({a}, "/nonexistent-dir/x.csv"), IoError);
}

TEST(Export, ExcitationCsv) {
  SeedSpec spec;
  spec.kind = SeedKind::kCubicRamp;
  const Protocol p = make_seed(spec, 0.05, 20, PhysicsParams{}, 0);
  const auto path = std::filesystem::temp_directory_path() / "tweezerlab_excite.csv";
  export_excitation(p, path, PhysicsParams{}, 64);
  EXPECT_EQ(count_lines(path), 1u + 21u * 15u);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,level,population");
  while (std::getline(in, line)) {
    const double v = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
  }
  std::filesystem::remove(path);
}

TEST(Algorithm, Names) {
  EXPECT_EQ(parse_algorithm("krotov"), Algorithm::kKrotov);
  EXPECT_STREQ(algorithm_name(Algorithm::kStochasticAscent), "sa");
  EXPECT_THROW(parse_algorithm("bfgs"), ConfigError);
}
