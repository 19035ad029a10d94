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


#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tweezerlab/seeds.hpp"
#include "tweezerlab/service.hpp"

using namespace tweezerlab;

namespace {

ServiceConfig small_config() {
  ServiceConfig c;
  c.grid_points = 64;
  c.render_points = 32;
  return c;
}

// Short random protocols; fidelities are tiny, so comparisons against a
// separately built Problem allow for last-bit differences in the eigensolve.
Protocol sample_protocol(std::uint64_t seed, int steps = 8) {
  std::mt19937_64 rng(seed);
  return testing_support::random_protocol(rng, steps * kStepDuration, steps);
}

std::string request(const Protocol& p, const json& extra = json::object()) {
  json doc = extra;
  doc["protocol"] = protocol_to_json(p);
  return doc.dump();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tweezerlab_service_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Score, MatchesPhysicsCoreFidelity) {
  ScoringService s(small_config());
  const Problem problem(PhysicsParams{}, 64);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Protocol p = seed < 5 ? sample_protocol(seed)
                                : make_seed({SeedKind::kCubicRamp}, 0.1, 40, PhysicsParams{}, 0);
    const HttpResponse r = s.score(request(p));
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const double f = fidelity(p, problem);
    EXPECT_NEAR(r.body["fidelity"].get<double>(), f, 1e-15);
    EXPECT_EQ(r.body["qsl_pass"].get<bool>(), r.body["fidelity"].get<double>() >= 0.999);
    EXPECT_FALSE(r.body.contains("frames"));
  }
}

TEST(Score, NegativeAmplitudeNamesTheStep) {
  ScoringService s(small_config());
  Protocol p = sample_protocol(1);
  p.steps[3].amplitude = -1.0;
  const HttpResponse r = s.score(request(p));
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["field"], "steps[3].amp");
}

TEST(Score, SchemaErrorsAre400WithField) {
  ScoringService s(small_config());
  EXPECT_EQ(s.score("{not json").status, 400);
  EXPECT_EQ(s.score("[1,2]").status, 400);
  HttpResponse r = s.score(R"({"other": 1})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["field"], "protocol");
  r = s.score(R"({"protocol": {"duration": 0.1, "steps": [{"x": "a", "amp": 1}]}})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["field"], "steps[0].x");
  r = s.score(R"({"protocol": {"duration": 0.1, "steps": [{"x": 1.5, "amp": 1}]}})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["field"], "steps[0].x");
  r = s.score(request(sample_protocol(2), {{"options", {{"frame_stride", 0}, {"frames", true}}}}));
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["field"], "options.frame_stride");
}

TEST(Score, LimitsAre422) {
  ScoringService s(small_config());
  Protocol longp;
  longp.duration = 1.5;
  longp.steps.assign(10, {0.0, 10.0});
  HttpResponse r = s.score(request(longp));
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["field"], "duration");
  Protocol many;
  many.duration = 0.5;
  many.steps.assign(401, {0.0, 10.0});
  r = s.score(request(many));
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["field"], "steps");
}

TEST(Score, StrideOfNGivesFirstAndLastFrame) {
  ScoringService s(small_config());
  const Protocol p = sample_protocol(3, 12);
  const HttpResponse r =
      s.score(request(p, {{"options", {{"frames", true}, {"frame_stride", 12}}}}));
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["frames"].size(), 2u);
  EXPECT_EQ(r.body["frames"][0]["step"], 0);
  EXPECT_EQ(r.body["frames"][1]["step"], 12);
  const auto d = r.body["frames"][1]["density"].get<std::vector<double>>();
  EXPECT_EQ(d.size(), 32u);
  double total = 0.0;
  for (double v : d) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Score, StrideOneGivesEveryState) {
  ScoringService s(small_config());
  const Protocol p = sample_protocol(4, 5);
  const HttpResponse r = s.score(request(p, {{"options", {{"frames", true}}}}));
  ASSERT_EQ(r.body["frames"].size(), 6u);
  const auto states = evolve(p, Problem(PhysicsParams{}, 32).initial_state(),
                             Problem(PhysicsParams{}, 32));
  const auto d = r.body["frames"][3]["density"].get<std::vector<double>>();
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_NEAR(d[i], std::norm(states[3].amplitudes[static_cast<Eigen::Index>(i)]), 1e-15);
}

TEST(Score, ExcitationMatrixShape) {
  ScoringService s(small_config());
  const Protocol p = sample_protocol(5, 6);
  const HttpResponse r = s.score(request(p, {{"options", {{"levels", 4}}}}));
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["excitation"].size(), 7u);
  EXPECT_EQ(r.body["excitation"][0].size(), 4u);
  EXPECT_GT(r.body["excitation"][0][0].get<double>(), 0.999);
}

TEST(Score, IdenticalRequestsGiveIdenticalBytes) {
  ScoringService s(small_config());
  const std::string body =
      request(sample_protocol(6), {{"options", {{"frames", true}, {"levels", 3}}}});
  EXPECT_EQ(s.score(body).body.dump(), s.score(body).body.dump());
}

TEST(Problem, DescriptorContents) {
  ScoringService s(small_config());
  const json d = s.problem().body;
  EXPECT_EQ(d["params"]["x_start"], 0.55);
  EXPECT_EQ(d["params"]["x_end"], -0.55);
  EXPECT_EQ(d["params"]["amp_max"], 160.0);
  EXPECT_EQ(d["ratio"], 0.0025);
  EXPECT_EQ(d["fixed_potential"].size(), 32u);
  EXPECT_EQ(d["render"]["points"].size(), 32u);
  EXPECT_EQ(d["max_steps"], 400);
}

TEST(Leaderboard, EmptyStoreGivesEmptyList) {
  ServiceConfig c = small_config();
  c.store = fresh_dir("empty");
  ScoringService s(c);
  const HttpResponse r = s.leaderboard(std::nullopt);
  EXPECT_EQ(r.status, 200);
  EXPECT_TRUE(r.body["entries"].empty());
}

TEST(Leaderboard, ClientClaimsAreIgnored) {
  ScoringService s(small_config());
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Protocol p = testing_support::random_protocol(rng, 0.02, 8);
    const HttpResponse r =
        s.submit(request(p, {{"fidelity", 1.0}, {"qsl_pass", true}, {"source", "human"}}));
    ASSERT_EQ(r.status, 201) << r.body.dump();
    EXPECT_NEAR(r.body["fidelity"].get<double>(), fidelity(p, Problem(PhysicsParams{}, 64)), 1e-15);
    EXPECT_LT(r.body["fidelity"].get<double>(), 1.0);
  }
}

TEST(Leaderboard, SortedDescendingWithinBucket) {
  ScoringService s(small_config());
  std::vector<double> scores;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const HttpResponse r = s.submit(request(sample_protocol(seed)));
    ASSERT_EQ(r.status, 201);
    scores.push_back(r.body["fidelity"].get<double>());
  }
  Protocol other = sample_protocol(99, 20);
  ASSERT_EQ(s.submit(request(other)).status, 201);

  const json bucket = s.leaderboard(8 * kStepDuration).body["entries"];
  ASSERT_EQ(bucket.size(), 6u);
  for (std::size_t i = 1; i < bucket.size(); ++i)
    EXPECT_GE(bucket[i - 1]["fidelity"].get<double>(), bucket[i]["fidelity"].get<double>());
  // 0.0201 is nearest to the 8-step bucket as well.
  EXPECT_EQ(s.leaderboard(0.0201).body["entries"].size(), 6u);
  EXPECT_EQ(s.leaderboard(std::nullopt).body["entries"].size(), 7u);
  EXPECT_EQ(s.leaderboard(-1.0).status, 400);
}

TEST(Leaderboard, DuplicateIdIs409AndBadSourceIs400) {
  ScoringService s(small_config());
  const std::string body = request(sample_protocol(1), {{"id", "alice-1"}});
  EXPECT_EQ(s.submit(body).status, 201);
  const HttpResponse dup = s.submit(body);
  EXPECT_EQ(dup.status, 409);
  const HttpResponse bad = s.submit(request(sample_protocol(1), {{"source", "robot"}}));
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["field"], "source");
  Protocol neg = sample_protocol(1);
  neg.steps[0].amplitude = -5.0;
  EXPECT_EQ(s.submit(request(neg)).status, 400);
  EXPECT_EQ(s.leaderboard(std::nullopt).body["entries"].size(), 1u);
}

TEST(Leaderboard, PersistsAcrossRestarts) {
  ServiceConfig c = small_config();
  c.store = fresh_dir("persist");
  std::string first_id;
  {
    ScoringService s(c);
    first_id = s.submit(request(sample_protocol(1), {{"name", "bob"}})).body["id"];
    s.submit(request(sample_protocol(2), {{"source", "sa"}}));
  }
  ScoringService again(c);
  const json entries = again.leaderboard(std::nullopt).body["entries"];
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(again.submit(request(sample_protocol(3), {{"id", first_id}})).status, 409);
  const auto records = read_records(*c.store / "leaderboard.jsonl");
  EXPECT_EQ(records.size(), 2u);
}

TEST(Leaderboard, ConcurrentSubmissionsAllLand) {
  ScoringService s(small_config());
  std::vector<std::thread> pool;
  std::atomic<int> created{0};
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&, t] {
      if (s.submit(request(sample_protocol(static_cast<std::uint64_t>(t)))).status == 201) ++created;
    });
  for (auto& th : pool) th.join();
  EXPECT_EQ(created.load(), 8);
  const json entries = s.leaderboard(std::nullopt).body["entries"];
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e["id"].get<std::string>());
  EXPECT_EQ(ids.size(), 8u);
}

class HttpRoundTrip : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceConfig c = small_config();
    c.store = fresh_dir("http");
    service_ = std::make_unique<ScoringService>(c);
    mount(server_, *service_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server server_;
  std::unique_ptr<ScoringService> service_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpRoundTrip, EndpointsOverTheWire) {
  httplib::Client client("127.0.0.1", port_);
  auto res = client.Get("/api/problem");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["ratio"], 0.0025);

  const Protocol p = sample_protocol(7);
  res = client.Post("/api/score", request(p), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_NEAR(json::parse(res->body)["fidelity"].get<double>(),
              fidelity(p, Problem(PhysicsParams{}, 64)), 1e-15);

  res = client.Post("/api/score", "{", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = client.Post("/api/leaderboard", request(p, {{"fidelity", 1.0}}), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);

  res = client.Get("/api/leaderboard?duration=0.02");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json entries = json::parse(res->body)["entries"];
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_LT(entries[0]["fidelity"].get<double>(), 1.0);

  res = client.Get("/api/leaderboard?duration=abc");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}
