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


// Command-line front end: optimizers, analysis, sweeps and the scoring server.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tweezerlab/tweezerlab.hpp"
#include "tweezerlab/service.hpp"

namespace tl = tweezerlab;

namespace {

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw tl::ConfigError(std::string(name) + " is not an integer: " + v);
  }
}

int steps_for(double duration, int steps) {
  return steps > 0 ? steps : tl::steps_for_duration(duration);
}

void emit(const tl::json& j) { std::cout << j.dump(2) << '\n'; }

std::string duration_key(double t) {
  char key[32];
  std::snprintf(key, sizeof key, "%.4f", t);
  return key;
}

// "uniform", "cubic", ..., or "file:PATH" / "ridge:PATH".
tl::SeedSpec seed_spec(const std::string& text) {
  tl::SeedSpec s;
  const auto colon = text.find(':');
  s.kind = tl::parse_seed_kind(text.substr(0, colon));
  const bool needs_path = s.kind == tl::SeedKind::kFromFile || s.kind == tl::SeedKind::kHeatRidge;
  if (needs_path != (colon != std::string::npos))
    throw tl::ConfigError(needs_path ? "seed '" + text + "' needs a path (file:PATH)"
                                     : "seed '" + text + "' takes no path");
  if (needs_path) s.path = text.substr(colon + 1);
  return s;
}

tl::json stage_json(const std::vector<tl::StageSummary>& stages) {
  tl::json out = tl::json::array();
  for (const auto& s : stages)
    out.push_back({{"grid_points", s.grid_points},
                   {"iterations", s.iterations},
                   {"start_fidelity", s.start_fidelity},
                   {"best_fidelity", s.best_fidelity},
                   {"stop", tl::stage_stop_name(s.stop)}});
  return out;
}

struct GradientOptions {
  double duration = 0.2;
  int steps = 0;
  std::string init = "uniform";
  int restarts = 1;
  int threads = 1;
  std::uint64_t seed = 0;
  int max_iterations = 0;
  std::vector<int> schedule = tl::default_schedule();
  bool free_first = false;
  std::string out;
  std::string best;
};

void add_gradient_options(CLI::App* cmd, GradientOptions& o) {
  cmd->add_option("-T,--duration", o.duration, "protocol duration")->capture_default_str();
  cmd->add_option("-N,--steps", o.steps, "step count (default T / 0.0025)");
  cmd->add_option("--init", o.init, "uniform, linear, cubic, kass, file:PATH or ridge:PATH")
      ->capture_default_str();
  cmd->add_option("--restarts", o.restarts, "coarse-grid restarts; the best is refined")
      ->capture_default_str();
  cmd->add_option("--threads", o.threads)->capture_default_str();
  cmd->add_option("--seed", o.seed, "first RNG seed")->capture_default_str();
  cmd->add_option("--max-iterations", o.max_iterations, "per resolution stage");
  cmd->add_option("--schedule", o.schedule, "grid resolutions")->delimiter(',');
  cmd->add_flag("--free-first", o.free_first, "do not pin the first step to x_end");
  cmd->add_option("-o,--out", o.out, "append run records (JSON lines) here");
  cmd->add_option("--best", o.best, "write the refined protocol here");
}

void run_gradient(const char* algorithm, const tl::GradientSetup& setup,
                  const GradientOptions& o, const tl::PhysicsParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const tl::GradientBatch batch =
      tl::run_gradient_batch(setup, algorithm, params, o.seed, o.restarts, o.threads);
  const double seconds = tl::detail::seconds_since(t0);
  if (!o.out.empty()) {
    std::vector<tl::RunRecord> records = batch.coarse;
    records.push_back(batch.final);
    tl::append_records(records, o.out);
  }
  if (!o.best.empty()) tl::save_protocol(batch.final.protocol, o.best);
  tl::json coarse = tl::json::array();
  for (const auto& r : batch.coarse) coarse.push_back(r.fidelity);
  emit({{"algorithm", algorithm},
        {"duration", setup.duration},
        {"steps", setup.steps},
        {"fidelity", batch.final.fidelity},
        {"grid_points", batch.final.grid_points},
        {"rng_seed", batch.final.rng_seed},
        {"coarse_fidelities", coarse},
        {"wall_seconds", seconds}});
}

std::vector<tl::RunRecord> load_runs(const std::vector<std::string>& files,
                                     const std::string& store) {
  std::vector<tl::RunRecord> runs;
  for (const auto& f : files)
    for (auto& r : tl::read_records(f)) runs.push_back(std::move(r));
  if (!store.empty())
    for (auto& r : tl::RunStore(store).all()) runs.push_back(std::move(r));
  return runs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport of an atom between two optical tweezers"};
  app.require_subcommand(1);
  const tl::PhysicsParams params;

  // sa
  tl::SAConfig sa;
  int sa_seeds = 1, sa_threads = 1, sa_grid = 512;
  std::string sa_out, sa_best;
  auto* sa_cmd = app.add_subcommand("sa", "stochastic ascent on a discrete control grid");
  sa_cmd->add_option("-T,--duration", sa.duration)->capture_default_str();
  sa_cmd->add_option("-N,--steps", sa.steps, "step count (default T / 0.0025)");
  sa_cmd->add_option("-s,--positions", sa.positions)->capture_default_str();
  sa_cmd->add_option("--amplitudes", sa.amplitude_choices)->delimiter(',');
  sa_cmd->add_flag("--fix-first", sa.fix_first_step);
  sa_cmd->add_option("--seeds", sa_seeds, "independent runs")->capture_default_str();
  sa_cmd->add_option("--seed", sa.rng_seed, "first RNG seed")->capture_default_str();
  sa_cmd->add_option("--max-sweeps", sa.max_sweeps)->capture_default_str();
  sa_cmd->add_option("--threads", sa_threads)->capture_default_str();
  sa_cmd->add_option("--grid", sa_grid)->capture_default_str();
  sa_cmd->add_option("-o,--out", sa_out, "append run records (JSON lines) here");
  sa_cmd->add_option("--best", sa_best, "write the best protocol here");
  sa_cmd->callback([&] {
    if (sa_cmd->count("--steps") == 0) sa.steps = steps_for(sa.duration, 0);
    const auto t0 = std::chrono::steady_clock::now();
    const auto runs = tl::run_stochastic_ascent_batch(sa, params, sa_seeds, sa_threads, sa_grid);
    const double seconds = tl::detail::seconds_since(t0);
    std::size_t best = 0;
    tl::json fidelities = tl::json::array();
    std::vector<tl::RunRecord> records;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      fidelities.push_back(runs[i].fidelity);
      if (runs[i].fidelity > runs[best].fidelity) best = i;
      tl::SAConfig c = sa;
      c.rng_seed = runs[i].rng_seed;
      records.push_back(tl::detail::sa_record(runs[i], c, "sa", seconds / runs.size(), sa_grid));
    }
    if (!sa_out.empty()) tl::append_records(records, sa_out);
    if (!sa_best.empty()) tl::save_protocol(runs[best].protocol, sa_best);
    emit({{"algorithm", "sa"},
          {"duration", sa.duration},
          {"steps", sa.steps},
          {"best_fidelity", runs[best].fidelity},
          {"best_seed", runs[best].rng_seed},
          {"sweeps", runs[best].sweeps},
          {"converged", runs[best].converged},
          {"fidelities", fidelities},
          {"wall_seconds", seconds}});
  });

  // grape / krotov
  GradientOptions go;
  double grape_lr = 0.1;
  auto* grape_cmd = app.add_subcommand("grape", "gradient ascent (GRAPE) over the grid schedule");
  add_gradient_options(grape_cmd, go);
  grape_cmd->add_option("--lr", grape_lr)->capture_default_str();
  grape_cmd->callback([&] {
    tl::GrapeConfig c;
    c.duration = go.duration;
    c.steps = steps_for(go.duration, go.steps);
    c.init = seed_spec(go.init);
    c.schedule = go.schedule;
    c.learning_rate = grape_lr;
    c.fix_first_step = !go.free_first;
    if (go.max_iterations > 0) c.max_iterations = go.max_iterations;
    c.validate();
    run_gradient("grape", tl::grape_setup(c), go, params);
  });

  GradientOptions ko;
  tl::KrotovConfig krotov;
  auto* krotov_cmd = app.add_subcommand("krotov", "Krotov-style costate ascent");
  add_gradient_options(krotov_cmd, ko);
  krotov_cmd->add_option("--lr-pos", krotov.position_learning_rate)->capture_default_str();
  krotov_cmd->add_option("--lr-amp", krotov.amplitude_learning_rate)->capture_default_str();
  krotov_cmd->callback([&] {
    krotov.duration = ko.duration;
    krotov.steps = steps_for(ko.duration, ko.steps);
    krotov.init = seed_spec(ko.init);
    krotov.schedule = ko.schedule;
    krotov.fix_first_step = !ko.free_first;
    if (ko.max_iterations > 0) krotov.max_iterations = ko.max_iterations;
    krotov.validate();
    run_gradient("krotov", tl::krotov_setup(krotov), ko, params);
  });

  // seed
  std::string seed_kind = "cubic", seed_out;
  double seed_duration = 0.2;
  int seed_steps = 0;
  std::uint64_t seed_rng = 0;
  auto* seed_cmd = app.add_subcommand("seed", "generate or resample an initial protocol");
  seed_cmd->add_option("--kind", seed_kind, "uniform, linear, cubic, kass, file:PATH, ridge:PATH")
      ->capture_default_str();
  seed_cmd->add_option("-T,--duration", seed_duration)->capture_default_str();
  seed_cmd->add_option("-N,--steps", seed_steps, "step count (default T / 0.0025)");
  seed_cmd->add_option("--seed", seed_rng)->capture_default_str();
  seed_cmd->add_option("-o,--out", seed_out)->required();
  seed_cmd->callback([&] {
    const tl::Protocol p = tl::make_seed(seed_spec(seed_kind), seed_duration,
                                         steps_for(seed_duration, seed_steps), params, seed_rng);
    tl::save_protocol(p, seed_out);
    emit({{"kind", seed_kind}, {"duration", p.duration}, {"steps", p.size()}, {"out", seed_out}});
  });

  // heatmap
  std::vector<std::string> hm_runs;
  std::string hm_store, hm_algorithm, hm_csv, hm_ridge;
  int hm_top = 0;
  double hm_duration = 0.0;
  bool hm_second = false;
  auto* hm_cmd = app.add_subcommand("heatmap", "heat map of the best runs and its ridge");
  hm_cmd->add_option("--runs", hm_runs, "run record files (JSON lines)");
  hm_cmd->add_option("--store", hm_store, "run store directory");
  hm_cmd->add_option("--algorithm", hm_algorithm, "only records with this tag");
  hm_cmd->add_option("-T,--duration", hm_duration, "only runs of this duration");
  hm_cmd->add_option("--top", hm_top, "runs to include (default all)");
  hm_cmd->add_option("-o,--out", hm_csv, "write the histogram counts (CSV) here");
  hm_cmd->add_option("--ridge", hm_ridge, "write the ridge protocol here");
  hm_cmd->add_flag("--second", hm_second, "take the second ridge instead");
  hm_cmd->callback([&] {
    std::vector<tl::RunRecord> runs;
    for (auto& r : load_runs(hm_runs, hm_store)) {
      if (!r.error.empty() || (!hm_algorithm.empty() && r.algorithm != hm_algorithm)) continue;
      if (hm_duration > 0.0 &&
          tl::duration_bucket(r.protocol.duration) != tl::duration_bucket(hm_duration))
        continue;
      runs.push_back(std::move(r));
    }
    const int k = hm_top > 0 ? std::min(hm_top, static_cast<int>(runs.size()))
                             : static_cast<int>(runs.size());
    const tl::HeatMap h = tl::build_heatmap(runs, k, params);
    if (!hm_csv.empty()) tl::write_heatmap_csv(h, hm_csv);
    tl::json out = {{"runs", h.source_runs}, {"top_k", h.top_k}, {"steps", h.steps()},
                    {"duration", h.duration}, {"selected", h.selected_ids}};
    if (!hm_ridge.empty()) {
      const tl::Protocol ridge = tl::extract_ridge(h, params, hm_second);
      tl::save_protocol(ridge, hm_ridge);
      out["ridge_fidelity"] = tl::fidelity(ridge, tl::Problem(params, 512));
    }
    emit(out);
  });

  // sweep
  tl::SweepSpec sweep;
  std::string sweep_algorithm = "sa", sweep_durations, sweep_store, sweep_init = "uniform";
  auto* sweep_cmd = app.add_subcommand("sweep", "best-of-restarts fidelity over durations");
  sweep_cmd->add_option("--algo", sweep_algorithm, "sa, grape or krotov")->capture_default_str();
  sweep_cmd->add_option("--durations", sweep_durations, "a:step:b or a comma list")->required();
  sweep_cmd->add_option("--restarts", sweep.restarts)->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.first_seed, "first RNG seed")->capture_default_str();
  sweep_cmd->add_option("--threads", sweep.threads)->capture_default_str();
  sweep_cmd->add_option("-s,--positions", sweep.sa.positions)->capture_default_str();
  sweep_cmd->add_flag("--fix-first", sweep.sa.fix_first_step, "pin the first SA step");
  sweep_cmd->add_option("--init", sweep_init, "gradient-method seed")->capture_default_str();
  sweep_cmd->add_option("--store", sweep_store, "persist runs; existing runs are reused");
  sweep_cmd->callback([&] {
    sweep.algorithm = tl::parse_algorithm(sweep_algorithm);
    sweep.durations = tl::parse_durations(sweep_durations);
    sweep.grape.init = seed_spec(sweep_init);
    sweep.krotov.init = sweep.grape.init;
    std::optional<tl::RunStore> store;
    if (!sweep_store.empty()) store.emplace(sweep_store);
    const tl::SweepResult r = tl::run_sweep(sweep, params, store ? &*store : nullptr);
    tl::json best = tl::json::object();
    for (const auto& [t, f] : r.best) best[duration_key(t)] = f;
    emit({{"algorithm", sweep_algorithm},
          {"best", best},
          {"qsl", r.qsl ? tl::json(*r.qsl) : tl::json(nullptr)}});
  });

  // qsl
  std::string qsl_store, qsl_algorithm = "sa";
  double qsl_threshold = tl::kQslThreshold;
  auto* qsl_cmd = app.add_subcommand("qsl", "shortest stored duration reaching the threshold");
  qsl_cmd->add_option("--store", qsl_store)->required();
  qsl_cmd->add_option("--algo", qsl_algorithm)->capture_default_str();
  qsl_cmd->add_option("--threshold", qsl_threshold)->capture_default_str();
  qsl_cmd->callback([&] {
    const tl::SweepResult r = tl::sweep_from_store(tl::RunStore(qsl_store), qsl_algorithm);
    const auto q = tl::qsl(r.best, qsl_threshold);
    tl::json best = tl::json::object();
    for (const auto& [t, f] : r.best) best[duration_key(t)] = f;
    emit({{"algorithm", qsl_algorithm},
          {"threshold", qsl_threshold},
          {"best", best},
          {"qsl", q ? tl::json(*q) : tl::json(nullptr)}});
  });

  // excite
  std::string ex_protocol, ex_out;
  int ex_levels = 15, ex_grid = 512;
  auto* ex_cmd = app.add_subcommand("excite", "instantaneous-eigenstate populations per step");
  ex_cmd->add_option("--protocol", ex_protocol)->required();
  ex_cmd->add_option("--levels", ex_levels)->capture_default_str();
  ex_cmd->add_option("--grid", ex_grid)->capture_default_str();
  ex_cmd->add_option("-o,--out", ex_out)->required();
  ex_cmd->callback([&] {
    const tl::Protocol p = tl::load_protocol(ex_protocol, params);
    tl::export_excitation(p, ex_out, params, ex_grid, ex_levels);
    emit({{"protocol", ex_protocol}, {"levels", ex_levels}, {"out", ex_out}});
  });

  // score
  std::vector<std::string> score_files;
  int score_grid = 512;
  auto* score_cmd = app.add_subcommand("score", "fidelity of protocol files");
  score_cmd->add_option("protocols", score_files)->required();
  score_cmd->add_option("--grid", score_grid)->capture_default_str();
  score_cmd->callback([&] {
    const tl::Problem problem(params, score_grid);
    tl::json out = tl::json::array();
    for (const auto& f : score_files) {
      const tl::Protocol p = tl::load_protocol(f, params);
      const double fid = tl::fidelity(p, problem);
      out.push_back({{"protocol", f}, {"duration", p.duration}, {"steps", p.size()},
                     {"fidelity", fid}, {"qsl_pass", fid >= tl::kQslThreshold}});
    }
    emit(out);
  });

  // serve
  std::string serve_host = "0.0.0.0";
  auto* serve_cmd = app.add_subcommand(
      "serve", "HTTP scoring service (TWEEZERLAB_PORT, TWEEZERLAB_STORE, TWEEZERLAB_GRID)");
  serve_cmd->add_option("--host", serve_host)->capture_default_str();
  serve_cmd->callback([&] {
    tl::ServiceConfig c;
    c.grid_points = env_int("TWEEZERLAB_GRID", 512);
    if (const char* s = std::getenv("TWEEZERLAB_STORE"); s && *s) c.store = s;
    const int port = env_int("TWEEZERLAB_PORT", 8080);
    tl::ScoringService service(c);
    httplib::Server server;
    tl::mount(server, service);
    std::cerr << "listening on " << serve_host << ':' << port << " (grid " << c.grid_points
              << ")\n";
    if (!server.listen(serve_host, port))
      throw tl::IoError("cannot listen on " + serve_host + ":" + std::to_string(port));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const tl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
