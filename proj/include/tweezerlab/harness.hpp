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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tweezerlab/grape.hpp"
#include "tweezerlab/krotov.hpp"
#include "tweezerlab/run_record.hpp"
#include "tweezerlab/stochastic_ascent.hpp"

namespace tweezerlab {

inline constexpr double kQslThreshold = 0.999;

// Durations are snapped to whole steps of 0.0025 so N = T / 0.0025 exactly.
inline double quantize_duration(double duration) {
  const int n = steps_for_duration(duration);
  if (n < 1) throw ConfigError("duration " + std::to_string(duration) + " is below one step");
  return n * kStepDuration;
}

// "0.10:0.02:0.20" (inclusive range) or "0.1,0.12,0.2".
inline std::vector<double> parse_durations(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      double lo, step, hi;
      char c1, c2;
      std::istringstream is(text);
      if (!(is >> lo >> c1 >> step >> c2 >> hi) || c1 != ':' || c2 != ':' || !(step > 0.0))
        throw ConfigError("bad duration range '" + text + "'");
      for (int i = 0; lo + i * step <= hi + 1e-9; ++i) out.push_back(quantize_duration(lo + i * step));
    } else {
      std::istringstream is(text);
      for (std::string tok; std::getline(is, tok, ',');) out.push_back(quantize_duration(std::stod(tok)));
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad duration list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("no durations in '" + text + "'");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct SweepResult {
  std::map<double, double> best;                  // T -> best fidelity at 512
  std::map<double, std::vector<double>> per_run;  // T -> every final fidelity
  std::optional<double> qsl;
};

inline std::optional<double> qsl(const std::map<double, double>& best,
                                 double threshold = kQslThreshold) {
  for (const auto& [t, f] : best)
    if (f >= threshold) return t;
  return std::nullopt;
}

inline std::optional<double> qsl(const SweepResult& sweep, double threshold = kQslThreshold) {
  return qsl(sweep.best, threshold);
}

inline std::string run_id(const std::string& algorithm, double duration, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s-T%.4f-s%llu", algorithm.c_str(), duration,
                static_cast<unsigned long long>(seed));
  return buf;
}

// Directory of one-record JSON-lines files, merged on read. Each record is
// written to a temporary name and renamed, so readers never see partial runs.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create store " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  void put(const RunRecord& r) {
    const auto final_path = dir_ / (r.id + ".jsonl");
    const auto tmp = dir_ / (r.id + ".jsonl.tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << record_to_json(r).dump() << '\n';
      if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) throw IoError("cannot commit " + final_path.string() + ": " + ec.message());
  }

  bool contains(const std::string& id) const {
    return std::filesystem::exists(dir_ / (id + ".jsonl"));
  }

  std::vector<RunRecord> all() const {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<RunRecord> out;
    for (const auto& f : files)
      for (auto& r : read_records(f)) out.push_back(std::move(r));
    return out;
  }

 private:
  std::filesystem::path dir_;
};

enum class Algorithm { kStochasticAscent, kGrape, kKrotov };

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "sa") return Algorithm::kStochasticAscent;
  if (name == "grape") return Algorithm::kGrape;
  if (name == "krotov") return Algorithm::kKrotov;
  throw ConfigError("unknown algorithm '" + name + "'");
}

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kStochasticAscent: return "sa";
    case Algorithm::kGrape: return "grape";
    case Algorithm::kKrotov: return "krotov";
  }
  return "unknown";
}

inline json config_json(const SAConfig& c) {
  return {{"duration", c.duration},
          {"steps", c.steps},
          {"positions", c.positions},
          {"amplitudes", c.amplitude_choices},
          {"fix_first_step", c.fix_first_step},
          {"max_sweeps", c.max_sweeps},
          {"q1", {c.target.q1.real(), c.target.q1.imag()}},
          {"q2", {c.target.q2.real(), c.target.q2.imag()}}};
}

inline json config_json(const GradientSetup& s, const char* algorithm) {
  return {{"algorithm", algorithm},
          {"duration", s.duration},
          {"steps", s.steps},
          {"init", seed_kind_name(s.init.kind)},
          {"lr_position", s.settings.position_learning_rate},
          {"lr_amplitude", s.settings.amplitude_learning_rate},
          {"separate_channels", s.settings.separate_channels},
          {"max_iterations", s.settings.max_iterations},
          {"patience", s.settings.patience},
          {"schedule", s.schedule},
          {"fix_first_step", s.fix_first_step},
          {"q1", {s.target.q1.real(), s.target.q1.imag()}},
          {"q2", {s.target.q2.real(), s.target.q2.imag()}}};
}

// Fidelity of a stored protocol at a resolution, from scratch.
inline double verify_record(const RunRecord& r, const PhysicsParams& params,
                            const TargetSpec& target = {}) {
  const Problem problem(params, r.grid_points);
  const Targets t = make_targets(problem, target);
  return fidelity(r.protocol, t.initial, t.target, problem);
}

struct SweepSpec {
  Algorithm algorithm = Algorithm::kStochasticAscent;
  std::vector<double> durations;
  int restarts = 20;
  std::uint64_t first_seed = 0;
  int threads = 1;
  int grid_points = 512;  // SA resolution; gradient methods end on their schedule
  SAConfig sa{};           // duration and steps are overwritten per T
  GrapeConfig grape{};
  KrotovConfig krotov{};
  TargetSpec target{};
};

namespace detail {

inline RunRecord sa_record(const SAResult& r, const SAConfig& c, const std::string& name,
                           double seconds, int grid) {
  RunRecord rec;
  rec.id = run_id(name, c.duration, r.rng_seed);
  rec.algorithm = name;
  rec.config = config_json(c);
  rec.rng_seed = r.rng_seed;
  rec.fidelity = r.fidelity;
  rec.trace = r.trace;
  rec.protocol = r.protocol;
  rec.wall_seconds = seconds;
  rec.grid_points = grid;
  return rec;
}

inline RunRecord gradient_record(const GradientRun& r, const std::string& algorithm,
                                 const json& config, double duration, double seconds) {
  RunRecord rec;
  rec.id = run_id(algorithm, duration, r.rng_seed);
  rec.algorithm = algorithm;
  rec.config = config;
  rec.rng_seed = r.rng_seed;
  rec.fidelity = r.fidelity;
  rec.trace = r.trace;
  rec.protocol = r.protocol;
  rec.protocol.meta["algorithm"] = algorithm;
  rec.wall_seconds = seconds;
  rec.grid_points = r.grid_points;
  return rec;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

struct GradientBatch {
  std::vector<RunRecord> coarse;  // one per restart, tagged "<name>-coarse"
  RunRecord final;                // best coarse run refined up the schedule, tagged "<name>"
};

// Batch scheme for the gradient methods: `restarts` runs on the coarsest
// grid, the best one refined through the rest of the schedule. Records found
// in `existing` are reused instead of recomputed; fresh ones go to `store`.
inline GradientBatch run_gradient_batch(const GradientSetup& setup, const std::string& name,
                                        const PhysicsParams& params, std::uint64_t first_seed,
                                        int restarts, int threads = 1,
                                        const std::map<std::string, RunRecord>* existing = nullptr,
                                        RunStore* store = nullptr) {
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  const json cfg = config_json(setup, name.c_str());
  const std::string coarse_name = name + "-coarse";
  const double t = setup.duration;
  GradientBatch out;
  out.coarse.resize(static_cast<std::size_t>(restarts));
  std::vector<GradientRun> coarse(out.coarse.size());
  const auto lookup = [existing](const std::string& id) -> const RunRecord* {
    if (!existing) return nullptr;
    const auto it = existing->find(id);
    return it == existing->end() ? nullptr : &it->second;
  };
  std::vector<std::size_t> todo;
  for (std::size_t r = 0; r < coarse.size(); ++r) {
    const std::uint64_t seed = first_seed + r;
    if (const RunRecord* rec = lookup(run_id(coarse_name, t, seed))) {
      out.coarse[r] = *rec;
      coarse[r].rng_seed = seed;
      coarse[r].protocol = rec->protocol;
      coarse[r].fidelity = rec->fidelity;
      coarse[r].grid_points = rec->grid_points;
      coarse[r].trace = rec->trace;
    } else {
      todo.push_back(r);
    }
  }
  parallel_for(todo.size(), threads, [&](std::size_t i) {
    const std::size_t r = todo[i];
    const auto t0 = std::chrono::steady_clock::now();
    coarse[r] = coarse_restarts(setup, params, first_seed + r, 1, 1).front();
    out.coarse[r] = detail::gradient_record(coarse[r], coarse_name, cfg, t,
                                            detail::seconds_since(t0));
  });
  if (store)
    for (std::size_t r : todo) store->put(out.coarse[r]);

  const std::size_t best = best_run(coarse);
  if (const RunRecord* rec = lookup(run_id(name, t, coarse[best].rng_seed))) {
    out.final = *rec;
    return out;
  }
  const auto t0 = std::chrono::steady_clock::now();
  GradientRun refined = refine(coarse[best], setup, params);
  out.final = detail::gradient_record(refined, name, cfg, t, detail::seconds_since(t0));
  if (store) store->put(out.final);
  return out;
}

// Best-of-restarts fidelity per duration, N = T / 0.0025. With a store, every
// run is persisted and (algorithm, T, seed) triples already present are
// skipped and read back instead. Gradient methods follow the batch scheme:
// `restarts` runs on the coarsest grid (stored as "<algo>-coarse"), the best
// one refined up to 512 (stored as "<algo>").
inline SweepResult run_sweep(const SweepSpec& spec, const PhysicsParams& params,
                             RunStore* store = nullptr) {
  if (spec.durations.empty()) throw ConfigError("sweep needs at least one duration");
  if (spec.restarts < 1) throw ConfigError("restarts must be at least 1");
  std::vector<double> durations;
  for (double t : spec.durations) durations.push_back(quantize_duration(t));
  std::sort(durations.begin(), durations.end());

  std::map<std::string, RunRecord> existing;
  if (store)
    for (auto& r : store->all()) existing.emplace(r.id, std::move(r));

  // Runs against a superposition target are kept apart from the plain ones.
  const std::string suffix = spec.target.is_plain() ? "" : "-superposition";
  SweepResult out;
  for (double t : durations) {
    const int n = steps_for_duration(t);
    std::vector<RunRecord> finals;
    if (spec.algorithm == Algorithm::kStochasticAscent) {
      SAConfig c = spec.sa;
      c.duration = t;
      c.steps = n;
      c.target = spec.target;
      std::vector<std::uint64_t> todo;
      for (int r = 0; r < spec.restarts; ++r) {
        const std::uint64_t seed = spec.first_seed + r;
        const auto it = existing.find(run_id("sa" + suffix, t, seed));
        if (it != existing.end())
          finals.push_back(it->second);
        else
          todo.push_back(seed);
      }
      if (!todo.empty()) {
        const Problem problem(params, spec.grid_points);
        const UnitaryBank bank(problem, c);
        const Targets targets = make_targets(problem, c.target);
        std::vector<RunRecord> fresh(todo.size());
        parallel_for(todo.size(), spec.threads, [&](std::size_t i) {
          SAConfig ci = c;
          ci.rng_seed = todo[i];
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const SAResult res = run_stochastic_ascent(ci, bank, targets, params);
            fresh[i] = detail::sa_record(res, ci, "sa" + suffix, detail::seconds_since(t0),
                                         spec.grid_points);
          } catch (const std::exception& e) {
            fresh[i].id = run_id("sa" + suffix, t, todo[i]);
            fresh[i].algorithm = "sa" + suffix;
            fresh[i].rng_seed = todo[i];
            fresh[i].error = e.what();
          }
        });
        for (auto& r : fresh) {
          if (store && r.error.empty()) store->put(r);
          finals.push_back(std::move(r));
        }
      }
    } else {
      const bool grape = spec.algorithm == Algorithm::kGrape;
      const std::string name = algorithm_name(spec.algorithm) + suffix;
      GradientSetup setup;
      if (grape) {
        GrapeConfig c = spec.grape;
        c.duration = t;
        c.steps = n;
        c.target = spec.target;
        setup = grape_setup(c);
      } else {
        KrotovConfig c = spec.krotov;
        c.duration = t;
        c.steps = n;
        c.target = spec.target;
        setup = krotov_setup(c);
      }
      GradientBatch batch = run_gradient_batch(setup, name, params, spec.first_seed,
                                               spec.restarts, spec.threads, &existing, store);
      finals.push_back(std::move(batch.final));
    }
    double best_f = 0.0;
    auto& runs = out.per_run[t];
    for (const auto& r : finals) {
      if (!r.error.empty()) continue;
      runs.push_back(r.fidelity);
      best_f = std::max(best_f, r.fidelity);
    }
    out.best[t] = best_f;
  }
  out.qsl = qsl(out);
  return out;
}

// Best fidelity per duration from a store, for one algorithm (final records only).
inline SweepResult sweep_from_store(const RunStore& store, const std::string& algorithm) {
  SweepResult out;
  for (const auto& r : store.all()) {
    if (r.algorithm != algorithm || !r.error.empty()) continue;
    const double t = quantize_duration(r.protocol.duration);
    out.per_run[t].push_back(r.fidelity);
    out.best[t] = std::max(out.best[t], r.fidelity);
  }
  out.qsl = qsl(out);
  return out;
}

inline void export_trace(const std::vector<RunRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file " + path.string());
  out.precision(17);
  out << "run_id,update_index,fidelity\n";
  for (const auto& r : records)
    for (std::size_t i = 0; i < r.trace.values.size(); ++i)
      out << r.id << ',' << i << ',' << r.trace.values[i] << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline void export_excitation(const Protocol& protocol, const std::filesystem::path& path,
                              const PhysicsParams& params = {}, int grid_points = 512,
                              int levels = 15) {
  const Problem problem(params, grid_points);
  const Eigen::MatrixXd pop = excitation_spectrum(protocol, problem.initial_state(), problem, levels);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write excitation file " + path.string());
  out.precision(17);
  out << "step,level,population\n";
  for (Eigen::Index k = 0; k < pop.rows(); ++k)
    for (Eigen::Index l = 0; l < pop.cols(); ++l) out << k << ',' << l << ',' << pop(k, l) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

// Stochastic-ascent sweep against the superposition target; per-run
// fidelities are kept in the result.
inline SweepResult superposition_experiment(cplx q1, cplx q2, const std::vector<double>& durations,
                                            int restarts, const SAConfig& base,
                                            const PhysicsParams& params, int threads = 1,
                                            std::uint64_t first_seed = 0,
                                            RunStore* store = nullptr, int grid_points = 512) {
  SweepSpec spec;
  spec.algorithm = Algorithm::kStochasticAscent;
  spec.durations = durations;
  spec.restarts = restarts;
  spec.threads = threads;
  spec.first_seed = first_seed;
  spec.sa = base;
  spec.target = {q1, q2};
  spec.grid_points = grid_points;
  return run_sweep(spec, params, store);
}

}  // namespace tweezerlab
