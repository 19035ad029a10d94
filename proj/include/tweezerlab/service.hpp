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
#include <ctime>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tweezerlab/harness.hpp"
#include "tweezerlab/protocol_io.hpp"
#include "tweezerlab/run_record.hpp"
#include "tweezerlab/simulation.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include "httplib.h"

namespace tweezerlab {

struct ServiceConfig {
  int grid_points = 512;   // scoring resolution
  int render_points = 128; // frame resolution
  int max_steps = 400;
  double max_duration = 1.0;
  std::optional<std::filesystem::path> store;  // leaderboard persistence
  PhysicsParams params{};
};

struct HttpResponse {
  int status = 200;
  json body;
};

inline const std::set<std::string>& leaderboard_sources() {
  static const std::set<std::string> s{"human", "sa", "grape", "krotov", "cd-file"};
  return s;
}

inline long duration_bucket(double duration) { return std::lround(duration / kStepDuration); }

// Request handlers, independent of the transport. Scoring is stateless over
// immutable problems; the leaderboard is the only mutable state and every
// change goes through one mutex.
class ScoringService {
 public:
  explicit ScoringService(ServiceConfig config)
      : config_(std::move(config)),
        problem_(config_.params, config_.grid_points),
        render_(config_.params, config_.render_points) {
    if (config_.store) {
      std::filesystem::create_directories(*config_.store);
      const auto path = leaderboard_path();
      if (std::filesystem::exists(path))
        for (auto& r : read_records(path)) {
          ids_.insert(r.id);
          entries_.push_back(std::move(r));
        }
    }
  }

  const ServiceConfig& config() const { return config_; }

  HttpResponse problem() const {
    const PhysicsParams& p = config_.params;
    json potential = json::array();
    for (Eigen::Index i = 0; i < render_.fixed_potential().size(); ++i)
      potential.push_back(-render_.fixed_potential()[i]);
    return {200,
            {{"params",
              {{"mass", p.mass},
               {"B", p.fixed_amplitude},
               {"sigma", p.sigma},
               {"x_start", p.x_start},
               {"x_end", p.x_end},
               {"amp_min", p.amp_min},
               {"amp_max", p.amp_max},
               {"domain_half_width", p.domain_half_width}}},
             {"duration_range", {{"min", kStepDuration}, {"max", config_.max_duration}}},
             {"ratio", kStepDuration},
             {"max_steps", config_.max_steps},
             {"grid_points", config_.grid_points},
             {"render", {{"grid_points", config_.render_points},
                         {"points", std::vector<double>(render_.grid().points.data(),
                                                        render_.grid().points.data() +
                                                            render_.grid().size)}}},
             {"fixed_potential", std::move(potential)}}};
  }

  HttpResponse score(const std::string& body) const {
    return guarded([&] {
      const json doc = parse_body(body);
      const Protocol p = checked_protocol(doc);
      bool frames = false;
      int stride = 1, levels = 0;
      if (const auto it = doc.find("options"); it != doc.end()) {
        if (!it->is_object()) throw SchemaError("options", "must be an object");
        frames = boolean_option(*it, "frames", false);
        stride = integer_option(*it, "frame_stride", 1);
        levels = integer_option(*it, "levels", 0);
        if (stride < 1) throw BoundsError("options.frame_stride", "must be at least 1");
        if (levels < 0 || levels > config_.grid_points)
          throw BoundsError("options.levels", "must lie in [0, grid points]");
      }
      const double f = fidelity(p, problem_);
      json out = {{"fidelity", f},
                  {"qsl_pass", f >= kQslThreshold},
                  {"grid_points", config_.grid_points},
                  {"duration", p.duration},
                  {"steps", p.size()}};
      if (frames) out["frames"] = render_frames(p, stride);
      if (levels > 0) {
        const Eigen::MatrixXd pop =
            excitation_spectrum(p, problem_.initial_state(), problem_, levels);
        json rows = json::array();
        for (Eigen::Index k = 0; k < pop.rows(); ++k) {
          std::vector<double> row(static_cast<std::size_t>(pop.cols()));
          for (Eigen::Index l = 0; l < pop.cols(); ++l) row[l] = pop(k, l);
          rows.push_back(std::move(row));
        }
        out["excitation"] = std::move(rows);
      }
      return HttpResponse{200, std::move(out)};
    });
  }

  // The stored fidelity is always recomputed here; anything the client
  // claims is ignored.
  HttpResponse submit(const std::string& body) {
    return guarded([&] {
      const json doc = parse_body(body);
      const Protocol p = checked_protocol(doc);
      const std::string name = string_field(doc, "name", "anonymous");
      const std::string source = string_field(doc, "source", "human");
      if (!leaderboard_sources().count(source))
        throw SchemaError("source", "must be one of human, sa, grape, krotov, cd-file");
      std::string id = string_field(doc, "id", "");
      const double f = fidelity(p, problem_);

      std::lock_guard<std::mutex> lock(mutex_);
      if (id.empty()) {
        for (std::size_t n = entries_.size() + 1;; ++n) {
          id = "entry-" + std::to_string(n);
          if (!ids_.count(id)) break;
        }
      } else if (ids_.count(id)) {
        return HttpResponse{409, {{"error", "conflict"}, {"message", "entry id already exists"}, {"id", id}}};
      }
      RunRecord r;
      r.id = id;
      r.algorithm = source;
      r.config = {{"name", name}, {"timestamp", timestamp()}};
      r.fidelity = f;
      r.protocol = p;
      r.grid_points = config_.grid_points;
      if (config_.store) append_records({r}, leaderboard_path());
      ids_.insert(id);
      entries_.push_back(r);
      return HttpResponse{201, entry_json(r)};
    });
  }

  // Entries in the duration bucket nearest `duration` (all entries without
  // one), highest fidelity first; ties by id.
  HttpResponse leaderboard(std::optional<double> duration) const {
    if (duration && !(std::isfinite(*duration) && *duration > 0.0))
      return {400, {{"error", "validation"}, {"field", "duration"}, {"message", "must be a positive number"}}};
    std::vector<RunRecord> view;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (const auto& r : entries_)
        if (!duration || duration_bucket(r.protocol.duration) == duration_bucket(*duration))
          view.push_back(r);
    }
    std::stable_sort(view.begin(), view.end(), [](const RunRecord& a, const RunRecord& b) {
      if (a.fidelity != b.fidelity) return a.fidelity > b.fidelity;
      return a.id < b.id;
    });
    json out = json::array();
    for (const auto& r : view) out.push_back(entry_json(r));
    return {200, {{"entries", std::move(out)}}};
  }

 private:
  std::filesystem::path leaderboard_path() const { return *config_.store / "leaderboard.jsonl"; }

  // Duration or step count beyond the service limits (HTTP 422).
  struct LimitError {
    std::string field, message;
  };

  template <typename F>
  static HttpResponse guarded(F&& f) {
    try {
      return f();
    } catch (const ParseError& e) {
      return {400, {{"error", "malformed"}, {"message", e.what()}}};
    } catch (const SchemaError& e) {
      return {400, {{"error", "validation"}, {"field", e.field()}, {"message", e.what()}}};
    } catch (const BoundsError& e) {
      return {400, {{"error", "validation"}, {"field", e.field()}, {"message", e.what()}}};
    } catch (const LimitError& e) {
      return {422, {{"error", "limit"}, {"field", e.field}, {"message", e.message}}};
    } catch (const std::exception&) {
      return {500, {{"error", "internal"}, {"message", "the request could not be processed"}}};
    }
  }

  static json parse_body(const std::string& body) {
    try {
      json doc = json::parse(body);
      if (!doc.is_object()) throw SchemaError("$", "request body must be a JSON object");
      return doc;
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what());
    }
  }

  Protocol checked_protocol(const json& doc) const {
    const auto it = doc.find("protocol");
    if (it == doc.end()) throw SchemaError("protocol", "missing field");
    Protocol p = protocol_from_json(*it);
    if (p.size() > config_.max_steps)
      throw LimitError{"steps", "at most " + std::to_string(config_.max_steps) + " steps"};
    if (std::isfinite(p.duration) && p.duration > config_.max_duration)
      throw LimitError{"duration", "at most " + std::to_string(config_.max_duration)};
    validate(p, config_.params);
    return p;
  }

  static bool boolean_option(const json& o, const char* key, bool fallback) {
    const auto it = o.find(key);
    if (it == o.end()) return fallback;
    if (!it->is_boolean()) throw SchemaError(std::string("options.") + key, "must be a boolean");
    return it->get<bool>();
  }

  static int integer_option(const json& o, const char* key, int fallback) {
    const auto it = o.find(key);
    if (it == o.end()) return fallback;
    if (!it->is_number_integer()) throw SchemaError(std::string("options.") + key, "must be an integer");
    return it->get<int>();
  }

  static std::string string_field(const json& doc, const char* key, const std::string& fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_string()) throw SchemaError(key, "must be a string");
    return it->get<std::string>();
  }

  // |psi_k|^2 at the render resolution for k = 0, stride, 2 stride, ... and N.
  json render_frames(const Protocol& p, int stride) const {
    const auto states = evolve(p, render_.initial_state(), render_);
    const int n = p.size();
    std::vector<int> steps;
    for (int k = 0; k < n; k += stride) steps.push_back(k);
    steps.push_back(n);
    json frames = json::array();
    for (int k : steps) {
      const Eigen::VectorXd d = states[k].amplitudes.cwiseAbs2();
      frames.push_back({{"step", k}, {"density", std::vector<double>(d.data(), d.data() + d.size())}});
    }
    return frames;
  }

  static std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  static json entry_json(const RunRecord& r) {
    return {{"id", r.id},
            {"name", r.config.value("name", std::string{})},
            {"source", r.algorithm},
            {"duration", r.protocol.duration},
            {"fidelity", r.fidelity},
            {"timestamp", r.config.value("timestamp", std::string{})},
            {"protocol", protocol_to_json(r.protocol)}};
  }

  ServiceConfig config_;
  Problem problem_;
  Problem render_;
  mutable std::mutex mutex_;
  std::vector<RunRecord> entries_;
  std::set<std::string> ids_;
};

// Routes the service onto an HTTP server.
inline void mount(httplib::Server& server, ScoringService& service) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/problem", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.problem());
  });
  server.Post("/api/score", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.score(req.body));
  });
  server.Post("/api/leaderboard",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.submit(req.body));
              });
  server.Get("/api/leaderboard",
             [&service, reply](const httplib::Request& req, httplib::Response& res) {
               std::optional<double> duration;
               if (req.has_param("duration")) {
                 try {
                   std::size_t used = 0;
                   const std::string v = req.get_param_value("duration");
                   duration = std::stod(v, &used);
                   if (used != v.size()) duration = std::nan("");
                 } catch (const std::exception&) {
                   duration = std::nan("");
                 }
               }
               reply(res, service.leaderboard(duration));
             });
}

}  // namespace tweezerlab
