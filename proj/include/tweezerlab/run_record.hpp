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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tweezerlab/errors.hpp"
#include "tweezerlab/protocol_io.hpp"
#include "tweezerlab/trace.hpp"

namespace tweezerlab {

// One optimizer run, the unit of persistence.
struct RunRecord {
  std::string id;
  std::string algorithm;  // "sa", "grape" or "krotov"
  json config = json::object();
  std::uint64_t rng_seed = 0;
  double fidelity = 0.0;
  FidelityTrace trace;
  Protocol protocol;
  double wall_seconds = 0.0;
  int grid_points = 512;
  std::string error;  // non-empty when the run failed
};

inline json record_to_json(const RunRecord& r) {
  json j = {{"id", r.id},
            {"algorithm", r.algorithm},
            {"config", r.config},
            {"rng_seed", r.rng_seed},
            {"fidelity", r.fidelity},
            {"trace", r.trace.values},
            {"trace_boundaries", r.trace.boundaries},
            {"protocol", protocol_to_json(r.protocol)},
            {"wall_seconds", r.wall_seconds},
            {"grid_points", r.grid_points}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline RunRecord record_from_json(const json& j) {
  try {
    RunRecord r;
    r.id = j.at("id").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.config = j.value("config", json::object());
    r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    r.fidelity = j.at("fidelity").get<double>();
    r.trace.values = j.value("trace", std::vector<double>{});
    r.trace.boundaries = j.value("trace_boundaries", std::vector<std::size_t>{});
    r.protocol = protocol_from_json(j.at("protocol"));
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.grid_points = j.value("grid_points", 512);
    r.error = j.value("error", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw SchemaError("record", e.what());
  }
}

// JSON lines; blank lines are skipped, anything else malformed is an error
// naming the line.
inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run file " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(e.field(), e.reason() + " (" + path.string() + ":" + std::to_string(n) + ")");
    }
  }
  return out;
}

inline void append_records(const std::vector<RunRecord>& records,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tweezerlab
