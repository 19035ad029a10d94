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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "tweezerlab/errors.hpp"
#include "tweezerlab/params.hpp"
#include "tweezerlab/protocol.hpp"

namespace tweezerlab {

using json = nlohmann::json;

// {"duration": T, "steps": [{"x": .., "amp": ..}, ...], "meta": {"k": "v"}}
// A pinned first step is recorded as meta.first_step_fixed = "true".
inline json protocol_to_json(const Protocol& p) {
  json steps = json::array();
  for (const auto& s : p.steps) steps.push_back({{"x", s.position}, {"amp", s.amplitude}});
  json meta = json::object();
  for (const auto& [k, v] : p.meta) meta[k] = v;
  if (p.first_step_fixed) meta["first_step_fixed"] = "true";
  return {{"duration", p.duration}, {"steps", std::move(steps)}, {"meta", std::move(meta)}};
}

namespace detail {

inline double number_field(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, "missing field");
  if (!it->is_number()) throw SchemaError(path, "must be a number");
  return it->get<double>();
}

}  // namespace detail

// Schema check only; bounds are checked by validate() against PhysicsParams.
inline Protocol protocol_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "protocol must be a JSON object");
  Protocol p;
  p.duration = detail::number_field(doc, "duration", "duration");
  const auto steps = doc.find("steps");
  if (steps == doc.end()) throw SchemaError("steps", "missing field");
  if (!steps->is_array()) throw SchemaError("steps", "must be an array");
  for (std::size_t k = 0; k < steps->size(); ++k) {
    const json& s = (*steps)[k];
    if (!s.is_object()) throw SchemaError("steps[" + std::to_string(k) + "]", "must be an object");
    p.steps.push_back({detail::number_field(s, "x", step_field(k, "x")),
                       detail::number_field(s, "amp", step_field(k, "amp"))});
  }
  if (const auto meta = doc.find("meta"); meta != doc.end()) {
    if (!meta->is_object()) throw SchemaError("meta", "must be an object of strings");
    for (const auto& [k, v] : meta->items()) {
      if (!v.is_string()) throw SchemaError("meta." + k, "must be a string");
      if (k == "first_step_fixed")
        p.first_step_fixed = v.get<std::string>() == "true";
      else
        p.meta[k] = v.get<std::string>();
    }
  }
  return p;
}

inline Protocol parse_protocol(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed protocol JSON: ") + e.what());
  }
  return protocol_from_json(doc);
}

inline Protocol load_protocol(const std::filesystem::path& path,
                              const PhysicsParams& params = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open protocol file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Protocol p = parse_protocol(buf.str());
  validate(p, params);
  return p;
}

inline void save_protocol(const Protocol& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write protocol file " + path.string());
  out << protocol_to_json(p).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tweezerlab
