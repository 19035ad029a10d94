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

#include <stdexcept>
#include <string>

namespace tweezerlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration (preconditions).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Eigensolver failure, degenerate ground state and similar.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A precomputation would exceed the configured memory cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Protocol documents: malformed JSON, missing fields and out-of-bounds values
// are distinct so that callers (the scoring service in particular) can report
// them precisely.
class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string field, std::string what)
      : Error(field + ": " + what), field_(std::move(field)), reason_(std::move(what)) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class BoundsError : public Error {
 public:
  BoundsError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace tweezerlab
