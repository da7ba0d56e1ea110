// Copyright 2026 The orpipe Authors
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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orpipe {

// A data cell. Numbers are always 64-bit floats; integral values print
// without a fractional part.
using Scalar = std::variant<double, std::string, bool>;

// Composite key of a data table or a variable batch.
using Key = std::vector<Scalar>;

enum class ScalarType { kStr, kInt, kFloat, kBool };

// Accepts str, int, integer, float, bool.
std::optional<ScalarType> parse_scalar_type(std::string_view name);
std::string_view scalar_type_name(ScalarType type);
bool scalar_matches(const Scalar& value, ScalarType type);

// Shortest round-trip representation; integral doubles print as integers,
// infinities as inf / -inf.
std::string format_number(double value);
std::string format_scalar(const Scalar& value);

// "a,b" for multi-component keys; single components print bare.
std::string format_key(const Key& key);

// `batch[key1,key2]`
std::string display_name(std::string_view batch, const Key& key);

bool is_identifier(std::string_view text);

// Parses inf / -inf / .inf and plain decimal literals; nullopt otherwise.
std::optional<double> parse_extended_real(std::string_view text);

std::string trim(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Base for every error raised by the library. `kind()` is the machine
// readable name used in CLI stderr and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace orpipe
