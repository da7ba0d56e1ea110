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

#include "orpipe/common.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace orpipe {

std::optional<ScalarType> parse_scalar_type(std::string_view name) {
  if (name == "str") return ScalarType::kStr;
  if (name == "int" || name == "integer") return ScalarType::kInt;
  if (name == "float") return ScalarType::kFloat;
  if (name == "bool") return ScalarType::kBool;
  return std::nullopt;
}

std::string_view scalar_type_name(ScalarType type) {
  switch (type) {
    case ScalarType::kStr: return "str";
    case ScalarType::kInt: return "int";
    case ScalarType::kFloat: return "float";
    case ScalarType::kBool: return "bool";
  }
  return "str";
}

bool scalar_matches(const Scalar& value, ScalarType type) {
  switch (type) {
    case ScalarType::kStr: return std::holds_alternative<std::string>(value);
    case ScalarType::kBool: return std::holds_alternative<bool>(value);
    case ScalarType::kFloat: return std::holds_alternative<double>(value);
    case ScalarType::kInt: {
      const double* d = std::get_if<double>(&value);
      return d != nullptr && std::isfinite(*d) && std::floor(*d) == *d;
    }
  }
  return false;
}

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";
  if (std::floor(value) == value && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::string format_scalar(const Scalar& value) {
  if (const auto* d = std::get_if<double>(&value)) return format_number(*d);
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  return std::get<std::string>(value);
}

std::string format_key(const Key& key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i > 0) out += ',';
    out += format_scalar(key[i]);
  }
  return out;
}

std::string display_name(std::string_view batch, const Key& key) {
  std::string out(batch);
  out += '[';
  out += format_key(key);
  out += ']';
  return out;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto head = static_cast<unsigned char>(text[0]);
  if (!std::isalpha(head) && head != '_') return false;
  for (char c : text.substr(1)) {
    auto u = static_cast<unsigned char>(c);
    if (!std::isalnum(u) && u != '_') return false;
  }
  return true;
}

std::optional<double> parse_extended_real(std::string_view text) {
  std::string t = trim(text);
  if (t == "inf" || t == "+inf" || t == ".inf" || t == "+.inf" ||
      t == "Infinity" || t == "infinity" || t == ".Inf" || t == ".INF") {
    return std::numeric_limits<double>::infinity();
  }
  if (t == "-inf" || t == "-.inf" || t == "-Infinity" || t == "-infinity" ||
      t == "-.Inf" || t == "-.INF") {
    return -std::numeric_limits<double>::infinity();
  }
  if (t.empty()) return std::nullopt;
  std::string_view body = t;
  if (body.front() == '+') body.remove_prefix(1);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), out);
  if (ec != std::errc() || ptr != body.data() + body.size()) return std::nullopt;
  return out;
}

std::string trim(std::string_view text) {
  const char* ws = " \t\r\n";
  auto begin = text.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  auto end = text.find_last_not_of(ws);
  return std::string(text.substr(begin, end - begin + 1));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write " + path);
  out << contents;
}

}  // namespace orpipe
