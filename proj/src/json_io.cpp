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

#include "orpipe/json_io.hpp"

#include <cmath>

namespace orpipe {

using nlohmann::json;

namespace {

Scalar scalar_from_json(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  throw Error("BadDataSet", where + ": expected a string, number or bool");
}

std::vector<Scalar> tuple_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error("BadDataSet", where + ": expected an array");
  std::vector<Scalar> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(scalar_from_json(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// JSON has no infinity, so unbounded values travel as strings.
json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

DataSet dataset_from_json(const json& j) {
  if (!j.is_object()) throw Error("BadDataSet", "a dataset must be a JSON object");
  DataSet data;
  for (const auto& [name, records] : j.items()) {
    if (!records.is_array()) throw Error("BadDataSet", name + ": expected an array of records");
    auto& out = data.inputs[name];
    for (std::size_t i = 0; i < records.size(); ++i) {
      const json& r = records[i];
      std::string where = name + "[" + std::to_string(i) + "]";
      if (!r.is_object() || !r.contains("key") || !r.contains("value")) {
        throw Error("BadDataSet", where + ": a record needs 'key' and 'value'");
      }
      for (const auto& [field, unused] : r.items()) {
        if (field != "key" && field != "value") throw Error("BadDataSet", where + ": unknown field '" + field + "'");
      }
      out.push_back({tuple_from_json(r["key"], where + ".key"), tuple_from_json(r["value"], where + ".value")});
    }
  }
  return data;
}

DataSet parse_dataset_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("BadDataSet", std::string("invalid JSON: ") + e.what());
  }
  return dataset_from_json(j);
}

json scalar_to_json(const Scalar& s) {
  if (const auto* d = std::get_if<double>(&s)) return number_to_json(*d);
  if (const auto* b = std::get_if<bool>(&s)) return *b;
  return std::get<std::string>(s);
}

json dataset_to_json(const DataSet& data) {
  json out = json::object();
  for (const auto& [name, records] : data.inputs) {
    json arr = json::array();
    for (const auto& r : records) {
      json key = json::array();
      json value = json::array();
      for (const auto& k : r.key) key.push_back(scalar_to_json(k));
      for (const auto& v : r.value) value.push_back(scalar_to_json(v));
      arr.push_back({{"key", key}, {"value", value}});
    }
    out[name] = arr;
  }
  return out;
}

json violations_to_json(const std::vector<SchemaViolation>& violations) {
  json out = json::array();
  for (const auto& v : violations) {
    out.push_back({{"path", v.path}, {"kind", violation_kind_name(v.kind)}, {"message", v.message}});
  }
  return out;
}

json report_to_json(const ValidationReport& report) {
  json corrections = json::array();
  for (const auto& c : report.corrections) {
    corrections.push_back({{"path", c.path},
                           {"kind", correction_kind_name(c.kind)},
                           {"before", c.before},
                           {"after", c.after}});
  }
  json violations = violations_to_json(report.violations);
  json semantic = json::array();
  for (const auto& e : report.semantic_errors) {
    semantic.push_back({{"kind", semantic_error_kind_name(e.kind)},
                        {"name", e.name},
                        {"locations", e.locations},
                        {"message", e.message}});
  }
  return {{"verdict", verdict_name(report.verdict)},
          {"corrections", corrections},
          {"violations", violations},
          {"semantic_errors", semantic}};
}

json diff_to_json(const std::vector<DocumentChange>& changes) {
  json out = json::array();
  for (const auto& c : changes) {
    out.push_back({{"path", c.path}, {"kind", change_kind_name(c.kind)}, {"before", c.before}, {"after", c.after}});
  }
  return out;
}

json binding_errors_to_json(const std::vector<BindingError>& errors) {
  json out = json::array();
  for (const auto& e : errors) {
    out.push_back({{"input", e.input},
                   {"kind", binding_error_kind_name(e.kind)},
                   {"detail", e.detail},
                   {"fatal", e.fatal()}});
  }
  return out;
}

json outcome_to_json(const SolveOutcome& outcome, const ConcreteModel& model) {
  json out = {{"status", status_name(outcome.status)},
              {"logs", outcome.logs},
              {"stats",
               {{"iterations", outcome.stats.iterations},
                {"nodes", outcome.stats.nodes},
                {"wall_seconds", outcome.stats.wall_seconds}}}};
  if (outcome.choice) {
    out["solver"] = {{"backend", backend_name(outcome.choice->backend)}, {"origin", origin_name(outcome.choice->origin)}};
  }
  if (outcome.has_assignment()) {
    out["objective"] = number_to_json(outcome.objective);
    json assignment = json::object();
    for (std::size_t i = 0; i < outcome.assignment.size() && i < model.variables.size(); ++i) {
      assignment[model.variables[i].display()] = number_to_json(outcome.assignment[i]);
    }
    out["assignment"] = assignment;
  } else {
    out["objective"] = nullptr;
  }
  return out;
}

}  // namespace orpipe
