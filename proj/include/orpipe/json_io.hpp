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

// JSON wire forms shared by the CLI, the service and the eval harness.
#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "orpipe/dsl_schema.hpp"
#include "orpipe/model.hpp"
#include "orpipe/solver.hpp"
#include "orpipe/validator.hpp"

namespace orpipe {

// {"<input>": [{"key": [..], "value": [..]}, ...], ...}
// Throws Error("BadDataSet") on any other shape.
DataSet dataset_from_json(const nlohmann::json& j);
DataSet parse_dataset_json(std::string_view text);
nlohmann::json dataset_to_json(const DataSet& data);

nlohmann::json scalar_to_json(const Scalar& s);

nlohmann::json violations_to_json(const std::vector<SchemaViolation>& violations);

// {verdict, corrections[], violations[], semantic_errors[]}
nlohmann::json report_to_json(const ValidationReport& report);

nlohmann::json diff_to_json(const std::vector<DocumentChange>& changes);

nlohmann::json binding_errors_to_json(const std::vector<BindingError>& errors);

// {status, objective, assignment{name: value}, logs[], stats{}, solver{}}.
// The assignment is omitted when the outcome has none.
nlohmann::json outcome_to_json(const SolveOutcome& outcome, const ConcreteModel& model);

}  // namespace orpipe
