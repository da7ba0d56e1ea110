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
#include <string>
#include <string_view>
#include <vector>

#include "orpipe/dsl_schema.hpp"

namespace orpipe {

enum class CorrectionKind { kPropertyNameFixed, kEnumValueFixed, kExpressionRepaired, kFenceStripped };
std::string_view correction_kind_name(CorrectionKind kind);

struct Correction {
  std::string path;
  CorrectionKind kind;
  std::string before;
  std::string after;
};

struct AutocorrectResult {
  std::string text;
  std::vector<Correction> corrections;
};

// Deterministic syntax repair of raw generator output, in this order:
//  1. strip a markdown code fence;
//  2. replace mapping keys within Levenshtein distance 1 (case-insensitive)
//     of exactly one keyword allowed at that position;
//  3. the same rule for `sense` and `vtype` values;
//  4. strip trailing semicolons from expressions and close a single missing
//     parenthesis at the end.
// Steps 2-4 need the text to load as YAML; otherwise only step 1 applies.
AutocorrectResult autocorrect(std::string_view raw);

std::size_t edit_distance(std::string_view a, std::string_view b);

enum class SemanticErrorKind { kRedefinedVariable, kUndefinedVariable, kUnparseableExpression };
std::string_view semantic_error_kind_name(SemanticErrorKind kind);

struct SemanticError {
  SemanticErrorKind kind;
  std::string name;
  std::vector<std::string> locations;
  std::string message;
};

std::vector<SemanticError> detect_redefinitions(const ModelDocument& doc);

// Also reports expressions that fail to parse, or whose shape does not fit
// their field (a constraint generator that is not a comparison, etc).
std::vector<SemanticError> detect_undefined(const ModelDocument& doc);

enum class Verdict { kValid, kRepaired, kIrreparable };
std::string_view verdict_name(Verdict verdict);

struct ValidationReport {
  std::vector<Correction> corrections;
  std::vector<SchemaViolation> violations;
  std::vector<SemanticError> semantic_errors;
  Verdict verdict = Verdict::kIrreparable;
  std::string corrected_text;
  std::optional<ModelDocument> document;  // present unless Irreparable
};

ValidationReport validate_pipeline(std::string_view raw);

}  // namespace orpipe
