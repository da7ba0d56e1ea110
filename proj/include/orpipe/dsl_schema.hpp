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

// Typed model document: the YAML grammar with top-level InputData,
// VariableBatch, Objective, ConstraintBatch and an optional Solver hint.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orpipe/common.hpp"

namespace orpipe {

struct FieldDecl {
  std::string name;
  ScalarType type = ScalarType::kStr;
  // Original spelling ("int" vs "integer"); not part of equality.
  std::string type_spelling;

  friend bool operator==(const FieldDecl& a, const FieldDecl& b) {
    return a.name == b.name && a.type == b.type;
  }
};

struct InputDataDecl {
  std::string name;
  std::string desc;
  std::vector<FieldDecl> key;
  std::vector<FieldDecl> value;
  friend bool operator==(const InputDataDecl&, const InputDataDecl&) = default;
};

enum class VarType { kContinuous, kInteger, kBinary };
char vtype_letter(VarType t);

struct VariableBatchDecl {
  std::string name;
  std::string desc;
  std::vector<FieldDecl> key;
  std::vector<FieldDecl> value;
  std::string indices;
  VarType vtype = VarType::kContinuous;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  friend bool operator==(const VariableBatchDecl&, const VariableBatchDecl&) = default;
};

enum class Sense { kMin, kMax };

struct ObjectiveDecl {
  std::string desc;
  std::string constructor;
  Sense sense = Sense::kMin;
  friend bool operator==(const ObjectiveDecl&, const ObjectiveDecl&) = default;
};

struct ConstraintBatchDecl {
  std::string name;
  std::string desc;
  std::string generator;
  friend bool operator==(const ConstraintBatchDecl&, const ConstraintBatchDecl&) = default;
};

// Values accepted for the top-level `Solver` property.
inline constexpr std::string_view kSolverHints[] = {"lp", "milp", "auto"};

struct ModelDocument {
  // Kept as a sequence so duplicate names survive parsing for the
  // redefinition check; equality ignores order.
  std::vector<InputDataDecl> input_data;
  std::vector<VariableBatchDecl> variable_batches;
  ObjectiveDecl objective;
  std::vector<ConstraintBatchDecl> constraint_batches;
  std::optional<std::string> solver_hint;

  const InputDataDecl* find_input(std::string_view name) const;
  const VariableBatchDecl* find_batch(std::string_view name) const;

  friend bool operator==(const ModelDocument& a, const ModelDocument& b);
};

enum class ViolationKind {
  kUnknownProperty,
  kMissingProperty,
  kWrongType,
  kBadEnumValue,
  kInvalidYaml,
  // Report schema only.
  kUnknownVariable,
  kUnknownBinding,
  kMissingPrimaryKey,
};
std::string_view violation_kind_name(ViolationKind kind);

struct SchemaViolation {
  std::string path;
  ViolationKind kind;
  std::string message;
};

struct ParsedDocument {
  std::optional<ModelDocument> document;
  std::vector<SchemaViolation> violations;

  bool ok() const { return document.has_value(); }
};

// Collects every violation rather than stopping at the first one.
ParsedDocument parse_model_yaml(std::string_view text);

// Emission order: InputData, VariableBatch, Objective, ConstraintBatch, Solver.
std::string serialize_model_yaml(const ModelDocument& doc);

enum class ChangeKind { kAdded, kRemoved, kChanged, kReordered };
std::string_view change_kind_name(ChangeKind kind);

struct DocumentChange {
  std::string path;
  ChangeKind kind;
  std::string before;
  std::string after;
};

// Batches are matched by name: field changes appear at
// `ConstraintBatch[<name>].generator`, insertions at `ConstraintBatch[<index>]`.
std::vector<DocumentChange> diff_documents(const ModelDocument& a, const ModelDocument& b);

// Inverse of diff_documents: apply_diff(a, diff_documents(a, b)) == b.
ModelDocument apply_diff(const ModelDocument& a, const std::vector<DocumentChange>& changes);

}  // namespace orpipe
