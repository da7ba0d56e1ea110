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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orpipe/dsl_schema.hpp"
#include "orpipe/expr.hpp"

namespace orpipe {

struct ContractEntry {
  std::string name;
  std::string desc;
  std::vector<FieldDecl> key;
  std::vector<FieldDecl> value;
};

// A validated document plus the data it requires. The contract mirrors the
// InputData section in declaration order.
struct AbstractModel {
  ModelDocument source;
  std::vector<ContractEntry> contract;
};

AbstractModel build_abstract(const ModelDocument& doc);

struct Record {
  Key key;
  std::vector<Scalar> value;
};

struct DataSet {
  std::map<std::string, std::vector<Record>> inputs;
};

enum class BindingErrorKind { kMissingInput, kExtraInput, kKeyArityMismatch, kTypeMismatch, kDuplicateKey };
std::string_view binding_error_kind_name(BindingErrorKind kind);

struct BindingError {
  std::string input;
  BindingErrorKind kind;
  std::string detail;

  // ExtraInput is a warning; everything else blocks binding.
  bool fatal() const { return kind != BindingErrorKind::kExtraInput; }
};

std::vector<BindingError> check_contract(const AbstractModel& model, const DataSet& data);

class BindingFailure : public Error {
 public:
  explicit BindingFailure(std::vector<BindingError> errors);
  const std::vector<BindingError>& errors() const { return errors_; }

 private:
  std::vector<BindingError> errors_;
};

struct Variable {
  VarId id = 0;
  std::string batch;
  Key key;
  VarType vtype = VarType::kContinuous;
  double lower = 0.0;
  double upper = 0.0;

  std::string display() const { return display_name(batch, key); }
  bool is_integer() const { return vtype != VarType::kContinuous; }
};

struct Provenance {
  std::string batch;
  Bindings binding;
};

struct ConcreteModel {
  std::vector<Variable> variables;  // ids are dense 0..n-1
  AffineExpr objective;
  Sense sense = Sense::kMin;
  std::vector<AffineConstraint> constraints;
  std::map<std::string, Provenance> provenance;
  std::optional<std::string> solver_hint;
  std::vector<std::string> warnings;
  VariableTable variable_table;

  bool has_integer_variables() const;
};

struct BindOptions {
  MissingPairPolicy missing_pair = MissingPairPolicy::kError;
};

// Throws BindingFailure when the contract check reports fatal errors and
// EvalError (prefixed with the document path) when an expression fails.
ConcreteModel bind_data(const AbstractModel& model, const DataSet& data,
                        const BindOptions& options = {});

// Tables for every contract entry present in `data`.
DataEnv make_env(const AbstractModel& model, const DataSet& data,
                 MissingPairPolicy policy = MissingPairPolicy::kError);

}  // namespace orpipe
