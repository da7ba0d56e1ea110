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

#include "orpipe/model.hpp"

#include <algorithm>
#include <set>

namespace orpipe {

std::string_view binding_error_kind_name(BindingErrorKind kind) {
  switch (kind) {
    case BindingErrorKind::kMissingInput: return "MissingInput";
    case BindingErrorKind::kExtraInput: return "ExtraInput";
    case BindingErrorKind::kKeyArityMismatch: return "KeyArityMismatch";
    case BindingErrorKind::kTypeMismatch: return "TypeMismatch";
    case BindingErrorKind::kDuplicateKey: return "DuplicateKey";
  }
  return "?";
}

namespace {

std::string summarize(const std::vector<BindingError>& errors) {
  std::string out = "dataset does not satisfy the model contract:";
  for (const auto& e : errors) {
    if (!e.fatal()) continue;
    out += " " + std::string(binding_error_kind_name(e.kind)) + "(" + e.input + ")";
  }
  return out;
}

}  // namespace

BindingFailure::BindingFailure(std::vector<BindingError> errors)
    : Error("BindingError", summarize(errors)), errors_(std::move(errors)) {}

bool ConcreteModel::has_integer_variables() const {
  return std::any_of(variables.begin(), variables.end(),
                     [](const Variable& v) { return v.is_integer(); });
}

AbstractModel build_abstract(const ModelDocument& doc) {
  AbstractModel model;
  model.source = doc;
  for (const auto& d : doc.input_data) {
    model.contract.push_back({d.name, d.desc, d.key, d.value});
  }
  return model;
}

std::vector<BindingError> check_contract(const AbstractModel& model, const DataSet& data) {
  std::vector<BindingError> errors;
  std::set<std::string> declared;
  for (const auto& entry : model.contract) {
    declared.insert(entry.name);
    auto it = data.inputs.find(entry.name);
    if (it == data.inputs.end()) {
      errors.push_back({entry.name, BindingErrorKind::kMissingInput,
                        "dataset has no records for '" + entry.name + "'"});
      continue;
    }
    std::set<Key> keys;
    bool arity_reported = false;
    bool type_reported = false;
    bool dup_reported = false;
    for (std::size_t r = 0; r < it->second.size(); ++r) {
      const Record& rec = it->second[r];
      std::string where = "record " + std::to_string(r);
      if (rec.key.size() != entry.key.size()) {
        if (!arity_reported) {
          errors.push_back({entry.name, BindingErrorKind::kKeyArityMismatch,
                            where + ": key has " + std::to_string(rec.key.size()) +
                                " components, contract requires " + std::to_string(entry.key.size())});
          arity_reported = true;
        }
        continue;
      }
      if (rec.value.size() != entry.value.size()) {
        if (!type_reported) {
          errors.push_back({entry.name, BindingErrorKind::kTypeMismatch,
                            where + ": value has " + std::to_string(rec.value.size()) +
                                " components, contract requires " + std::to_string(entry.value.size())});
          type_reported = true;
        }
        continue;
      }
      auto check = [&](const std::vector<Scalar>& cells, const std::vector<FieldDecl>& fields) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (!scalar_matches(cells[i], fields[i].type) && !type_reported) {
            errors.push_back({entry.name, BindingErrorKind::kTypeMismatch,
                              where + ": field '" + fields[i].name + "' expects " +
                                  std::string(scalar_type_name(fields[i].type)) + ", got '" +
                                  format_scalar(cells[i]) + "'"});
            type_reported = true;
          }
        }
      };
      check(rec.key, entry.key);
      check(rec.value, entry.value);
      if (!keys.insert(rec.key).second && !dup_reported) {
        errors.push_back({entry.name, BindingErrorKind::kDuplicateKey,
                          where + ": duplicate key (" + format_key(rec.key) + ")"});
        dup_reported = true;
      }
    }
  }
  for (const auto& [name, records] : data.inputs) {
    if (declared.count(name) == 0) {
      errors.push_back({name, BindingErrorKind::kExtraInput, "'" + name + "' is not part of the contract"});
    }
  }
  return errors;
}

DataEnv make_env(const AbstractModel& model, const DataSet& data, MissingPairPolicy policy) {
  DataEnv env;
  env.missing_pair = policy;
  for (const auto& entry : model.contract) {
    Table table(entry.key.size(), entry.value.size());
    if (auto it = data.inputs.find(entry.name); it != data.inputs.end()) {
      for (const auto& rec : it->second) table.insert(rec.key, rec.value);
    }
    env.tables.emplace(entry.name, std::move(table));
  }
  return env;
}

namespace {

[[noreturn]] void rethrow_with(const std::string& path, const Error& e) {
  throw EvalError(e.kind(), path + ": " + e.what());
}

Key to_key(const Value& v, const std::string& path) {
  Key key;
  auto push = [&](const Value& item) {
    if (const auto* d = std::get_if<double>(&item.v)) key.push_back(*d);
    else if (const auto* s = std::get_if<std::string>(&item.v)) key.push_back(*s);
    else if (const auto* b = std::get_if<bool>(&item.v)) key.push_back(*b);
    else throw EvalError("TypeError", path + ": index element " + format_value(item) + " is not a scalar key");
  };
  if (const auto* t = std::get_if<TupleValue>(&v.v)) {
    for (const auto& item : t->items) push(item);
  } else {
    push(v);
  }
  return key;
}

}  // namespace

ConcreteModel bind_data(const AbstractModel& model, const DataSet& data, const BindOptions& options) {
  std::vector<BindingError> errors = check_contract(model, data);
  if (std::any_of(errors.begin(), errors.end(), [](const BindingError& e) { return e.fatal(); })) {
    throw BindingFailure(std::move(errors));
  }
  const ModelDocument& doc = model.source;
  ConcreteModel cm;
  cm.sense = doc.objective.sense;
  cm.solver_hint = doc.solver_hint;
  for (const auto& e : errors) cm.warnings.push_back(std::string(binding_error_kind_name(e.kind)) + ": " + e.detail);
  DataEnv env = make_env(model, data, options.missing_pair);

  for (std::size_t b = 0; b < doc.variable_batches.size(); ++b) {
    const VariableBatchDecl& decl = doc.variable_batches[b];
    std::string path = "VariableBatch[" + std::to_string(b) + "].indices";
    Value indices;
    try {
      indices = eval_concrete(*parse_expr(decl.indices), env, &cm.variable_table);
    } catch (const Error& e) {
      rethrow_with(path, e);
    }
    std::vector<Value> items;
    if (const auto* list = std::get_if<ValueList>(&indices.v)) {
      items = *list;
    } else if (const auto* tuple = std::get_if<TupleValue>(&indices.v)) {
      items = tuple->items;
    } else if (const auto* view = std::get_if<TableView>(&indices.v)) {
      for (const auto& k : view->table->keys()) items.push_back(key_value(k));
    } else {
      throw EvalError("TypeError", path + ": indices must evaluate to a sequence of keys");
    }
    VariableBatch batch;
    double lower = decl.lower_bound;
    double upper = decl.upper_bound;
    if (decl.vtype == VarType::kBinary) {
      lower = std::max(lower, 0.0);
      upper = std::min(upper, 1.0);
    }
    for (const auto& item : items) {
      Key key = to_key(item, path);
      if (key.size() != decl.key.size()) {
        throw EvalError("KeyArityError", path + ": index " + format_key(key) + " has " +
                                             std::to_string(key.size()) + " components, batch '" +
                                             decl.name + "' declares " + std::to_string(decl.key.size()));
      }
      if (batch.index.count(key) != 0) {
        throw EvalError("DuplicateIndex", path + ": index " + format_key(key) + " appears twice");
      }
      Variable v;
      v.id = cm.variables.size();
      v.batch = decl.name;
      v.key = key;
      v.vtype = decl.vtype;
      v.lower = lower;
      v.upper = upper;
      batch.index.emplace(key, v.id);
      batch.keys.push_back(key);
      batch.ids.push_back(v.id);
      cm.variables.push_back(std::move(v));
    }
    if (items.empty()) cm.warnings.push_back("variable batch '" + decl.name + "' is empty");
    cm.variable_table.batches.emplace(decl.name, std::move(batch));
  }

  try {
    cm.objective = lower_affine(*parse_expr(doc.objective.constructor), env, cm.variable_table);
  } catch (const Error& e) {
    rethrow_with("Objective.constructor", e);
  }

  for (std::size_t c = 0; c < doc.constraint_batches.size(); ++c) {
    const ConstraintBatchDecl& decl = doc.constraint_batches[c];
    std::string path = "ConstraintBatch[" + std::to_string(c) + "].generator";
    std::vector<GeneratedConstraint> generated;
    try {
      generated = expand_constraints(decl.name, *parse_expr(decl.generator), env, cm.variable_table);
    } catch (const Error& e) {
      rethrow_with(path, e);
    }
    if (generated.empty()) cm.warnings.push_back("constraint batch '" + decl.name + "' generated no constraints");
    for (auto& g : generated) {
      if (cm.provenance.count(g.constraint.name) != 0) {
        throw EvalError("DuplicateConstraint", path + ": constraint name " + g.constraint.name + " is generated twice");
      }
      cm.provenance.emplace(g.constraint.name, Provenance{decl.name, std::move(g.binding)});
      cm.constraints.push_back(std::move(g.constraint));
    }
  }
  return cm;
}

}  // namespace orpipe
