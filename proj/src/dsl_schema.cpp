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

#include "orpipe/dsl_schema.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>

namespace orpipe {

char vtype_letter(VarType t) {
  switch (t) {
    case VarType::kContinuous: return 'C';
    case VarType::kInteger: return 'I';
    case VarType::kBinary: return 'B';
  }
  return 'C';
}

std::string_view violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kUnknownProperty: return "UnknownProperty";
    case ViolationKind::kMissingProperty: return "MissingProperty";
    case ViolationKind::kWrongType: return "WrongType";
    case ViolationKind::kBadEnumValue: return "BadEnumValue";
    case ViolationKind::kInvalidYaml: return "InvalidYaml";
    case ViolationKind::kUnknownVariable: return "UnknownVariable";
    case ViolationKind::kUnknownBinding: return "UnknownBinding";
    case ViolationKind::kMissingPrimaryKey: return "MissingPrimaryKey";
  }
  return "?";
}

std::string_view change_kind_name(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::kAdded: return "Added";
    case ChangeKind::kRemoved: return "Removed";
    case ChangeKind::kChanged: return "Changed";
    case ChangeKind::kReordered: return "Reordered";
  }
  return "?";
}

const InputDataDecl* ModelDocument::find_input(std::string_view name) const {
  for (const auto& d : input_data) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

const VariableBatchDecl* ModelDocument::find_batch(std::string_view name) const {
  for (const auto& b : variable_batches) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

bool operator==(const ModelDocument& a, const ModelDocument& b) {
  auto sorted = [](std::vector<InputDataDecl> v) {
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& x, const auto& y) { return x.name < y.name; });
    return v;
  };
  return sorted(a.input_data) == sorted(b.input_data) &&
         a.variable_batches == b.variable_batches && a.objective == b.objective &&
         a.constraint_batches == b.constraint_batches && a.solver_hint == b.solver_hint;
}

namespace {

constexpr std::string_view kTopKeys[] = {"InputData", "VariableBatch", "Objective",
                                         "ConstraintBatch", "Solver"};
constexpr std::string_view kInputKeys[] = {"desc", "key", "value"};
constexpr std::string_view kBatchKeys[] = {"desc", "name", "key", "value", "indices",
                                           "vtype", "lower_bound", "upper_bound"};
constexpr std::string_view kObjectiveKeys[] = {"desc", "constructor", "sense"};
constexpr std::string_view kConstraintKeys[] = {"desc", "name", "generator"};

template <std::size_t N>
bool contains(const std::string_view (&set)[N], std::string_view key) {
  return std::find(std::begin(set), std::end(set), key) != std::end(set);
}

class DocParser {
 public:
  std::vector<SchemaViolation> violations;

  void add(std::string path, ViolationKind kind, std::string message) {
    violations.push_back({std::move(path), kind, std::move(message)});
  }

  template <std::size_t N>
  void check_keys(const YAML::Node& map, const std::string& path,
                  const std::string_view (&allowed)[N], std::initializer_list<std::string_view> required) {
    for (const auto& kv : map) {
      std::string key = kv.first.IsScalar() ? kv.first.Scalar() : std::string("?");
      if (!contains(allowed, key)) {
        add(join(path, key), ViolationKind::kUnknownProperty, "unknown property '" + key + "'");
      }
    }
    for (std::string_view r : required) {
      if (!map[std::string(r)]) {
        add(join(path, r), ViolationKind::kMissingProperty,
            "missing required property '" + std::string(r) + "'");
      }
    }
  }

  static std::string join(const std::string& path, std::string_view key) {
    if (path.empty()) return std::string(key);
    return path + "." + std::string(key);
  }

  std::optional<std::string> scalar(const YAML::Node& node, const std::string& path) {
    if (!node) return std::nullopt;
    if (node.IsNull()) return std::string();
    if (!node.IsScalar()) {
      add(path, ViolationKind::kWrongType, "expected a scalar");
      return std::nullopt;
    }
    return node.Scalar();
  }

  std::string text_field(const YAML::Node& map, const std::string& path, const char* key) {
    return scalar(map[key], join(path, key)).value_or("");
  }

  std::string name_field(const YAML::Node& map, const std::string& path) {
    auto name = scalar(map["name"], join(path, "name"));
    if (name && !is_identifier(*name)) {
      add(join(path, "name"), ViolationKind::kWrongType, "'" + *name + "' is not a valid identifier");
    }
    return name.value_or("");
  }

  std::vector<FieldDecl> fields(const YAML::Node& node, const std::string& path) {
    std::vector<FieldDecl> out;
    if (!node) return out;
    if (!node.IsSequence() || node.size() == 0) {
      add(path, ViolationKind::kWrongType, "expected a non-empty list of '<field>: <type>' entries");
      return out;
    }
    for (std::size_t i = 0; i < node.size(); ++i) {
      std::string item_path = path + "[" + std::to_string(i) + "]";
      const YAML::Node& item = node[i];
      if (!item.IsMap() || item.size() != 1) {
        add(item_path, ViolationKind::kWrongType, "expected a single '<field>: <type>' pair");
        continue;
      }
      auto it = item.begin();
      FieldDecl f;
      f.name = it->first.IsScalar() ? it->first.Scalar() : "";
      if (!is_identifier(f.name)) {
        add(item_path, ViolationKind::kWrongType, "'" + f.name + "' is not a valid field name");
      }
      if (!it->second.IsScalar()) {
        add(item_path + "." + f.name, ViolationKind::kWrongType, "field type must be a scalar");
        continue;
      }
      f.type_spelling = it->second.Scalar();
      auto type = parse_scalar_type(f.type_spelling);
      if (!type) {
        add(item_path + "." + f.name, ViolationKind::kBadEnumValue,
            "'" + f.type_spelling + "' is not one of str, int, integer, float, bool");
        continue;
      }
      f.type = *type;
      out.push_back(std::move(f));
    }
    return out;
  }

  double bound(const YAML::Node& map, const std::string& path, const char* key) {
    auto text = scalar(map[key], join(path, key));
    if (!text) return 0.0;
    auto value = parse_extended_real(*text);
    if (!value) {
      add(join(path, key), ViolationKind::kWrongType, "'" + *text + "' is not a number, inf or -inf");
      return 0.0;
    }
    return *value;
  }

  InputDataDecl input(const std::string& name, const YAML::Node& node, const std::string& path) {
    InputDataDecl d;
    d.name = name;
    if (!is_identifier(name)) {
      add(path, ViolationKind::kWrongType, "'" + name + "' is not a valid identifier");
    }
    if (!node.IsMap()) {
      add(path, ViolationKind::kWrongType, "expected a mapping with desc/key/value");
      return d;
    }
    check_keys(node, path, kInputKeys, {"desc", "key", "value"});
    d.desc = text_field(node, path, "desc");
    d.key = fields(node["key"], join(path, "key"));
    d.value = fields(node["value"], join(path, "value"));
    return d;
  }

  VariableBatchDecl batch(const YAML::Node& node, const std::string& path) {
    VariableBatchDecl d;
    if (!node.IsMap()) {
      add(path, ViolationKind::kWrongType, "expected a mapping");
      return d;
    }
    check_keys(node, path, kBatchKeys,
               {"desc", "name", "key", "value", "indices", "vtype", "lower_bound", "upper_bound"});
    d.desc = text_field(node, path, "desc");
    d.name = name_field(node, path);
    d.key = fields(node["key"], join(path, "key"));
    d.value = fields(node["value"], join(path, "value"));
    d.indices = text_field(node, path, "indices");
    if (auto v = scalar(node["vtype"], join(path, "vtype"))) {
      if (*v == "C") d.vtype = VarType::kContinuous;
      else if (*v == "I") d.vtype = VarType::kInteger;
      else if (*v == "B") d.vtype = VarType::kBinary;
      else add(join(path, "vtype"), ViolationKind::kBadEnumValue, "'" + *v + "' is not one of C, I, B");
    }
    d.lower_bound = bound(node, path, "lower_bound");
    d.upper_bound = bound(node, path, "upper_bound");
    if (node["lower_bound"] && node["upper_bound"] && d.lower_bound > d.upper_bound) {
      add(join(path, "lower_bound"), ViolationKind::kWrongType, "lower_bound exceeds upper_bound");
    }
    return d;
  }

  ObjectiveDecl objective(const YAML::Node& node, const std::string& path) {
    ObjectiveDecl d;
    if (!node.IsMap()) {
      add(path, ViolationKind::kWrongType, "expected a mapping with desc/constructor/sense");
      return d;
    }
    check_keys(node, path, kObjectiveKeys, {"desc", "constructor", "sense"});
    d.desc = text_field(node, path, "desc");
    d.constructor = text_field(node, path, "constructor");
    if (auto s = scalar(node["sense"], join(path, "sense"))) {
      if (*s == "min") d.sense = Sense::kMin;
      else if (*s == "max") d.sense = Sense::kMax;
      else add(join(path, "sense"), ViolationKind::kBadEnumValue, "'" + *s + "' is not one of min, max");
    }
    return d;
  }

  ConstraintBatchDecl constraint(const YAML::Node& node, const std::string& path) {
    ConstraintBatchDecl d;
    if (!node.IsMap()) {
      add(path, ViolationKind::kWrongType, "expected a mapping");
      return d;
    }
    check_keys(node, path, kConstraintKeys, {"desc", "name", "generator"});
    d.desc = text_field(node, path, "desc");
    d.name = name_field(node, path);
    d.generator = text_field(node, path, "generator");
    return d;
  }

  ModelDocument document(const YAML::Node& root) {
    ModelDocument doc;
    check_keys(root, "", kTopKeys, {"InputData", "VariableBatch", "Objective", "ConstraintBatch"});
    if (const YAML::Node inputs = root["InputData"]; inputs && !inputs.IsNull()) {
      if (!inputs.IsMap()) {
        add("InputData", ViolationKind::kWrongType, "expected a mapping of input name to declaration");
      } else {
        for (const auto& kv : inputs) {
          std::string name = kv.first.IsScalar() ? kv.first.Scalar() : "";
          doc.input_data.push_back(input(name, kv.second, "InputData." + name));
        }
      }
    }
    if (const YAML::Node batches = root["VariableBatch"]; batches && !batches.IsNull()) {
      if (!batches.IsSequence()) {
        add("VariableBatch", ViolationKind::kWrongType, "expected a list");
      } else {
        for (std::size_t i = 0; i < batches.size(); ++i) {
          doc.variable_batches.push_back(batch(batches[i], "VariableBatch[" + std::to_string(i) + "]"));
        }
      }
    }
    if (const YAML::Node obj = root["Objective"]) {
      doc.objective = objective(obj, "Objective");
    }
    if (const YAML::Node cons = root["ConstraintBatch"]; cons && !cons.IsNull()) {
      if (!cons.IsSequence()) {
        add("ConstraintBatch", ViolationKind::kWrongType, "expected a list");
      } else {
        for (std::size_t i = 0; i < cons.size(); ++i) {
          doc.constraint_batches.push_back(
              constraint(cons[i], "ConstraintBatch[" + std::to_string(i) + "]"));
        }
      }
    }
    if (const YAML::Node hint = root["Solver"]) {
      if (auto s = scalar(hint, "Solver")) {
        if (contains(kSolverHints, *s)) {
          doc.solver_hint = *s;
        } else {
          add("Solver", ViolationKind::kBadEnumValue, "'" + *s + "' is not one of lp, milp, auto");
        }
      }
    }
    return doc;
  }
};

YAML::Node load(std::string_view text) { return YAML::Load(std::string(text)); }

// ---------------------------------------------------------------------------
// Emission

std::string field_type_text(const FieldDecl& f) {
  return f.type_spelling.empty() ? std::string(scalar_type_name(f.type)) : f.type_spelling;
}

void emit_fields(YAML::Emitter& out, const std::vector<FieldDecl>& fields) {
  out << YAML::BeginSeq;
  for (const auto& f : fields) {
    out << YAML::BeginMap << YAML::Key << f.name << YAML::Value << field_type_text(f) << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

void emit_input_body(YAML::Emitter& out, const InputDataDecl& d) {
  out << YAML::BeginMap;
  out << YAML::Key << "desc" << YAML::Value << d.desc;
  out << YAML::Key << "key" << YAML::Value;
  emit_fields(out, d.key);
  out << YAML::Key << "value" << YAML::Value;
  emit_fields(out, d.value);
  out << YAML::EndMap;
}

void emit_batch(YAML::Emitter& out, const VariableBatchDecl& d) {
  out << YAML::BeginMap;
  out << YAML::Key << "desc" << YAML::Value << d.desc;
  out << YAML::Key << "name" << YAML::Value << d.name;
  out << YAML::Key << "key" << YAML::Value;
  emit_fields(out, d.key);
  out << YAML::Key << "value" << YAML::Value;
  emit_fields(out, d.value);
  out << YAML::Key << "indices" << YAML::Value << d.indices;
  out << YAML::Key << "vtype" << YAML::Value << std::string(1, vtype_letter(d.vtype));
  out << YAML::Key << "lower_bound" << YAML::Value << format_number(d.lower_bound);
  out << YAML::Key << "upper_bound" << YAML::Value << format_number(d.upper_bound);
  out << YAML::EndMap;
}

void emit_objective(YAML::Emitter& out, const ObjectiveDecl& d) {
  out << YAML::BeginMap;
  out << YAML::Key << "desc" << YAML::Value << d.desc;
  out << YAML::Key << "constructor" << YAML::Value << d.constructor;
  out << YAML::Key << "sense" << YAML::Value << (d.sense == Sense::kMin ? "min" : "max");
  out << YAML::EndMap;
}

void emit_constraint(YAML::Emitter& out, const ConstraintBatchDecl& d) {
  out << YAML::BeginMap;
  out << YAML::Key << "desc" << YAML::Value << d.desc;
  out << YAML::Key << "name" << YAML::Value << d.name;
  out << YAML::Key << "generator" << YAML::Value << d.generator;
  out << YAML::EndMap;
}

template <typename Fn>
std::string emit_string(Fn&& fn) {
  YAML::Emitter out;
  fn(out);
  return out.c_str();
}

std::string fields_text(const std::vector<FieldDecl>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ", ";
    out += fields[i].name + ": " + field_type_text(fields[i]);
  }
  return out;
}

std::vector<FieldDecl> parse_fields_text(const std::string& text) {
  std::vector<FieldDecl> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(", ", start);
    if (end == std::string::npos) end = text.size();
    std::string part = text.substr(start, end - start);
    auto colon = part.find(": ");
    FieldDecl f;
    f.name = part.substr(0, colon);
    f.type_spelling = colon == std::string::npos ? "str" : part.substr(colon + 2);
    f.type = parse_scalar_type(f.type_spelling).value_or(ScalarType::kStr);
    out.push_back(std::move(f));
    start = end + 2;
  }
  return out;
}

}  // namespace

ParsedDocument parse_model_yaml(std::string_view text) {
  ParsedDocument result;
  YAML::Node root;
  try {
    root = load(text);
  } catch (const YAML::Exception& e) {
    result.violations.push_back({"", ViolationKind::kInvalidYaml, e.what()});
    return result;
  }
  if (!root.IsMap()) {
    result.violations.push_back({"", ViolationKind::kWrongType, "document must be a mapping"});
    return result;
  }
  DocParser parser;
  ModelDocument doc = parser.document(root);
  result.violations = std::move(parser.violations);
  if (result.violations.empty()) result.document = std::move(doc);
  return result;
}

std::string serialize_model_yaml(const ModelDocument& doc) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "InputData" << YAML::Value;
  if (doc.input_data.empty()) {
    out << YAML::Flow << YAML::BeginMap << YAML::EndMap;
  } else {
    out << YAML::BeginMap;
    for (const auto& d : doc.input_data) {
      out << YAML::Key << d.name << YAML::Value;
      emit_input_body(out, d);
    }
    out << YAML::EndMap;
  }
  out << YAML::Key << "VariableBatch" << YAML::Value;
  if (doc.variable_batches.empty()) out << YAML::Flow;
  out << YAML::BeginSeq;
  for (const auto& b : doc.variable_batches) emit_batch(out, b);
  out << YAML::EndSeq;
  out << YAML::Key << "Objective" << YAML::Value;
  emit_objective(out, doc.objective);
  out << YAML::Key << "ConstraintBatch" << YAML::Value;
  if (doc.constraint_batches.empty()) out << YAML::Flow;
  out << YAML::BeginSeq;
  for (const auto& c : doc.constraint_batches) emit_constraint(out, c);
  out << YAML::EndSeq;
  if (doc.solver_hint) out << YAML::Key << "Solver" << YAML::Value << *doc.solver_hint;
  out << YAML::EndMap;
  std::string text = out.c_str();
  text += '\n';
  return text;
}

// ---------------------------------------------------------------------------
// Diff / patch

namespace {

template <typename Decl>
std::vector<std::string> names_of(const std::vector<Decl>& v) {
  std::vector<std::string> out;
  for (const auto& d : v) out.push_back(d.name);
  return out;
}

template <typename Decl>
const Decl* by_name(const std::vector<Decl>& v, const std::string& name) {
  for (const auto& d : v) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ',';
    out += names[i];
  }
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

using FieldList = std::vector<std::pair<std::string, std::string>>;

FieldList batch_fields(const VariableBatchDecl& d) {
  return {{"desc", d.desc},
          {"key", fields_text(d.key)},
          {"value", fields_text(d.value)},
          {"indices", d.indices},
          {"vtype", std::string(1, vtype_letter(d.vtype))},
          {"lower_bound", format_number(d.lower_bound)},
          {"upper_bound", format_number(d.upper_bound)}};
}

FieldList constraint_fields(const ConstraintBatchDecl& d) {
  return {{"desc", d.desc}, {"generator", d.generator}};
}

std::string entry_yaml(const VariableBatchDecl& d) {
  return emit_string([&](YAML::Emitter& out) { emit_batch(out, d); });
}
std::string entry_yaml(const ConstraintBatchDecl& d) {
  return emit_string([&](YAML::Emitter& out) { emit_constraint(out, d); });
}

// Order that apply_diff produces before any Reordered entry: survivors of
// `a` in their original order, then additions inserted at their index in `b`.
template <typename Decl>
std::vector<std::string> simulated_order(const std::vector<Decl>& a, const std::vector<Decl>& b) {
  std::vector<std::string> order;
  for (const auto& d : a) {
    if (by_name(b, d.name) != nullptr) order.push_back(d.name);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (by_name(a, b[i].name) == nullptr) {
      std::size_t at = std::min(i, order.size());
      order.insert(order.begin() + static_cast<std::ptrdiff_t>(at), b[i].name);
    }
  }
  return order;
}

template <typename Decl, typename FieldsFn>
void diff_batches(const std::string& section, const std::vector<Decl>& a,
                  const std::vector<Decl>& b, FieldsFn fields_of,
                  std::vector<DocumentChange>& out) {
  for (const auto& d : a) {
    if (by_name(b, d.name) == nullptr) {
      out.push_back({section + "[" + d.name + "]", ChangeKind::kRemoved, entry_yaml(d), ""});
    }
  }
  for (const auto& d : a) {
    const Decl* other = by_name(b, d.name);
    if (other == nullptr) continue;
    FieldList before = fields_of(d);
    FieldList after = fields_of(*other);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i].second != after[i].second) {
        out.push_back({section + "[" + d.name + "]." + before[i].first, ChangeKind::kChanged,
                       before[i].second, after[i].second});
      }
    }
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (by_name(a, b[i].name) == nullptr) {
      out.push_back({section + "[" + std::to_string(i) + "]", ChangeKind::kAdded, "", entry_yaml(b[i])});
    }
  }
  std::vector<std::string> simulated = simulated_order(a, b);
  std::vector<std::string> target = names_of(b);
  if (simulated != target) {
    out.push_back({section, ChangeKind::kReordered, join_names(simulated), join_names(target)});
  }
}

void set_batch_field(VariableBatchDecl& d, const std::string& field, const std::string& value) {
  if (field == "desc") d.desc = value;
  else if (field == "key") d.key = parse_fields_text(value);
  else if (field == "value") d.value = parse_fields_text(value);
  else if (field == "indices") d.indices = value;
  else if (field == "vtype") {
    d.vtype = value == "I" ? VarType::kInteger : value == "B" ? VarType::kBinary : VarType::kContinuous;
  } else if (field == "lower_bound") d.lower_bound = parse_extended_real(value).value_or(0.0);
  else if (field == "upper_bound") d.upper_bound = parse_extended_real(value).value_or(0.0);
  else throw Error("BadPatch", "unknown variable batch field " + field);
}

void set_constraint_field(ConstraintBatchDecl& d, const std::string& field, const std::string& value) {
  if (field == "desc") d.desc = value;
  else if (field == "generator") d.generator = value;
  else throw Error("BadPatch", "unknown constraint batch field " + field);
}

VariableBatchDecl parse_entry(const std::string& text, VariableBatchDecl*) {
  DocParser p;
  auto d = p.batch(load(text), "entry");
  if (!p.violations.empty()) throw Error("BadPatch", p.violations.front().message);
  return d;
}

ConstraintBatchDecl parse_entry(const std::string& text, ConstraintBatchDecl*) {
  DocParser p;
  auto d = p.constraint(load(text), "entry");
  if (!p.violations.empty()) throw Error("BadPatch", p.violations.front().message);
  return d;
}

struct SplitPath {
  std::string section;
  std::string selector;  // bracket content or dotted name
  std::string field;
};

SplitPath split_path(const std::string& path) {
  SplitPath out;
  auto bracket = path.find('[');
  if (bracket != std::string::npos) {
    out.section = path.substr(0, bracket);
    auto close = path.find(']', bracket);
    out.selector = path.substr(bracket + 1, close - bracket - 1);
    if (close + 1 < path.size() && path[close + 1] == '.') out.field = path.substr(close + 2);
    return out;
  }
  auto dot = path.find('.');
  out.section = path.substr(0, dot);
  if (dot == std::string::npos) return out;
  std::string rest = path.substr(dot + 1);
  if (out.section == "InputData") {
    auto dot2 = rest.find('.');
    out.selector = rest.substr(0, dot2);
    if (dot2 != std::string::npos) out.field = rest.substr(dot2 + 1);
  } else {
    out.field = rest;
  }
  return out;
}

template <typename Decl, typename SetFn>
void patch_batches(std::vector<Decl>& items, const std::vector<DocumentChange>& changes,
                   const std::string& section, SetFn set_field) {
  std::vector<std::pair<std::size_t, Decl>> additions;
  const DocumentChange* reorder = nullptr;
  for (const auto& c : changes) {
    SplitPath p = split_path(c.path);
    if (p.section != section) continue;
    switch (c.kind) {
      case ChangeKind::kRemoved:
        std::erase_if(items, [&](const Decl& d) { return d.name == p.selector; });
        break;
      case ChangeKind::kChanged:
        for (auto& d : items) {
          if (d.name == p.selector) set_field(d, p.field, c.after);
        }
        break;
      case ChangeKind::kAdded:
        additions.emplace_back(std::stoul(p.selector), parse_entry(c.after, static_cast<Decl*>(nullptr)));
        break;
      case ChangeKind::kReordered:
        reorder = &c;
        break;
    }
  }
  std::sort(additions.begin(), additions.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [index, decl] : additions) {
    std::size_t at = std::min(index, items.size());
    items.insert(items.begin() + static_cast<std::ptrdiff_t>(at), std::move(decl));
  }
  if (reorder != nullptr) {
    std::vector<Decl> sorted;
    for (const auto& name : split_names(reorder->after)) {
      if (const Decl* d = by_name(items, name)) sorted.push_back(*d);
    }
    items = std::move(sorted);
  }
}

}  // namespace

std::vector<DocumentChange> diff_documents(const ModelDocument& a, const ModelDocument& b) {
  std::vector<DocumentChange> out;
  for (const auto& d : a.input_data) {
    if (b.find_input(d.name) == nullptr) {
      out.push_back({"InputData." + d.name, ChangeKind::kRemoved,
                     emit_string([&](YAML::Emitter& e) { emit_input_body(e, d); }), ""});
    }
  }
  for (const auto& d : a.input_data) {
    const InputDataDecl* other = b.find_input(d.name);
    if (other == nullptr) continue;
    if (d.desc != other->desc) {
      out.push_back({"InputData." + d.name + ".desc", ChangeKind::kChanged, d.desc, other->desc});
    }
    if (!(d.key == other->key)) {
      out.push_back({"InputData." + d.name + ".key", ChangeKind::kChanged, fields_text(d.key),
                     fields_text(other->key)});
    }
    if (!(d.value == other->value)) {
      out.push_back({"InputData." + d.name + ".value", ChangeKind::kChanged, fields_text(d.value),
                     fields_text(other->value)});
    }
  }
  for (const auto& d : b.input_data) {
    if (a.find_input(d.name) == nullptr) {
      out.push_back({"InputData." + d.name, ChangeKind::kAdded, "",
                     emit_string([&](YAML::Emitter& e) { emit_input_body(e, d); })});
    }
  }
  diff_batches("VariableBatch", a.variable_batches, b.variable_batches, batch_fields, out);
  const FieldList obj_a = {{"desc", a.objective.desc},
                           {"constructor", a.objective.constructor},
                           {"sense", a.objective.sense == Sense::kMin ? "min" : "max"}};
  const FieldList obj_b = {{"desc", b.objective.desc},
                           {"constructor", b.objective.constructor},
                           {"sense", b.objective.sense == Sense::kMin ? "min" : "max"}};
  for (std::size_t i = 0; i < obj_a.size(); ++i) {
    if (obj_a[i].second != obj_b[i].second) {
      out.push_back({"Objective." + obj_a[i].first, ChangeKind::kChanged, obj_a[i].second, obj_b[i].second});
    }
  }
  diff_batches("ConstraintBatch", a.constraint_batches, b.constraint_batches, constraint_fields, out);
  if (a.solver_hint != b.solver_hint) {
    ChangeKind kind = !a.solver_hint ? ChangeKind::kAdded
                      : !b.solver_hint ? ChangeKind::kRemoved
                                       : ChangeKind::kChanged;
    out.push_back({"Solver", kind, a.solver_hint.value_or(""), b.solver_hint.value_or("")});
  }
  return out;
}

ModelDocument apply_diff(const ModelDocument& a, const std::vector<DocumentChange>& changes) {
  ModelDocument out = a;
  for (const auto& c : changes) {
    SplitPath p = split_path(c.path);
    if (p.section == "InputData") {
      if (c.kind == ChangeKind::kRemoved) {
        std::erase_if(out.input_data, [&](const InputDataDecl& d) { return d.name == p.selector; });
      } else if (c.kind == ChangeKind::kAdded) {
        DocParser parser;
        out.input_data.push_back(parser.input(p.selector, load(c.after), c.path));
      } else if (c.kind == ChangeKind::kChanged) {
        for (auto& d : out.input_data) {
          if (d.name != p.selector) continue;
          if (p.field == "desc") d.desc = c.after;
          else if (p.field == "key") d.key = parse_fields_text(c.after);
          else if (p.field == "value") d.value = parse_fields_text(c.after);
        }
      }
    } else if (p.section == "Objective") {
      if (p.field == "desc") out.objective.desc = c.after;
      else if (p.field == "constructor") out.objective.constructor = c.after;
      else if (p.field == "sense") out.objective.sense = c.after == "max" ? Sense::kMax : Sense::kMin;
    } else if (p.section == "Solver") {
      if (c.kind == ChangeKind::kRemoved) out.solver_hint.reset();
      else out.solver_hint = c.after;
    }
  }
  patch_batches(out.variable_batches, changes, "VariableBatch", set_batch_field);
  patch_batches(out.constraint_batches, changes, "ConstraintBatch", set_constraint_field);
  return out;
}

}  // namespace orpipe
