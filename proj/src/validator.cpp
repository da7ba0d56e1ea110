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

#include "orpipe/validator.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "orpipe/expr.hpp"

namespace orpipe {

std::string_view correction_kind_name(CorrectionKind kind) {
  switch (kind) {
    case CorrectionKind::kPropertyNameFixed: return "PropertyNameFixed";
    case CorrectionKind::kEnumValueFixed: return "EnumValueFixed";
    case CorrectionKind::kExpressionRepaired: return "ExpressionRepaired";
    case CorrectionKind::kFenceStripped: return "FenceStripped";
  }
  return "?";
}

std::string_view semantic_error_kind_name(SemanticErrorKind kind) {
  switch (kind) {
    case SemanticErrorKind::kRedefinedVariable: return "RedefinedVariable";
    case SemanticErrorKind::kUndefinedVariable: return "UndefinedVariable";
    case SemanticErrorKind::kUnparseableExpression: return "UnparseableExpression";
  }
  return "?";
}

std::string_view verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::kValid: return "Valid";
    case Verdict::kRepaired: return "Repaired";
    case Verdict::kIrreparable: return "Irreparable";
  }
  return "?";
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// The unique candidate within distance 1 of `word`, ignoring case.
std::optional<std::string> unique_near(std::string_view word,
                                       std::initializer_list<std::string_view> candidates) {
  std::optional<std::string> found;
  std::string w = lower(word);
  for (std::string_view c : candidates) {
    if (edit_distance(w, lower(c)) <= 1) {
      if (found) return std::nullopt;
      found = std::string(c);
    }
  }
  return found;
}

const std::initializer_list<std::string_view> kTop = {"InputData", "VariableBatch", "Objective",
                                                      "ConstraintBatch", "Solver"};
const std::initializer_list<std::string_view> kInput = {"desc", "key", "value"};
const std::initializer_list<std::string_view> kBatch = {"desc", "name", "key", "value", "indices",
                                                        "vtype", "lower_bound", "upper_bound"};
const std::initializer_list<std::string_view> kObjective = {"desc", "constructor", "sense"};
const std::initializer_list<std::string_view> kConstraint = {"desc", "name", "generator"};

struct TextEdit {
  std::size_t pos;
  std::size_t length;
  std::string replacement;
};

class Corrector {
 public:
  explicit Corrector(const std::string& text) : text_(text) {}

  std::vector<TextEdit> edits;
  std::vector<Correction> corrections;

  void run(const YAML::Node& root) {
    if (!root.IsMap()) return;
    std::vector<std::pair<std::string, YAML::Node>> sections;
    for (const auto& kv : root) {
      std::string key = fix_key(kv.first, root, kTop, "");
      sections.emplace_back(key, kv.second);
    }
    for (auto& [key, node] : sections) {
      if (key == "InputData" && node.IsMap()) {
        for (const auto& kv : node) {
          std::string path = "InputData." + (kv.first.IsScalar() ? kv.first.Scalar() : "?");
          if (kv.second.IsMap()) fix_entry(kv.second, kInput, path);
        }
      } else if (key == "VariableBatch" && node.IsSequence()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
          if (node[i].IsMap()) fix_entry(node[i], kBatch, "VariableBatch[" + std::to_string(i) + "]");
        }
      } else if (key == "Objective" && node.IsMap()) {
        fix_entry(node, kObjective, "Objective");
      } else if (key == "ConstraintBatch" && node.IsSequence()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
          if (node[i].IsMap()) {
            fix_entry(node[i], kConstraint, "ConstraintBatch[" + std::to_string(i) + "]");
          }
        }
      }
    }
  }

 private:
  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  std::string fix_key(const YAML::Node& key_node, const YAML::Node& map,
                      std::initializer_list<std::string_view> allowed, const std::string& path) {
    if (!key_node.IsScalar()) return "";
    std::string key = key_node.Scalar();
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) return key;
    auto target = unique_near(key, allowed);
    if (!target || map[*target]) return key;
    replace_scalar(key_node, *target);
    corrections.push_back({join(path, *target), CorrectionKind::kPropertyNameFixed, key, *target});
    return *target;
  }

  void fix_entry(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                 const std::string& path) {
    for (const auto& kv : map) {
      std::string key = fix_key(kv.first, map, allowed, path);
      const YAML::Node& value = kv.second;
      if (!value.IsScalar()) continue;
      if (key == "sense") {
        fix_enum(value, {"min", "max"}, join(path, key));
      } else if (key == "vtype") {
        fix_enum(value, {"C", "I", "B"}, join(path, key));
      } else if (key == "indices" || key == "constructor" || key == "generator") {
        fix_expression(value, kv.first.Mark().column, join(path, key));
      }
    }
  }

  void fix_enum(const YAML::Node& value, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
    std::string v = value.Scalar();
    if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return;
    auto target = unique_near(v, allowed);
    if (!target) return;
    replace_scalar(value, *target);
    corrections.push_back({path, CorrectionKind::kEnumValueFixed, v, *target});
  }

  // Replaces the content of a scalar at its source position, keeping quotes.
  void replace_scalar(const YAML::Node& node, const std::string& replacement) {
    std::size_t pos = static_cast<std::size_t>(node.Mark().pos);
    std::size_t length = node.Scalar().size();
    if (pos < text_.size() && (text_[pos] == '"' || text_[pos] == '\'')) ++pos;
    edits.push_back({pos, length, replacement});
  }

  // Source extent [begin, end) of a scalar value's content.
  std::pair<std::size_t, std::size_t> scalar_extent(const YAML::Node& node, int key_column) {
    std::size_t pos = static_cast<std::size_t>(node.Mark().pos);
    if (pos >= text_.size()) return {pos, pos};
    char q = text_[pos];
    if (q == '"' || q == '\'') {
      std::size_t i = pos + 1;
      while (i < text_.size()) {
        if (q == '"' && text_[i] == '\\') {
          i += 2;
          continue;
        }
        if (text_[i] == q) {
          if (q == '\'' && i + 1 < text_.size() && text_[i + 1] == '\'') {
            i += 2;
            continue;
          }
          break;
        }
        ++i;
      }
      return {pos + 1, std::min(i, text_.size())};
    }
    // Plain or block scalar: the first line plus following lines indented
    // deeper than the key.
    std::size_t end = text_.find('\n', pos);
    if (end == std::string::npos) return {pos, text_.size()};
    std::size_t line = end + 1;
    while (line < text_.size()) {
      std::size_t next = text_.find('\n', line);
      if (next == std::string::npos) next = text_.size();
      std::string_view content(text_.data() + line, next - line);
      auto first = content.find_first_not_of(" \t\r");
      if (first != std::string_view::npos) {
        if (static_cast<int>(first) <= key_column) break;
        end = next;
      }
      line = next + 1;
    }
    return {pos, end};
  }

  void fix_expression(const YAML::Node& value, int key_column, const std::string& path) {
    const std::string before = value.Scalar();
    std::string repaired = trim(before);
    bool changed = false;
    while (!repaired.empty() && repaired.back() == ';') {
      repaired.pop_back();
      repaired = trim(repaired);
      changed = true;
    }
    long opens = std::count(repaired.begin(), repaired.end(), '(');
    long closes = std::count(repaired.begin(), repaired.end(), ')');
    bool add_paren = opens == closes + 1;
    if (add_paren) {
      repaired += ')';
      changed = true;
    }
    if (!changed) return;

    auto [begin, end] = scalar_extent(value, key_column);
    std::size_t last = end;
    while (last > begin && std::isspace(static_cast<unsigned char>(text_[last - 1]))) --last;
    std::size_t cut = last;
    while (cut > begin) {
      char c = text_[cut - 1];
      if (c == ';') {
        --cut;
      } else if (std::isspace(static_cast<unsigned char>(c)) && cut - 1 > begin) {
        std::size_t probe = cut - 1;
        while (probe > begin && std::isspace(static_cast<unsigned char>(text_[probe - 1]))) --probe;
        if (probe > begin && text_[probe - 1] == ';') {
          cut = probe;
        } else {
          break;
        }
      } else {
        break;
      }
    }
    edits.push_back({cut, last - cut, add_paren ? ")" : ""});
    corrections.push_back({path, CorrectionKind::kExpressionRepaired, trim(before), repaired});
  }

  const std::string& text_;
};

std::pair<std::string, std::optional<Correction>> strip_fence(std::string_view raw) {
  std::string text(raw);
  std::size_t line_start = 0;
  std::size_t line_no = 1;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    std::string line = trim(std::string_view(text).substr(line_start, line_end - line_start));
    if (line.rfind("```", 0) == 0) {
      std::size_t body_start = std::min(line_end + 1, text.size());
      std::size_t scan = body_start;
      std::size_t body_end = text.size();
      while (scan < text.size()) {
        std::size_t e = text.find('\n', scan);
        if (e == std::string::npos) e = text.size();
        if (trim(std::string_view(text).substr(scan, e - scan)).rfind("```", 0) == 0) {
          body_end = scan;
          break;
        }
        scan = e + 1;
      }
      std::string body = text.substr(body_start, body_end - body_start);
      Correction c{"line " + std::to_string(line_no), CorrectionKind::kFenceStripped, line, ""};
      return {body, c};
    }
    line_start = line_end + 1;
    ++line_no;
  }
  return {text, std::nullopt};
}

}  // namespace

AutocorrectResult autocorrect(std::string_view raw) {
  AutocorrectResult result;
  auto [text, fence] = strip_fence(raw);
  if (fence) result.corrections.push_back(*fence);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception&) {
    result.text = std::move(text);
    return result;
  }
  Corrector corrector(text);
  corrector.run(root);
  std::sort(corrector.edits.begin(), corrector.edits.end(),
            [](const TextEdit& a, const TextEdit& b) { return a.pos > b.pos; });
  for (const auto& e : corrector.edits) text.replace(e.pos, e.length, e.replacement);
  result.text = std::move(text);
  for (auto& c : corrector.corrections) result.corrections.push_back(std::move(c));
  return result;
}

std::vector<SemanticError> detect_redefinitions(const ModelDocument& doc) {
  std::map<std::string, std::vector<std::string>> seen;
  std::vector<std::string> order;
  auto note = [&](const std::string& name, std::string location) {
    auto& locs = seen[name];
    if (locs.empty()) order.push_back(name);
    locs.push_back(std::move(location));
  };
  for (const auto& d : doc.input_data) note(d.name, "InputData." + d.name);
  for (std::size_t i = 0; i < doc.variable_batches.size(); ++i) {
    note(doc.variable_batches[i].name, "VariableBatch[" + std::to_string(i) + "]");
  }
  std::vector<SemanticError> out;
  for (const auto& name : order) {
    const auto& locs = seen[name];
    if (locs.size() > 1) {
      out.push_back({SemanticErrorKind::kRedefinedVariable, name, locs,
                     "'" + name + "' is declared " + std::to_string(locs.size()) + " times"});
    }
  }
  return out;
}

std::vector<SemanticError> detect_undefined(const ModelDocument& doc) {
  std::set<std::string> defined;
  for (const auto& d : doc.input_data) defined.insert(d.name);
  for (const auto& b : doc.variable_batches) defined.insert(b.name);

  enum class Shape { kValue, kConstraint };
  struct Field {
    std::string path;
    const std::string* text;
    Shape shape;
  };
  std::vector<Field> fields;
  for (std::size_t i = 0; i < doc.variable_batches.size(); ++i) {
    fields.push_back({"VariableBatch[" + std::to_string(i) + "].indices",
                      &doc.variable_batches[i].indices, Shape::kValue});
  }
  fields.push_back({"Objective.constructor", &doc.objective.constructor, Shape::kValue});
  for (std::size_t i = 0; i < doc.constraint_batches.size(); ++i) {
    fields.push_back({"ConstraintBatch[" + std::to_string(i) + "].generator",
                      &doc.constraint_batches[i].generator, Shape::kConstraint});
  }

  std::vector<SemanticError> out;
  std::map<std::string, std::size_t> undefined_index;
  for (const auto& f : fields) {
    ExprPtr ast;
    try {
      ast = parse_expr(*f.text);
    } catch (const ParseError& e) {
      out.push_back({SemanticErrorKind::kUnparseableExpression, "", {f.path}, e.what()});
      continue;
    }
    if (f.shape == Shape::kConstraint && !is_constraint_shape(*ast)) {
      out.push_back({SemanticErrorKind::kUnparseableExpression, "", {f.path},
                     "a generator must be a comparison or a generator of comparisons"});
      continue;
    }
    if (f.shape == Shape::kValue && std::holds_alternative<Compare>(ast->node)) {
      out.push_back({SemanticErrorKind::kUnparseableExpression, "", {f.path},
                     "a comparison is only allowed in a constraint generator"});
      continue;
    }
    for (const auto& root : free_roots(*ast)) {
      if (defined.count(root) != 0) continue;
      auto it = undefined_index.find(root);
      if (it == undefined_index.end()) {
        undefined_index.emplace(root, out.size());
        out.push_back({SemanticErrorKind::kUndefinedVariable, root, {f.path},
                       "'" + root + "' is neither an input nor a decision variable"});
      } else {
        out[it->second].locations.push_back(f.path);
      }
    }
  }
  return out;
}

ValidationReport validate_pipeline(std::string_view raw) {
  ValidationReport report;
  AutocorrectResult fixed = autocorrect(raw);
  report.corrections = std::move(fixed.corrections);
  report.corrected_text = std::move(fixed.text);

  ParsedDocument parsed = parse_model_yaml(report.corrected_text);
  report.violations = std::move(parsed.violations);
  if (!parsed.ok()) {
    report.verdict = Verdict::kIrreparable;
    return report;
  }
  report.semantic_errors = detect_redefinitions(*parsed.document);
  if (!report.semantic_errors.empty()) {
    report.verdict = Verdict::kIrreparable;
    return report;
  }
  report.semantic_errors = detect_undefined(*parsed.document);
  if (!report.semantic_errors.empty()) {
    report.verdict = Verdict::kIrreparable;
    return report;
  }
  report.verdict = report.corrections.empty() ? Verdict::kValid : Verdict::kRepaired;
  report.document = std::move(parsed.document);
  return report;
}

}  // namespace orpipe
