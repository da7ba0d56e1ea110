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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "orpipe/dsl_schema.hpp"
#include "support.hpp"

namespace orpipe {
namespace {

using testing::golden;

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw std::runtime_error("pattern not found: " + from);
  return text.replace(pos, from.size(), to);
}

bool has_violation(const ParsedDocument& p, const std::string& path, ViolationKind kind) {
  for (const auto& v : p.violations) {
    if (v.path == path && v.kind == kind) return true;
  }
  return false;
}

TEST(ParseModelYaml, GoldenDiet) {
  ParsedDocument p = parse_model_yaml(golden("diet_model.yaml"));
  ASSERT_TRUE(p.ok());
  const ModelDocument& d = *p.document;
  ASSERT_EQ(d.input_data.size(), 4u);
  EXPECT_EQ(d.input_data[0].name, "max_nutr");
  EXPECT_EQ(d.input_data[1].name, "min_nutr");
  EXPECT_EQ(d.input_data[2].name, "nutr_vals");
  EXPECT_EQ(d.input_data[3].name, "costs");
  EXPECT_EQ(d.input_data[2].key.size(), 2u);
  ASSERT_EQ(d.variable_batches.size(), 1u);
  const auto& buy = d.variable_batches[0];
  EXPECT_EQ(buy.name, "buy");
  EXPECT_EQ(buy.vtype, VarType::kInteger);
  EXPECT_EQ(buy.lower_bound, 0.0);
  EXPECT_TRUE(std::isinf(buy.upper_bound));
  EXPECT_EQ(buy.value[0].type, ScalarType::kInt);
  EXPECT_EQ(d.objective.sense, Sense::kMin);
  ASSERT_EQ(d.constraint_batches.size(), 2u);
  EXPECT_EQ(d.constraint_batches[0].name, "min_nutr");
  EXPECT_EQ(d.constraint_batches[1].name, "max_nutr");
  EXPECT_FALSE(d.solver_hint.has_value());
}

TEST(ParseModelYaml, BadSense) {
  auto text = replace_once(golden("diet_model.yaml"), "sense: min", "sense: minimize");
  ParsedDocument p = parse_model_yaml(text);
  EXPECT_FALSE(p.ok());
  EXPECT_TRUE(has_violation(p, "Objective.sense", ViolationKind::kBadEnumValue));
}

TEST(ParseModelYaml, MissingVtype) {
  auto text = replace_once(golden("diet_model.yaml"), "    vtype: I\n", "");
  ParsedDocument p = parse_model_yaml(text);
  EXPECT_FALSE(p.ok());
  EXPECT_TRUE(has_violation(p, "VariableBatch[0].vtype", ViolationKind::kMissingProperty));
}

TEST(ParseModelYaml, ReportsAllViolations) {
  std::string text = golden("diet_model.yaml");
  text = replace_once(text, "sense: min", "sense: best");
  text = replace_once(text, "vtype: I", "vtype: Q");
  text = replace_once(text, "    indices:", "    colour: red\n    indices:");
  text = replace_once(text, "  - desc: Constraint on the total minimum nutrition\n", "  - descr: x\n");
  text = replace_once(text, "lower_bound: 0", "lower_bound: low");
  ParsedDocument p = parse_model_yaml(text);
  EXPECT_GE(p.violations.size(), 5u);
  EXPECT_TRUE(has_violation(p, "Objective.sense", ViolationKind::kBadEnumValue));
  EXPECT_TRUE(has_violation(p, "VariableBatch[0].vtype", ViolationKind::kBadEnumValue));
  EXPECT_TRUE(has_violation(p, "VariableBatch[0].colour", ViolationKind::kUnknownProperty));
  EXPECT_TRUE(has_violation(p, "ConstraintBatch[0].descr", ViolationKind::kUnknownProperty));
  EXPECT_TRUE(has_violation(p, "ConstraintBatch[0].desc", ViolationKind::kMissingProperty));
  EXPECT_TRUE(has_violation(p, "VariableBatch[0].lower_bound", ViolationKind::kWrongType));
}

TEST(ParseModelYaml, TypeAndIdentifierRules) {
  std::string text = golden("diet_model.yaml");
  auto p = parse_model_yaml(replace_once(text, "- food: str\n    value:\n      - quantity", "- food: text\n    value:\n      - quantity"));
  EXPECT_TRUE(has_violation(p, "VariableBatch[0].key[0].food", ViolationKind::kBadEnumValue));
  p = parse_model_yaml(replace_once(text, "name: buy", "name: 9buy"));
  EXPECT_TRUE(has_violation(p, "VariableBatch[0].name", ViolationKind::kWrongType));
  p = parse_model_yaml(replace_once(text, "upper_bound: inf", "upper_bound: -1"));
  EXPECT_FALSE(p.ok());
  p = parse_model_yaml(replace_once(text, "Objective:", "Extra: 1\nObjective:"));
  EXPECT_TRUE(has_violation(p, "Extra", ViolationKind::kUnknownProperty));
  p = parse_model_yaml("InputData: {}\n");
  EXPECT_TRUE(has_violation(p, "Objective", ViolationKind::kMissingProperty));
  p = parse_model_yaml("- just a list\n");
  EXPECT_FALSE(p.ok());
}

TEST(ParseModelYaml, SolverHint) {
  std::string text = golden("diet_model.yaml") + "Solver: milp\n";
  ParsedDocument p = parse_model_yaml(text);
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.document->solver_hint, "milp");
  EXPECT_TRUE(has_violation(parse_model_yaml(golden("diet_model.yaml") + "Solver: cplex\n"), "Solver",
                            ViolationKind::kBadEnumValue));
}

TEST(SerializeModelYaml, RoundTripGolden) {
  ModelDocument d = *parse_model_yaml(golden("diet_model.yaml")).document;
  std::string out = serialize_model_yaml(d);
  ParsedDocument again = parse_model_yaml(out);
  ASSERT_TRUE(again.ok()) << out;
  EXPECT_EQ(*again.document, d);
  EXPECT_EQ(serialize_model_yaml(*again.document), out);
}

TEST(SerializeModelYaml, EmptyConstraintsAndHint) {
  ModelDocument d = *parse_model_yaml(golden("diet_model.yaml")).document;
  d.constraint_batches.clear();
  d.solver_hint = "milp";
  std::string out = serialize_model_yaml(d);
  EXPECT_NE(out.find("ConstraintBatch: []"), std::string::npos) << out;
  EXPECT_NE(out.find("\nSolver: milp\n"), std::string::npos) << out;
  ParsedDocument again = parse_model_yaml(out);
  ASSERT_TRUE(again.ok()) << out;
  EXPECT_EQ(*again.document, d);
}

TEST(SerializeModelYaml, SectionOrder) {
  ModelDocument d = *parse_model_yaml(golden("diet_model.yaml")).document;
  d.solver_hint = "lp";
  std::string out = serialize_model_yaml(d);
  std::size_t a = out.find("InputData:");
  std::size_t b = out.find("VariableBatch:");
  std::size_t c = out.find("Objective:");
  std::size_t e = out.find("ConstraintBatch:");
  std::size_t f = out.find("Solver:");
  EXPECT_TRUE(a < b && b < c && c < e && e < f) << out;
}

TEST(SerializeModelYaml, RoundTripAllCleanModels) {
  namespace fs = std::filesystem;
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(testing::source_path("fixtures/models"))) {
    ParsedDocument p = parse_model_yaml(read_file((entry.path() / "model.yaml").string()));
    ASSERT_TRUE(p.ok()) << entry.path();
    ParsedDocument again = parse_model_yaml(serialize_model_yaml(*p.document));
    ASSERT_TRUE(again.ok()) << entry.path();
    EXPECT_EQ(*again.document, *p.document) << entry.path();
    ++seen;
  }
  EXPECT_EQ(seen, 15);
}

TEST(DocumentEquality, IgnoresInputOrder) {
  ModelDocument a = *parse_model_yaml(golden("diet_model.yaml")).document;
  ModelDocument b = a;
  std::swap(b.input_data[0], b.input_data[3]);
  EXPECT_EQ(a, b);
  b.variable_batches[0].vtype = VarType::kContinuous;
  EXPECT_FALSE(a == b);
}

TEST(DiffDocuments, GoldenEdit) {
  ModelDocument a = *parse_model_yaml(golden("diet_model.yaml")).document;
  ModelDocument b = *parse_model_yaml(golden("diet_model_edited.yaml")).document;
  auto changes = diff_documents(a, b);
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].path, "ConstraintBatch[max_nutr].generator");
  EXPECT_EQ(changes[0].kind, ChangeKind::kChanged);
  EXPECT_NE(changes[0].after.find("2*self.max_nutr[j]"), std::string::npos);
  EXPECT_EQ(apply_diff(a, changes), b);
}

TEST(DiffDocuments, IdentityAndAddition) {
  ModelDocument a = *parse_model_yaml(golden("diet_model.yaml")).document;
  EXPECT_TRUE(diff_documents(a, a).empty());
  ModelDocument b = a;
  b.constraint_batches.push_back({"budget", "Spend at most 100", "sum(self.costs[i] * self.buy[i] for i in self.costs) <= 100"});
  auto changes = diff_documents(a, b);
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].path, "ConstraintBatch[2]");
  EXPECT_EQ(changes[0].kind, ChangeKind::kAdded);
  EXPECT_EQ(apply_diff(a, changes), b);
}

// Names stay unique so every mutant is a valid document.
ModelDocument mutate(const ModelDocument& base, std::mt19937_64& rng) {
  static int serial = 0;
  ModelDocument d = base;
  std::uniform_int_distribution<int> op(0, 9);
  int steps = 1 + op(rng) % 4;
  for (int s = 0; s < steps; ++s) {
    switch (op(rng)) {
      case 0:
        if (!d.constraint_batches.empty()) d.constraint_batches.erase(d.constraint_batches.begin());
        break;
      case 1:
        d.constraint_batches.push_back({"extra" + std::to_string(++serial), "added", "self.buy['x'] <= 3"});
        break;
      case 2:
        if (!d.constraint_batches.empty()) d.constraint_batches.back().generator += " ";
        break;
      case 3:
        d.objective.sense = d.objective.sense == Sense::kMin ? Sense::kMax : Sense::kMin;
        break;
      case 4:
        d.objective.desc += " (revised)";
        break;
      case 5:
        if (!d.input_data.empty()) d.input_data.pop_back();
        break;
      case 6:
        d.input_data.push_back({"budget" + std::to_string(++serial), "Budget", {{"name", ScalarType::kStr, "str"}},
                                {{"amount", ScalarType::kFloat, "float"}}});
        break;
      case 7:
        if (d.constraint_batches.size() > 1) std::swap(d.constraint_batches[0], d.constraint_batches[1]);
        break;
      case 8:
        d.solver_hint = d.solver_hint ? std::nullopt : std::optional<std::string>("milp");
        break;
      default:
        if (!d.variable_batches.empty()) {
          d.variable_batches[0].upper_bound = 10 + s;
          d.variable_batches[0].vtype = VarType::kBinary;
        }
        break;
    }
  }
  return d;
}

TEST(DiffDocuments, PatchPropertyOnRandomMutations) {
  ModelDocument base = *parse_model_yaml(golden("diet_model.yaml")).document;
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    ModelDocument a = mutate(base, rng);
    ModelDocument b = mutate(a, rng);
    auto changes = diff_documents(a, b);
    EXPECT_EQ(changes.empty(), a == b) << "trial " << trial;
    ModelDocument patched = apply_diff(a, changes);
    EXPECT_EQ(patched, b) << "trial " << trial << "\n" << serialize_model_yaml(patched) << "---\n"
                          << serialize_model_yaml(b);
    EXPECT_TRUE(diff_documents(a, a).empty());
  }
}

}  // namespace
}  // namespace orpipe
