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

#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

namespace orpipe {
namespace {

using testing::golden;

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

bool has_semantic(const ValidationReport& r, SemanticErrorKind kind, const std::string& name) {
  for (const auto& e : r.semantic_errors) {
    if (e.kind == kind && e.name == name) return true;
  }
  return false;
}

TEST(Autocorrect, FixesObjectiveTypo) {
  std::string text = replace_once(golden("diet_model.yaml"), "Objective:", "Objetive:");
  AutocorrectResult r = autocorrect(text);
  ASSERT_EQ(r.corrections.size(), 1u);
  EXPECT_EQ(r.corrections[0].kind, CorrectionKind::kPropertyNameFixed);
  EXPECT_EQ(r.corrections[0].before, "Objetive");
  EXPECT_EQ(r.corrections[0].after, "Objective");
  EXPECT_EQ(r.text, golden("diet_model.yaml"));
}

TEST(Autocorrect, StripsFence) {
  std::string text = "```yaml\n" + golden("diet_model.yaml") + "```\n";
  AutocorrectResult r = autocorrect(text);
  ASSERT_EQ(r.corrections.size(), 1u);
  EXPECT_EQ(r.corrections[0].kind, CorrectionKind::kFenceStripped);
  EXPECT_EQ(validate_pipeline(text).verdict, Verdict::kRepaired);
}

TEST(Autocorrect, LeavesDistantKeyAlone) {
  std::string text = replace_once(golden("diet_model.yaml"), "Objective:", "Obj:");
  AutocorrectResult r = autocorrect(text);
  EXPECT_TRUE(r.corrections.empty());
  EXPECT_EQ(r.text, text);
  ValidationReport report = validate_pipeline(text);
  EXPECT_EQ(report.verdict, Verdict::kIrreparable);
}

TEST(Autocorrect, RepairsEnumValue) {
  std::string text = replace_once(golden("diet_model.yaml"), "sense: min", "sense: mn");
  AutocorrectResult r = autocorrect(text);
  ASSERT_EQ(r.corrections.size(), 1u);
  EXPECT_EQ(r.corrections[0].kind, CorrectionKind::kEnumValueFixed);
  EXPECT_EQ(r.corrections[0].path, "Objective.sense");
}

TEST(Autocorrect, AmbiguousEnumIsNotRepaired) {
  // "Z" is one edit away from C, I and B.
  std::string text = replace_once(golden("diet_model.yaml"), "vtype: I", "vtype: Z");
  EXPECT_TRUE(autocorrect(text).corrections.empty());
}

TEST(Autocorrect, RepairsExpressionTail) {
  std::string text = replace_once(golden("diet_model.yaml"), "for i in self.costs)\n", "for i in self.costs;\n");
  ValidationReport r = validate_pipeline(text);
  EXPECT_EQ(r.verdict, Verdict::kRepaired);
  bool repaired = false;
  for (const auto& c : r.corrections) repaired |= c.kind == CorrectionKind::kExpressionRepaired;
  EXPECT_TRUE(repaired);
}

TEST(Autocorrect, Idempotent) {
  std::vector<std::string> inputs = {
      golden("diet_model.yaml"),
      "```yaml\n" + replace_once(golden("diet_model.yaml"), "VariableBatch:", "VariabelBatch:") + "```",
      replace_once(golden("diet_model.yaml"), "sense: min", "sense: MIN"),
      "not: [valid",
      "",
  };
  for (const auto& in : inputs) {
    AutocorrectResult once = autocorrect(in);
    EXPECT_TRUE(autocorrect(once.text).corrections.empty()) << in.substr(0, 40);
  }
}

TEST(Autocorrect, CorrectionsAlwaysChangeText) {
  std::string text = "```\n" + replace_once(golden("diet_model.yaml"), "generator:", "generatr:") + "```";
  for (const auto& c : autocorrect(text).corrections) EXPECT_NE(c.before, c.after);
}

TEST(EditDistance, Basics) {
  EXPECT_EQ(edit_distance("Objective", "Objetive"), 1u);
  EXPECT_EQ(edit_distance("", "abc"), 3u);
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
}

TEST(Redefinitions, GoldenHasNone) {
  EXPECT_TRUE(detect_redefinitions(testing::load_model("fixtures/golden/diet_model.yaml")).empty());
}

TEST(Redefinitions, InputAndVariableShareName) {
  ModelDocument doc = testing::load_model("fixtures/golden/diet_model.yaml");
  doc.variable_batches[0].name = "costs";
  auto errors = detect_redefinitions(doc);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].kind, SemanticErrorKind::kRedefinedVariable);
  EXPECT_EQ(errors[0].name, "costs");
  EXPECT_EQ(errors[0].locations.size(), 2u);
}

TEST(Redefinitions, TwoBatchesShareName) {
  ModelDocument doc = testing::load_model("fixtures/golden/diet_model.yaml");
  doc.variable_batches.push_back(doc.variable_batches[0]);
  auto errors = detect_redefinitions(doc);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].name, "buy");
  EXPECT_EQ(errors[0].locations, (std::vector<std::string>{"VariableBatch[0]", "VariableBatch[1]"}));
}

TEST(Undefined, GoldenHasNone) {
  EXPECT_TRUE(detect_undefined(testing::load_model("fixtures/golden/diet_model.yaml")).empty());
}

TEST(Undefined, UnknownRootInObjective) {
  ModelDocument doc = testing::load_model("fixtures/golden/diet_model.yaml");
  doc.objective.constructor = "sum(self.prices[i] * self.buy[i] for i in self.costs)";
  auto errors = detect_undefined(doc);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].kind, SemanticErrorKind::kUndefinedVariable);
  EXPECT_EQ(errors[0].name, "prices");
  EXPECT_EQ(errors[0].locations, std::vector<std::string>{"Objective.constructor"});
}

TEST(Undefined, DecisionVariableCountsAsDefined) {
  ModelDocument doc = testing::load_model("fixtures/golden/diet_model.yaml");
  doc.variable_batches[0].indices = "list(self.buy.keys())";
  EXPECT_TRUE(detect_undefined(doc).empty());
}

TEST(Undefined, DeduplicatesByName) {
  ModelDocument doc = testing::load_model("fixtures/golden/diet_model.yaml");
  doc.objective.constructor = "sum(self.ghost[i] for i in self.costs)";
  doc.variable_batches[0].indices = "list(self.ghost.keys())";
  auto errors = detect_undefined(doc);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].locations.size(), 2u);
}

TEST(Undefined, ParseFailureIsReported) {
  ModelDocument doc = testing::load_model("fixtures/golden/diet_model.yaml");
  doc.constraint_batches[0].generator = "self.a <= self.b <= self.c";
  auto errors = detect_undefined(doc);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].kind, SemanticErrorKind::kUnparseableExpression);
  EXPECT_EQ(errors[0].locations, std::vector<std::string>{"ConstraintBatch[0].generator"});
}

TEST(Pipeline, GoldenIsValid) {
  ValidationReport r = validate_pipeline(golden("diet_model.yaml"));
  EXPECT_EQ(r.verdict, Verdict::kValid);
  EXPECT_TRUE(r.corrections.empty());
  ASSERT_TRUE(r.document.has_value());
}

TEST(Pipeline, TypoIsRepaired) {
  ValidationReport r = validate_pipeline(replace_once(golden("diet_model.yaml"), "Objective:", "Objetive:"));
  EXPECT_EQ(r.verdict, Verdict::kRepaired);
  EXPECT_EQ(r.corrections.size(), 1u);
  ASSERT_TRUE(r.document.has_value());
}

TEST(Pipeline, MissingInputIsIrreparable) {
  std::string text = golden("diet_model.yaml");
  auto start = text.find("  costs:");
  auto end = text.find("VariableBatch:");
  ASSERT_NE(start, std::string::npos);
  text.erase(start, end - start);
  ValidationReport r = validate_pipeline(text);
  EXPECT_EQ(r.verdict, Verdict::kIrreparable);
  EXPECT_TRUE(has_semantic(r, SemanticErrorKind::kUndefinedVariable, "costs"));
  EXPECT_FALSE(r.document.has_value());
}

TEST(Pipeline, BrokenYamlIsIrreparable) {
  ValidationReport r = validate_pipeline("InputData: [unclosed\n");
  EXPECT_EQ(r.verdict, Verdict::kIrreparable);
  EXPECT_FALSE(r.violations.empty() && r.semantic_errors.empty());
}

TEST(Pipeline, AcceptedDocumentsPassChecksAgain) {
  std::vector<std::string> inputs = {
      golden("diet_model.yaml"),
      golden("diet_model_edited.yaml"),
      replace_once(golden("diet_model.yaml"), "ConstraintBatch:", "ConstraintBach:"),
  };
  for (const auto& in : inputs) {
    ValidationReport r = validate_pipeline(in);
    ASSERT_NE(r.verdict, Verdict::kIrreparable);
    ParsedDocument again = parse_model_yaml(serialize_model_yaml(*r.document));
    EXPECT_TRUE(again.violations.empty());
    EXPECT_TRUE(detect_redefinitions(*r.document).empty());
    EXPECT_TRUE(detect_undefined(*r.document).empty());
  }
}

TEST(DefectCorpus, EveryInjectedDefectIsFlaggedAtItsPath) {
  auto corpus = testing::defect_corpus();
  std::map<std::string, int> per_class;
  for (const auto& d : corpus) {
    ++per_class[d.defect_class];
    ValidationReport r = validate_pipeline(d.text);
    EXPECT_TRUE(testing::flags_defect(r, d))
        << d.defect_class << " in " << d.model << " expected at " << d.expected_path << " verdict "
        << verdict_name(r.verdict);
  }
  for (const char* c : testing::kDefectClasses) EXPECT_GE(per_class[c], 5) << c;
}

TEST(DefectCorpus, CleanModelsAreValid) {
  auto names = testing::clean_model_names();
  ASSERT_EQ(names.size(), 15u);
  for (const auto& name : names) {
    ValidationReport r = validate_pipeline(read_file(testing::source_path("fixtures/models/" + name + "/model.yaml")));
    EXPECT_EQ(r.verdict, Verdict::kValid) << name;
  }
}

}  // namespace
}  // namespace orpipe
