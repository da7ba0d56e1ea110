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


#include "orpipe/solver.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "support.hpp"

namespace orpipe {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Builder {
  ConcreteModel model;

  VarId var(double lo, double hi, VarType type = VarType::kContinuous) {
    Variable v;
    v.id = model.variables.size();
    v.batch = "x";
    v.key = {static_cast<double>(v.id)};
    v.vtype = type;
    v.lower = lo;
    v.upper = hi;
    model.variables.push_back(v);
    return v.id;
  }
  // sum(coef * x) sense rhs
  void row(std::vector<std::pair<VarId, double>> terms, ConstraintSense sense, double rhs,
           const std::string& batch = "c") {
    AffineConstraint c;
    c.name = batch + "[" + std::to_string(model.constraints.size()) + "]";
    for (auto [id, coef] : terms) c.lhs.add_term(id, coef);
    c.lhs.constant = -rhs;
    c.sense = sense;
    model.constraints.push_back(c);
  }
};

bool logs_contain(const SolveOutcome& out, const std::string& needle) {
  return std::any_of(out.logs.begin(), out.logs.end(),
                     [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

double max_row_violation(const ConcreteModel& m, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& c : m.constraints) {
    double v = c.lhs.evaluate(x);
    switch (c.sense) {
      case ConstraintSense::kLe: worst = std::max(worst, v); break;
      case ConstraintSense::kGe: worst = std::max(worst, -v); break;
      case ConstraintSense::kEq: worst = std::max(worst, std::fabs(v)); break;
    }
  }
  return worst;
}

bool within_bounds(const ConcreteModel& m, const std::vector<double>& x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < m.variables[j].lower - 1e-9 || x[j] > m.variables[j].upper + 1e-9) return false;
  }
  return true;
}

DataSet knapsack_data(double capacity) {
  DataSet d = testing::load_dataset("fixtures/models/knapsack/data.json");
  d.inputs["capacity"][0].value = {capacity};
  return d;
}

TEST(Triage, DietRoutesToBranchAndBound) {
  ConcreteModel m = testing::bind_fixture("fixtures/models/diet/model.yaml",
                                          testing::load_dataset("fixtures/models/diet/data.json"));
  SolverChoice c = triage(m);
  EXPECT_EQ(c.backend, Backend::kBnbMilp);
  EXPECT_EQ(c.origin, ChoiceOrigin::kTriage);
  for (auto& v : m.variables) v.vtype = VarType::kContinuous;
  EXPECT_EQ(triage(m).backend, Backend::kSimplexLp);
}

TEST(Triage, Hints) {
  Builder b;
  b.var(0, 1, VarType::kBinary);
  b.model.solver_hint = "lp";
  try {
    triage(b.model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "IncompatibleHint");
  }
  b.model.variables[0].vtype = VarType::kContinuous;
  EXPECT_EQ(triage(b.model).origin, ChoiceOrigin::kHint);
  b.model.solver_hint = "milp";
  EXPECT_EQ(triage(b.model).backend, Backend::kBnbMilp);
  b.model.solver_hint = "auto";
  EXPECT_EQ(triage(b.model).backend, Backend::kSimplexLp);
  EXPECT_EQ(triage(b.model).origin, ChoiceOrigin::kTriage);
}

TEST(SolveLp, SymmetricMinimum) {
  Builder b;
  VarId x = b.var(0, kInf), y = b.var(0, kInf);
  b.model.objective.add_term(x, 1);
  b.model.objective.add_term(y, 1);
  b.row({{x, 1}, {y, 1}}, ConstraintSense::kGe, 2);
  SolveOutcome out = solve_lp(b.model);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_NEAR(out.objective, 2.0, 1e-9);
  EXPECT_NEAR(out.assignment[0] + out.assignment[1], 2.0, 1e-9);
}

TEST(SolveLp, Unbounded) {
  Builder b;
  VarId x = b.var(0, kInf);
  b.model.sense = Sense::kMax;
  b.model.objective.add_term(x, 1);
  EXPECT_EQ(solve_lp(b.model).status, SolveStatus::kUnbounded);
}

TEST(SolveLp, Infeasible) {
  Builder b;
  VarId x = b.var(-kInf, kInf);
  b.model.objective.add_term(x, 1);
  b.row({{x, 1}}, ConstraintSense::kGe, 1);
  b.row({{x, 1}}, ConstraintSense::kLe, 0);
  SolveOutcome out = solve_lp(b.model);
  EXPECT_EQ(out.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(out.has_assignment());
}

TEST(SolveLp, RejectsIntegerVariables) {
  Builder b;
  b.var(0, 1, VarType::kInteger);
  try {
    solve_lp(b.model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "PreconditionFailed");
  }
}

TEST(SolveLp, IterationCapGivesEarlyStop) {
  ConcreteModel m = testing::random_lp(3);
  while (m.constraints.size() < 4) m = testing::random_lp(m.constraints.size() + 100);
  SolverLimits limits;
  limits.max_iterations = 1;
  SolveOutcome out = solve_lp(m, limits);
  EXPECT_EQ(out.status, SolveStatus::kEarlyStop);
  EXPECT_FALSE(out.logs.empty());
}

TEST(SolveLp, FreeAndMirroredVariables) {
  // max -|shifted| style: x free, y <= 3 only.
  Builder b;
  VarId x = b.var(-kInf, kInf), y = b.var(-kInf, 3);
  b.model.sense = Sense::kMax;
  b.model.objective.add_term(x, 1);
  b.model.objective.add_term(y, 2);
  b.row({{x, 1}, {y, -1}}, ConstraintSense::kLe, 1);
  b.row({{x, 1}}, ConstraintSense::kGe, -10);
  SolveOutcome out = solve_lp(b.model);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_NEAR(out.assignment[0], 4.0, 1e-9);
  EXPECT_NEAR(out.assignment[1], 3.0, 1e-9);
  EXPECT_NEAR(out.objective, 10.0, 1e-9);
}

TEST(SolveLp, RedundantEqualities) {
  Builder b;
  VarId x = b.var(0, 10), y = b.var(0, 10);
  b.model.objective.add_term(x, 1);
  b.model.objective.add_term(y, 3);
  b.row({{x, 1}, {y, 1}}, ConstraintSense::kEq, 4);
  b.row({{x, 2}, {y, 2}}, ConstraintSense::kEq, 8);
  SolveOutcome out = solve_lp(b.model);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_NEAR(out.objective, 4.0, 1e-9);
}

TEST(SolveMilp, KnapsackExample) {
  ConcreteModel m = testing::bind_fixture("fixtures/models/knapsack/model.yaml", knapsack_data(5));
  SolveOutcome out = solve_milp(m);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_DOUBLE_EQ(out.objective, 7.0);
  EXPECT_EQ(out.assignment, (std::vector<double>{1, 1, 0}));
}

TEST(SolveMilp, KnapsackZeroCapacity) {
  ConcreteModel m = testing::bind_fixture("fixtures/models/knapsack/model.yaml", knapsack_data(0));
  SolveOutcome out = solve_milp(m);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_DOUBLE_EQ(out.objective, 0.0);
  EXPECT_EQ(out.assignment, (std::vector<double>{0, 0, 0}));
}

// With capacity 5 the root relaxation is already integral (a and b fill the
// knapsack), so one node proves optimality.
TEST(SolveMilp, NodeCapWithIntegralRoot) {
  ConcreteModel m = testing::bind_fixture("fixtures/models/knapsack/model.yaml", knapsack_data(5));
  SolverLimits limits;
  limits.max_nodes = 1;
  SolveOutcome out = solve_milp(m, limits);
  EXPECT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_EQ(out.stats.nodes, 1u);
  EXPECT_TRUE(logs_contain(out, "incumbent 7 at node 1"));
}

TEST(SolveMilp, NodeCapStopsEarly) {
  // Capacity 6: the relaxation takes a, b and a quarter of c.
  ConcreteModel m = testing::bind_fixture("fixtures/models/knapsack/model.yaml", knapsack_data(6));
  EXPECT_DOUBLE_EQ(solve_milp(m).objective, 8.0);
  for (std::size_t cap : {1u, 2u}) {
    SolverLimits limits;
    limits.max_nodes = cap;
    SolveOutcome out = solve_milp(m, limits);
    EXPECT_TRUE(out.status == SolveStatus::kEarlyStop || out.status == SolveStatus::kSuboptimal)
        << cap << " " << status_name(out.status);
    EXPECT_LE(out.stats.nodes, cap);
    EXPECT_TRUE(logs_contain(out, "limit reached"));
    if (out.status == SolveStatus::kSuboptimal) EXPECT_TRUE(logs_contain(out, "incumbent"));
    if (out.status == SolveStatus::kEarlyStop) EXPECT_FALSE(out.has_assignment());
  }
}

TEST(SolveMilp, InfeasibleTree) {
  Builder b;
  VarId x = b.var(0, 10, VarType::kInteger);
  b.model.objective.add_term(x, 1);
  b.row({{x, 2}}, ConstraintSense::kEq, 3);
  EXPECT_EQ(solve_milp(b.model).status, SolveStatus::kInfeasible);
}

TEST(Solve, DietRoutesAndSolves) {
  ConcreteModel m = testing::bind_fixture("fixtures/models/diet/model.yaml",
                                          testing::load_dataset("fixtures/models/diet/data.json"));
  SolveOutcome out = solve(m);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  ASSERT_TRUE(out.choice.has_value());
  EXPECT_EQ(out.choice->backend, Backend::kBnbMilp);
  EXPECT_EQ(out.logs.front(), "solver: bnb_milp (triage)");
  EXPECT_DOUBLE_EQ(out.objective, 7.0);

  for (auto& v : m.variables) v.vtype = VarType::kContinuous;
  SolveOutcome relaxed = solve(m);
  EXPECT_EQ(relaxed.choice->backend, Backend::kSimplexLp);
  EXPECT_LE(relaxed.objective, out.objective + 1e-9);
}

TEST(Solve, InfeasibleDietNamesABatch) {
  testing::DietInstance inst = testing::random_diet(11);
  inst.max_level[0] = inst.min_level[0] - 1;  // cannot reach the minimum without exceeding the maximum
  if (inst.max_level[0] < 0) inst.max_level[0] = 0, inst.min_level[0] = 1;
  for (auto& row : inst.value) row[0] = std::max(row[0], 1.0);
  ASSERT_FALSE(testing::diet_oracle(inst).feasible);
  ConcreteModel m = testing::bind_fixture("fixtures/golden/diet_model.yaml", inst.dataset());
  SolveOutcome out = solve(m);
  EXPECT_EQ(out.status, SolveStatus::kInfeasible);
  EXPECT_TRUE(logs_contain(out, "violated batch: min_nutr") || logs_contain(out, "violated batch: max_nutr"));
}

TEST(Solve, IncompatibleHintPassesThrough) {
  ConcreteModel m = testing::bind_fixture("fixtures/models/knapsack/model.yaml", knapsack_data(5));
  m.solver_hint = "lp";
  EXPECT_THROW(solve(m), Error);
}

TEST(Limits, RejectNonPositive) {
  SolverLimits limits;
  limits.feasibility_tol = 0;
  EXPECT_THROW(limits.validate(), Error);
  EXPECT_NO_THROW(SolverLimits{}.validate());
}

TEST(DumpLp, PlainTableau) {
  Builder b;
  VarId x = b.var(0, kInf), y = b.var(0, 4, VarType::kInteger);
  b.model.objective.add_term(x, 1);
  b.model.objective.add_term(y, -2);
  b.row({{x, 1}, {y, 1}}, ConstraintSense::kGe, 2);
  std::string text = dump_lp(to_standard_form(b.model));
  EXPECT_NE(text.find("variables 2"), std::string::npos);
  EXPECT_NE(text.find("rows 1"), std::string::npos);
  EXPECT_NE(text.find("c[0]:"), std::string::npos);
  EXPECT_NE(text.find(">= 2"), std::string::npos);
}

TEST(Oracle, RandomLpsMatchVertexEnumeration) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    ConcreteModel m = testing::random_lp(seed);
    testing::EnumerationResult expected = testing::enumerate_vertices(m);
    ASSERT_TRUE(expected.feasible) << seed;
    SolveOutcome out = solve_lp(m);
    ASSERT_EQ(out.status, SolveStatus::kOptimal) << seed;
    EXPECT_NEAR(out.objective, expected.objective, 1e-6) << seed;
    EXPECT_NEAR(m.objective.evaluate(out.assignment), out.objective, 1e-9) << seed;
    EXPECT_LE(max_row_violation(m, out.assignment), 1e-7) << seed;
    EXPECT_TRUE(within_bounds(m, out.assignment)) << seed;
  }
}

TEST(Oracle, KnapsackAndAssignmentMatchEnumeration) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    testing::KnapsackInstance k = testing::random_knapsack(seed);
    SolveOutcome ko = solve(testing::bind_fixture("fixtures/models/knapsack/model.yaml", k.dataset()));
    ASSERT_EQ(ko.status, SolveStatus::kOptimal) << seed;
    EXPECT_EQ(ko.objective, testing::enumerate_knapsack(k).objective) << seed;

    testing::AssignmentInstance a = testing::random_assignment(seed);
    testing::EnumerationResult ae = testing::enumerate_assignment(a);
    SolveOutcome ao = solve(testing::bind_fixture("fixtures/models/assignment/model.yaml", a.dataset()));
    if (!ae.feasible) {
      EXPECT_EQ(ao.status, SolveStatus::kInfeasible) << seed;
      continue;
    }
    ASSERT_EQ(ao.status, SolveStatus::kOptimal) << seed;
    EXPECT_EQ(ao.objective, ae.objective) << seed;
  }
}

TEST(Property, DoublingUpperLimitsNeverRaisesDietCost) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    testing::DietInstance inst = testing::random_diet(seed);
    SolveOutcome base = solve(testing::bind_fixture("fixtures/golden/diet_model.yaml", inst.dataset()));
    SolveOutcome edited = solve(testing::bind_fixture("fixtures/golden/diet_model_edited.yaml", inst.dataset()));
    ASSERT_EQ(base.status, SolveStatus::kOptimal) << seed;
    ASSERT_EQ(edited.status, SolveStatus::kOptimal) << seed;
    EXPECT_DOUBLE_EQ(base.objective, testing::diet_oracle(inst).objective) << seed;
    EXPECT_DOUBLE_EQ(edited.objective, testing::diet_oracle(inst, 2.0).objective) << seed;
    EXPECT_LE(edited.objective, base.objective) << seed;
  }
}

TEST(Property, StatusSoundnessUnderNodeCaps) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    testing::KnapsackInstance k = testing::random_knapsack(seed + 1000);
    ConcreteModel m = testing::bind_fixture("fixtures/models/knapsack/model.yaml", k.dataset());
    SolverLimits limits;
    limits.max_nodes = 1 + seed % 5;
    SolveOutcome out = solve(m, limits);
    if (out.has_assignment()) {
      EXPECT_TRUE(within_bounds(m, out.assignment)) << seed;
    }
    if (out.status == SolveStatus::kOptimal || out.status == SolveStatus::kSuboptimal) {
      EXPECT_LE(max_row_violation(m, out.assignment), limits.feasibility_tol) << seed;
      for (double v : out.assignment) EXPECT_NEAR(v, std::round(v), limits.integrality_tol);
    }
  }
}

}  // namespace
}  // namespace orpipe
