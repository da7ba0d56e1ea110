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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "orpipe/model.hpp"

namespace orpipe {

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kEarlyStop, kSuboptimal };
std::string_view status_name(SolveStatus status);

enum class Backend { kSimplexLp, kBnbMilp };
enum class ChoiceOrigin { kHint, kTriage };
std::string_view backend_name(Backend backend);
std::string_view origin_name(ChoiceOrigin origin);

struct SolverChoice {
  Backend backend = Backend::kSimplexLp;
  ChoiceOrigin origin = ChoiceOrigin::kTriage;
};

struct SolverLimits {
  std::size_t max_iterations = 100000;
  std::size_t max_nodes = 100000;
  double time_limit_seconds = 60.0;
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;

  // Throws Error("InvalidLimits") unless every field is positive.
  void validate() const;
};

struct SolveStats {
  std::size_t iterations = 0;
  std::size_t nodes = 0;
  double wall_seconds = 0.0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::kEarlyStop;
  std::vector<double> assignment;  // indexed by variable id; empty when absent
  double objective = 0.0;
  std::vector<std::string> logs;
  SolveStats stats;
  std::optional<SolverChoice> choice;

  bool has_assignment() const { return !assignment.empty(); }
};

// Dense row-oriented form every backend consumes: minimize or maximize
// c.x + offset subject to rows and variable bounds.
struct StandardForm {
  struct Row {
    std::string name;
    std::vector<double> coefficients;
    ConstraintSense sense = ConstraintSense::kLe;
    double rhs = 0.0;
  };
  std::vector<std::string> variable_names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> integer;
  std::vector<double> objective;
  double objective_offset = 0.0;
  bool maximize = false;
  std::vector<Row> rows;

  std::size_t num_variables() const { return objective.size(); }
};

StandardForm to_standard_form(const ConcreteModel& model);

// Plain-text tableau: one line per constraint with coefficients, op, rhs.
std::string dump_lp(const StandardForm& form);

// Every backend takes a standard form and returns an outcome; triage only
// picks which one runs.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual SolveOutcome solve(const StandardForm& form, const SolverLimits& limits) const = 0;
};

// Two-phase primal simplex with Bland's rule.
class SimplexBackend : public SolverBackend {
 public:
  SolveOutcome solve(const StandardForm& form, const SolverLimits& limits) const override;
};

// Best-first branch-and-bound over simplex relaxations, branching on the
// most fractional integer variable.
class BranchAndBoundBackend : public SolverBackend {
 public:
  SolveOutcome solve(const StandardForm& form, const SolverLimits& limits) const override;
};

// Throws Error("IncompatibleHint") when the hint is `lp` but the model has
// integer or binary variables.
SolverChoice triage(const ConcreteModel& model);

SolveOutcome solve_lp(const ConcreteModel& model, const SolverLimits& limits = {});
SolveOutcome solve_milp(const ConcreteModel& model, const SolverLimits& limits = {});
SolveOutcome solve(const ConcreteModel& model, const SolverLimits& limits = {});

// Largest violation of any constraint or bound by `assignment`.
double max_violation(const ConcreteModel& model, const std::vector<double>& assignment);

}  // namespace orpipe
