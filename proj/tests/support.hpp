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

// Instance generators and brute-force oracles shared by the unit tests and
// the acceptance binary. Oracles never call into the solver.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "orpipe/model.hpp"
#include "orpipe/solver.hpp"
#include "orpipe/validator.hpp"

namespace orpipe::testing {

std::string source_path(std::string_view relative);
std::string golden(std::string_view name);

ModelDocument load_model(std::string_view relative);
DataSet load_dataset(std::string_view relative);

// Validates the model document at `model_relative` and binds `data` to it.
ConcreteModel bind_fixture(std::string_view model_relative, const DataSet& data);

// Diet family matching the golden model's contract. Values are small
// integers so objectives compare exactly.
struct DietInstance {
  std::vector<std::string> foods;
  std::vector<std::string> nutrients;
  std::vector<double> cost;                // per food
  std::vector<std::vector<double>> value;  // [food][nutrient]
  std::vector<double> min_level;
  std::vector<double> max_level;

  DataSet dataset() const;
};

struct DietOracle {
  bool feasible = false;
  double objective = 0.0;
  std::vector<int> quantities;
  int optimal_count = 0;
  int enumeration_bound = 0;  // largest per-food bound enumerated
};

// Enumerates every integer vector in the box implied by the max levels
// (scaled by `max_factor`).
DietOracle diet_oracle(const DietInstance& inst, double max_factor = 1.0);

// Seeded; rejection-samples until the instance has at most 4 foods and 3
// nutrients, per-food bounds of at most 20, and a unique feasible optimum.
DietInstance random_diet(std::uint64_t seed);

struct KnapsackInstance {
  std::vector<std::vector<double>> weight;  // [item][dimension]
  std::vector<double> value;
  std::vector<double> capacity;  // per dimension

  DataSet dataset() const;
};

struct AssignmentInstance {
  std::vector<std::vector<double>> cost;  // [agent][task]
  std::vector<double> size;               // per task
  std::vector<double> capacity;           // per agent

  DataSet dataset() const;
};

struct EnumerationResult {
  bool feasible = false;
  double objective = 0.0;
};

KnapsackInstance random_knapsack(std::uint64_t seed);
AssignmentInstance random_assignment(std::uint64_t seed);
EnumerationResult enumerate_knapsack(const KnapsackInstance& inst);
EnumerationResult enumerate_assignment(const AssignmentInstance& inst);

// Random bounded LP built directly as a concrete model. Every variable has
// finite bounds; a planted point guarantees feasibility.
ConcreteModel random_lp(std::uint64_t seed);

// Solves every square subsystem of active constraints and keeps the best
// feasible vertex.
EnumerationResult enumerate_vertices(const ConcreteModel& model);

std::string item_name(const char* prefix, std::size_t i);

// Names of the clean fixture models, sorted.
std::vector<std::string> clean_model_names();

// A clean model with one defect injected into its text.
struct InjectedDefect {
  std::string defect_class;
  std::string model;
  std::string text;
  std::string expected_path;
};

inline constexpr const char* kDefectClasses[] = {"unknown_property", "missing_property", "bad_enum",
                                                 "duplicate_name",   "undefined_root",   "unparseable_expression"};

// Five instances of each defect class, spread over the clean models.
std::vector<InjectedDefect> defect_corpus();

// True when the report rejects the text and names the expected path.
bool flags_defect(const ValidationReport& report, const InjectedDefect& defect);

}  // namespace orpipe::testing
