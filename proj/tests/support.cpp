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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "orpipe/json_io.hpp"
#include "orpipe/validator.hpp"

#ifndef ORPIPE_SOURCE_DIR
#error "ORPIPE_SOURCE_DIR must be defined"
#endif

namespace orpipe::testing {

std::string source_path(std::string_view relative) {
  return std::string(ORPIPE_SOURCE_DIR) + "/" + std::string(relative);
}

std::string golden(std::string_view name) {
  return read_file(source_path("fixtures/golden/" + std::string(name)));
}

ModelDocument load_model(std::string_view relative) {
  ValidationReport report = validate_pipeline(read_file(source_path(relative)));
  if (!report.document) throw Error("FixtureError", std::string(relative) + " does not validate");
  return *report.document;
}

DataSet load_dataset(std::string_view relative) {
  return parse_dataset_json(read_file(source_path(relative)));
}

ConcreteModel bind_fixture(std::string_view model_relative, const DataSet& data) {
  return bind_data(build_abstract(load_model(model_relative)), data);
}

std::string item_name(const char* prefix, std::size_t i) {
  return std::string(prefix) + std::to_string(i);
}

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

DataSet DietInstance::dataset() const {
  DataSet d;
  auto& costs = d.inputs["costs"];
  auto& nv = d.inputs["nutr_vals"];
  auto& mn = d.inputs["min_nutr"];
  auto& mx = d.inputs["max_nutr"];
  for (std::size_t i = 0; i < foods.size(); ++i) {
    costs.push_back({{foods[i]}, {cost[i]}});
    for (std::size_t j = 0; j < nutrients.size(); ++j) {
      nv.push_back({{foods[i], nutrients[j]}, {value[i][j]}});
    }
  }
  for (std::size_t j = 0; j < nutrients.size(); ++j) {
    mn.push_back({{nutrients[j]}, {min_level[j]}});
    mx.push_back({{nutrients[j]}, {max_level[j]}});
  }
  return d;
}

DietOracle diet_oracle(const DietInstance& inst, double max_factor) {
  const std::size_t n = inst.foods.size();
  const std::size_t m = inst.nutrients.size();
  std::vector<int> bound(n, std::numeric_limits<int>::max());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (inst.value[i][j] > 0) {
        bound[i] = std::min(bound[i], static_cast<int>(std::floor(max_factor * inst.max_level[j] / inst.value[i][j])));
      }
    }
  }
  DietOracle oracle;
  for (int b : bound) {
    if (b == std::numeric_limits<int>::max()) throw Error("OracleError", "food without a bounding nutrient");
    oracle.enumeration_bound = std::max(oracle.enumeration_bound, b);
  }
  std::vector<int> x(n, 0);
  for (;;) {
    bool ok = true;
    for (std::size_t j = 0; j < m && ok; ++j) {
      double level = 0.0;
      for (std::size_t i = 0; i < n; ++i) level += inst.value[i][j] * x[i];
      ok = level >= inst.min_level[j] && level <= max_factor * inst.max_level[j];
    }
    if (ok) {
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) obj += inst.cost[i] * x[i];
      if (!oracle.feasible || obj < oracle.objective) {
        oracle.feasible = true;
        oracle.objective = obj;
        oracle.quantities = x;
        oracle.optimal_count = 1;
      } else if (obj == oracle.objective) {
        ++oracle.optimal_count;
      }
    }
    std::size_t k = 0;
    while (k < n && x[k] == bound[k]) x[k++] = 0;
    if (k == n) break;
    ++x[k];
  }
  return oracle;
}

DietInstance random_diet(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (;;) {
    DietInstance inst;
    std::size_t n = static_cast<std::size_t>(uniform(rng, 2, 4));
    std::size_t m = static_cast<std::size_t>(uniform(rng, 1, 3));
    for (std::size_t i = 0; i < n; ++i) inst.foods.push_back(item_name("food", i));
    for (std::size_t j = 0; j < m; ++j) inst.nutrients.push_back(item_name("nutrient", j));
    std::vector<int> planted(n);
    for (std::size_t i = 0; i < n; ++i) {
      inst.cost.push_back(uniform(rng, 1, 9));
      planted[i] = uniform(rng, 0, 4);
      inst.value.emplace_back();
      for (std::size_t j = 0; j < m; ++j) inst.value[i].push_back(uniform(rng, 0, 4));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double level = 0.0;
      for (std::size_t i = 0; i < n; ++i) level += inst.value[i][j] * planted[i];
      inst.min_level.push_back(std::max(0.0, level - uniform(rng, 0, 6)));
      inst.max_level.push_back(level + uniform(rng, 0, 6));
    }
    bool bounded = true;
    for (std::size_t i = 0; i < n && bounded; ++i) {
      int b = std::numeric_limits<int>::max();
      for (std::size_t j = 0; j < m; ++j) {
        if (inst.value[i][j] > 0) b = std::min(b, static_cast<int>(inst.max_level[j] / inst.value[i][j]));
      }
      bounded = b <= 20;
    }
    if (!bounded) continue;
    DietOracle o = diet_oracle(inst);
    if (o.feasible && o.optimal_count == 1) return inst;
  }
}

DataSet KnapsackInstance::dataset() const {
  DataSet d;
  for (std::size_t i = 0; i < value.size(); ++i) {
    d.inputs["value"].push_back({{item_name("item", i)}, {value[i]}});
    for (std::size_t k = 0; k < capacity.size(); ++k) {
      d.inputs["weight"].push_back({{item_name("item", i), item_name("dim", k)}, {weight[i][k]}});
    }
  }
  for (std::size_t k = 0; k < capacity.size(); ++k) {
    d.inputs["capacity"].push_back({{item_name("dim", k)}, {capacity[k]}});
  }
  return d;
}

DataSet AssignmentInstance::dataset() const {
  DataSet d;
  for (std::size_t a = 0; a < capacity.size(); ++a) {
    d.inputs["capacity"].push_back({{item_name("agent", a)}, {capacity[a]}});
    for (std::size_t t = 0; t < size.size(); ++t) {
      d.inputs["cost"].push_back({{item_name("agent", a), item_name("task", t)}, {cost[a][t]}});
    }
  }
  for (std::size_t t = 0; t < size.size(); ++t) {
    d.inputs["size"].push_back({{item_name("task", t)}, {size[t]}});
  }
  return d;
}

KnapsackInstance random_knapsack(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KnapsackInstance inst;
  std::size_t n = static_cast<std::size_t>(uniform(rng, 3, 15));
  std::size_t dims = static_cast<std::size_t>(uniform(rng, 1, 2));
  std::vector<double> total(dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    inst.value.push_back(uniform(rng, 1, 30));
    inst.weight.emplace_back();
    for (std::size_t k = 0; k < dims; ++k) {
      double w = uniform(rng, 1, 20);
      inst.weight[i].push_back(w);
      total[k] += w;
    }
  }
  for (std::size_t k = 0; k < dims; ++k) {
    inst.capacity.push_back(std::floor(total[k] * uniform(rng, 20, 70) / 100.0));
  }
  return inst;
}

AssignmentInstance random_assignment(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AssignmentInstance inst;
  std::size_t agents = static_cast<std::size_t>(uniform(rng, 2, 3));
  std::size_t tasks = static_cast<std::size_t>(uniform(rng, 2, static_cast<int>(15 / agents)));
  double total = 0.0;
  for (std::size_t t = 0; t < tasks; ++t) {
    inst.size.push_back(uniform(rng, 1, 9));
    total += inst.size.back();
  }
  for (std::size_t a = 0; a < agents; ++a) {
    inst.capacity.push_back(std::ceil(total * uniform(rng, 35, 90) / 100.0));
    inst.cost.emplace_back();
    for (std::size_t t = 0; t < tasks; ++t) inst.cost[a].push_back(uniform(rng, 1, 25));
  }
  return inst;
}

EnumerationResult enumerate_knapsack(const KnapsackInstance& inst) {
  const std::size_t n = inst.value.size();
  EnumerationResult best;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t k = 0; k < inst.capacity.size() && ok; ++k) {
      double load = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) load += inst.weight[i][k];
      }
      ok = load <= inst.capacity[k];
    }
    if (!ok) continue;
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) v += inst.value[i];
    }
    if (!best.feasible || v > best.objective) best = {true, v};
  }
  return best;
}

EnumerationResult enumerate_assignment(const AssignmentInstance& inst) {
  const std::size_t agents = inst.capacity.size();
  const std::size_t tasks = inst.size.size();
  EnumerationResult best;
  // Each task goes to exactly one agent: enumerate agents^tasks choices.
  std::vector<std::size_t> choice(tasks, 0);
  for (;;) {
    std::vector<double> load(agents, 0.0);
    double c = 0.0;
    for (std::size_t t = 0; t < tasks; ++t) {
      load[choice[t]] += inst.size[t];
      c += inst.cost[choice[t]][t];
    }
    bool ok = true;
    for (std::size_t a = 0; a < agents; ++a) ok = ok && load[a] <= inst.capacity[a];
    if (ok && (!best.feasible || c < best.objective)) best = {true, c};
    std::size_t k = 0;
    while (k < tasks && choice[k] == agents - 1) choice[k++] = 0;
    if (k == tasks) break;
    ++choice[k];
  }
  return best;
}

ConcreteModel random_lp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ConcreteModel model;
  std::size_t n = static_cast<std::size_t>(uniform(rng, 1, 8));
  std::size_t m = static_cast<std::size_t>(uniform(rng, 1, 8));
  std::vector<double> planted;
  for (std::size_t j = 0; j < n; ++j) {
    Variable v;
    v.id = j;
    v.batch = "x";
    v.key = {static_cast<double>(j)};
    v.lower = uniform(rng, -5, 0);
    v.upper = v.lower + uniform(rng, 1, 10);
    planted.push_back(v.lower + (v.upper - v.lower) * uniform(rng, 0, 4) / 4.0);
    model.variables.push_back(v);
  }
  model.sense = uniform(rng, 0, 1) ? Sense::kMax : Sense::kMin;
  for (std::size_t j = 0; j < n; ++j) model.objective.add_term(j, uniform(rng, -5, 5));
  model.objective.constant = uniform(rng, -3, 3);
  for (std::size_t r = 0; r < m; ++r) {
    AffineConstraint c;
    c.name = "row[" + std::to_string(r) + "]";
    double at_planted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double a = uniform(rng, -4, 4);
      if (a == 0) continue;
      c.lhs.add_term(j, a);
      at_planted += a * planted[j];
    }
    int kind = uniform(rng, 0, 9);
    if (kind < 5) {
      c.sense = ConstraintSense::kLe;
      c.lhs.constant = -(at_planted + uniform(rng, 0, 5));
    } else if (kind < 9) {
      c.sense = ConstraintSense::kGe;
      c.lhs.constant = -(at_planted - uniform(rng, 0, 5));
    } else {
      c.sense = ConstraintSense::kEq;
      c.lhs.constant = -at_planted;
    }
    model.constraints.push_back(std::move(c));
  }
  return model;
}

namespace {

// Dense Gaussian elimination with partial pivoting; false if singular.
bool solve_square(std::vector<std::vector<long double>> a, std::vector<long double> b,
                  std::vector<long double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    if (std::fabs(a[p][c]) < 1e-12L) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0L);
  for (std::size_t c = n; c-- > 0;) {
    long double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
    x[c] = s / a[c][c];
  }
  return true;
}

}  // namespace

EnumerationResult enumerate_vertices(const ConcreteModel& model) {
  const std::size_t n = model.variables.size();
  // Hyperplanes: constraint rows, then lower and upper bound of each variable.
  struct Plane {
    std::vector<long double> a;
    long double b;
    bool equality;
  };
  std::vector<Plane> planes;
  for (const auto& c : model.constraints) {
    Plane p{std::vector<long double>(n, 0.0L), -static_cast<long double>(c.lhs.constant),
            c.sense == ConstraintSense::kEq};
    for (const auto& [id, coef] : c.lhs.terms) p.a[id] = coef;
    planes.push_back(std::move(p));
  }
  for (std::size_t j = 0; j < n; ++j) {
    Plane lo{std::vector<long double>(n, 0.0L), model.variables[j].lower, false};
    lo.a[j] = 1.0L;
    Plane hi{std::vector<long double>(n, 0.0L), model.variables[j].upper, false};
    hi.a[j] = 1.0L;
    planes.push_back(std::move(lo));
    planes.push_back(std::move(hi));
  }
  auto feasible = [&](const std::vector<long double>& x) {
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] < model.variables[j].lower - 1e-9L || x[j] > model.variables[j].upper + 1e-9L) return false;
    }
    for (const auto& c : model.constraints) {
      long double v = c.lhs.constant;
      for (const auto& [id, coef] : c.lhs.terms) v += coef * x[id];
      if (c.sense == ConstraintSense::kLe && v > 1e-9L) return false;
      if (c.sense == ConstraintSense::kGe && v < -1e-9L) return false;
      if (c.sense == ConstraintSense::kEq && std::fabs(v) > 1e-9L) return false;
    }
    return true;
  };

  EnumerationResult best;
  const double sign = model.sense == Sense::kMax ? -1.0 : 1.0;
  std::vector<std::size_t> pick(n);
  // Lexicographic n-subsets of the plane indices.
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  const std::size_t total = planes.size();
  if (total < n) return best;
  for (;;) {
    std::vector<std::vector<long double>> a;
    std::vector<long double> b;
    for (std::size_t i : pick) {
      a.push_back(planes[i].a);
      b.push_back(planes[i].b);
    }
    std::vector<long double> x;
    if (solve_square(a, b, x) && feasible(x)) {
      long double v = model.objective.constant;
      for (const auto& [id, coef] : model.objective.terms) v += coef * x[id];
      double value = static_cast<double>(v);
      if (!best.feasible || sign * value < sign * best.objective) best = {true, value};
    }
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == total - n + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t k = i; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

}  // namespace orpipe::testing

namespace orpipe::testing {

std::vector<std::string> clean_model_names() {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(source_path("fixtures/models"))) {
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// Index of the first line starting with `prefix` at or after `from`.
std::size_t find_line(const std::vector<std::string>& lines, const std::string& prefix, std::size_t from = 0) {
  for (std::size_t i = from; i < lines.size(); ++i) {
    if (lines[i].rfind(prefix, 0) == 0) return i;
  }
  throw Error("FixtureError", "no line starting with '" + prefix + "'");
}

std::string replace_first(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw Error("FixtureError", "pattern not found: " + from);
  return text.replace(pos, from.size(), to);
}

}  // namespace

std::vector<InjectedDefect> defect_corpus() {
  std::vector<InjectedDefect> out;
  std::vector<std::string> models = clean_model_names();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::string& name = models[m];
    std::string text = read_file(source_path("fixtures/models/" + name + "/model.yaml"));
    ModelDocument doc = *parse_model_yaml(text).document;
    std::vector<std::string> lines = split_lines(text);
    const std::string first_input = doc.input_data.front().name;
    const std::string last_input = doc.input_data.back().name;
    int variant = static_cast<int>(m % 5);
    // Each model contributes to every class once for the first five models,
    // and the remaining models add variety without changing the count.
    if (m >= 5) break;

    {
      auto l = lines;
      std::string path;
      switch (variant) {
        case 0: l.insert(l.begin() + find_line(l, "    indices:"), "    priority: high"); path = "VariableBatch[0].priority"; break;
        case 1: l.insert(l.begin() + find_line(l, "  sense:"), "  priority: high"); path = "Objective.priority"; break;
        case 2: l.insert(l.begin() + find_line(l, "    name:", find_line(l, "ConstraintBatch:")), "    comment: none"); path = "ConstraintBatch[0].comment"; break;
        case 3: l.insert(l.begin() + find_line(l, "    desc:"), "    units: kg"); path = "InputData." + first_input + ".units"; break;
        default: l.insert(l.begin(), "Metadata: x"); path = "Metadata"; break;
      }
      out.push_back({"unknown_property", name, join_lines(l), path});
    }
    {
      auto l = lines;
      std::string path;
      switch (variant) {
        case 0: l.erase(l.begin() + find_line(l, "    vtype:")); path = "VariableBatch[0].vtype"; break;
        case 1: l.erase(l.begin() + find_line(l, "  sense:")); path = "Objective.sense"; break;
        case 2: l.erase(l.begin() + find_line(l, "    indices:")); path = "VariableBatch[0].indices"; break;
        case 3: l.erase(l.begin() + find_line(l, "    lower_bound:")); path = "VariableBatch[0].lower_bound"; break;
        default: l.erase(l.begin() + find_line(l, "    desc:")); path = "InputData." + first_input + ".desc"; break;
      }
      out.push_back({"missing_property", name, join_lines(l), path});
    }
    {
      std::string t;
      std::string path;
      std::string sense = doc.objective.sense == Sense::kMin ? "min" : "max";
      std::string vtype(1, vtype_letter(doc.variable_batches[0].vtype));
      switch (variant) {
        case 0: t = replace_first(text, "sense: " + sense, "sense: best"); path = "Objective.sense"; break;
        case 1: t = replace_first(text, "vtype: " + vtype, "vtype: integral"); path = "VariableBatch[0].vtype"; break;
        case 2: t = replace_first(text, "sense: " + sense, "sense: minimise"); path = "Objective.sense"; break;
        case 3: t = replace_first(text, "vtype: " + vtype, "vtype: XY"); path = "VariableBatch[0].vtype"; break;
        default: t = replace_first(text, "sense: " + sense, "sense: 1"); path = "Objective.sense"; break;
      }
      out.push_back({"bad_enum", name, t, path});
    }
    {
      std::string t;
      std::string path;
      const std::string& batch = doc.variable_batches[0].name;
      switch (variant) {
        case 0:
        case 2:
        case 4:
          t = replace_first(text, "    name: " + batch + "\n", "    name: " + first_input + "\n");
          path = "VariableBatch[0]";
          break;
        default:
          t = replace_first(text, "    name: " + batch + "\n", "    name: " + last_input + "\n");
          path = "InputData." + last_input;
          break;
      }
      out.push_back({"duplicate_name", name, t, path});
    }
    {
      std::string t;
      std::string path;
      switch (variant) {
        case 0:
        case 3: {
          std::size_t at = text.find("self.", text.find("  constructor:"));
          std::size_t end = text.find_first_of("[.", at + 5);
          t = text.substr(0, at) + "self.prices" + text.substr(end);
          path = "Objective.constructor";
          break;
        }
        case 1:
        case 4: {
          std::size_t at = text.find("self.", text.find("    generator:"));
          std::size_t end = text.find_first_of("[.(", at + 5);
          t = text.substr(0, at) + "self.undeclared_table" + text.substr(end);
          path = "ConstraintBatch[0].generator";
          break;
        }
        default:
          t = replace_first(text, "indices: list(self.", "indices: list(self.missing_");
          path = "VariableBatch[0].indices";
          break;
      }
      out.push_back({"undefined_root", name, t, path});
    }
    {
      std::string t;
      std::string path;
      switch (variant) {
        case 0: t = replace_first(text, "  constructor: sum(", "  constructor: sum(lambda x, "); path = "Objective.constructor"; break;
        case 1: {
          std::size_t g = text.find("    generator:");
          std::size_t star = text.find(" <= ", g) != std::string::npos ? text.find(" <= ", g) : text.find(" >= ", g);
          if (star == std::string::npos) star = text.find(" == ", g);
          t = text.substr(0, star) + " <= 1 <=" + text.substr(star + 3);
          path = "ConstraintBatch[0].generator";
          break;
        }
        case 2: t = replace_first(text, "indices: list(", "indices: list(@ "); path = "VariableBatch[0].indices"; break;
        case 3: t = replace_first(text, "  constructor: sum(", "  constructor: sum(self.x.y.z + "); path = "Objective.constructor"; break;
        default: t = replace_first(text, "  constructor: ", "  constructor: 2 ** "); path = "Objective.constructor"; break;
      }
      out.push_back({"unparseable_expression", name, t, path});
    }
  }
  return out;
}

bool flags_defect(const ValidationReport& report, const InjectedDefect& defect) {
  if (report.verdict == Verdict::kValid) return false;
  for (const auto& v : report.violations) {
    if (v.path == defect.expected_path) return true;
  }
  for (const auto& e : report.semantic_errors) {
    for (const auto& loc : e.locations) {
      if (loc == defect.expected_path) return true;
    }
  }
  return false;
}

}  // namespace orpipe::testing
