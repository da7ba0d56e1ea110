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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace orpipe {

std::string_view status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kUnbounded: return "Unbounded";
    case SolveStatus::kEarlyStop: return "EarlyStop";
    case SolveStatus::kSuboptimal: return "Suboptimal";
  }
  return "?";
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kSimplexLp ? "simplex_lp" : "bnb_milp";
}

std::string_view origin_name(ChoiceOrigin origin) {
  return origin == ChoiceOrigin::kHint ? "hint" : "triage";
}

void SolverLimits::validate() const {
  if (max_iterations == 0 || max_nodes == 0 || !(time_limit_seconds > 0) ||
      !(feasibility_tol > 0) || !(integrality_tol > 0)) {
    throw Error("InvalidLimits", "solver limits must all be positive");
  }
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotEps = 1e-9;

struct LpResult {
  SolveStatus status = SolveStatus::kEarlyStop;
  std::vector<double> x;
  double value = 0.0;  // cost.x for the minimization cost passed in
  std::size_t iterations = 0;
  std::vector<std::string> unsatisfied_rows;
};

// x_j in terms of nonnegative columns y.
struct ColumnMap {
  enum Kind { kShift, kMirror, kFree } kind = kShift;
  std::size_t col = 0;
  std::size_t col2 = 0;
  double base = 0.0;
};

class Tableau {
 public:
  std::vector<std::vector<double>> rows;
  std::vector<double> obj;
  std::vector<std::size_t> basis;
  std::size_t width = 0;  // number of columns excluding rhs

  double& rhs(std::size_t r) { return rows[r][width]; }

  void pivot(std::size_t r, std::size_t c) {
    std::vector<double>& pr = rows[r];
    double p = pr[c];
    for (auto& v : pr) v /= p;
    pr[c] = 1.0;
    auto eliminate = [&](std::vector<double>& row) {
      double f = row[c];
      if (f == 0.0) return;
      for (std::size_t j = 0; j <= width; ++j) {
        row[j] -= f * pr[j];
        if (std::fabs(row[j]) < 1e-12) row[j] = 0.0;
      }
      row[c] = 0.0;
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i != r) eliminate(rows[i]);
    }
    eliminate(obj);
    basis[r] = c;
  }

  enum class Step { kOptimal, kUnbounded, kLimit };

  // Bland's rule over columns [0, allowed).
  Step iterate(std::size_t allowed, std::size_t& iterations, std::size_t max_iterations,
               Clock::time_point deadline) {
    for (;;) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (obj[j] < -kPivotEps) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return Step::kOptimal;
      if (iterations >= max_iterations || Clock::now() > deadline) return Step::kLimit;
      std::size_t leave = rows.size();
      double best = kInf;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        double a = rows[r][enter];
        if (a <= kPivotEps) continue;
        double ratio = rows[r][width] / a;
        if (leave == rows.size() || ratio < best - 1e-12 ||
            (std::fabs(ratio - best) <= 1e-12 && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows.size()) return Step::kUnbounded;
      pivot(leave, enter);
      ++iterations;
    }
  }
};

LpResult run_simplex(const StandardForm& form, const std::vector<double>& lower,
                     const std::vector<double>& upper, const SolverLimits& limits,
                     Clock::time_point deadline) {
  LpResult result;
  const std::size_t n = form.num_variables();
  const double sign = form.maximize ? -1.0 : 1.0;

  struct WorkRow {
    std::string name;
    std::vector<double> coef;
    ConstraintSense sense;
    double rhs;
  };

  std::vector<ColumnMap> map(n);
  std::size_t ny = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (lower[j] > upper[j] + limits.feasibility_tol) {
      result.status = SolveStatus::kInfeasible;
      result.unsatisfied_rows.push_back("bounds of " + form.variable_names[j]);
      return result;
    }
    if (std::isfinite(lower[j])) {
      map[j] = {ColumnMap::kShift, ny++, 0, lower[j]};
    } else if (std::isfinite(upper[j])) {
      map[j] = {ColumnMap::kMirror, ny++, 0, upper[j]};
    } else {
      map[j] = {ColumnMap::kFree, ny, ny + 1, 0.0};
      ny += 2;
    }
  }

  auto transform = [&](const std::vector<double>& coef, std::vector<double>& out) {
    out.assign(ny, 0.0);
    double shift = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double a = coef[j];
      if (a == 0.0) continue;
      const ColumnMap& m = map[j];
      switch (m.kind) {
        case ColumnMap::kShift:
          out[m.col] += a;
          shift += a * m.base;
          break;
        case ColumnMap::kMirror:
          out[m.col] -= a;
          shift += a * m.base;
          break;
        case ColumnMap::kFree:
          out[m.col] += a;
          out[m.col2] -= a;
          break;
      }
    }
    return shift;
  };

  std::vector<WorkRow> work;
  for (const auto& row : form.rows) {
    WorkRow w{row.name, {}, row.sense, 0.0};
    double shift = transform(row.coefficients, w.coef);
    w.rhs = row.rhs - shift;
    work.push_back(std::move(w));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (map[j].kind == ColumnMap::kShift && std::isfinite(upper[j])) {
      WorkRow w{"bound of " + form.variable_names[j], std::vector<double>(ny, 0.0),
                ConstraintSense::kLe, upper[j] - lower[j]};
      w.coef[map[j].col] = 1.0;
      work.push_back(std::move(w));
    }
  }
  std::vector<double> cost_y;
  std::vector<double> cost(n);
  for (std::size_t j = 0; j < n; ++j) cost[j] = sign * form.objective[j];
  transform(cost, cost_y);

  for (auto& w : work) {
    if (w.rhs < 0) {
      for (auto& v : w.coef) v = -v;
      w.rhs = -w.rhs;
      if (w.sense == ConstraintSense::kLe) w.sense = ConstraintSense::kGe;
      else if (w.sense == ConstraintSense::kGe) w.sense = ConstraintSense::kLe;
    }
  }

  const std::size_t m = work.size();
  std::size_t n_slack = 0;
  std::size_t n_art = 0;
  for (const auto& w : work) {
    if (w.sense != ConstraintSense::kEq) ++n_slack;
    if (w.sense != ConstraintSense::kLe) ++n_art;
  }
  const std::size_t first_art = ny + n_slack;
  Tableau t;
  t.width = first_art + n_art;
  t.rows.assign(m, std::vector<double>(t.width + 1, 0.0));
  t.basis.assign(m, 0);
  std::vector<std::size_t> art_row;
  std::size_t slack = ny;
  std::size_t art = first_art;
  for (std::size_t r = 0; r < m; ++r) {
    auto& row = t.rows[r];
    std::copy(work[r].coef.begin(), work[r].coef.end(), row.begin());
    row[t.width] = work[r].rhs;
    switch (work[r].sense) {
      case ConstraintSense::kLe:
        row[slack] = 1.0;
        t.basis[r] = slack++;
        break;
      case ConstraintSense::kGe:
        row[slack++] = -1.0;
        row[art] = 1.0;
        t.basis[r] = art++;
        art_row.push_back(r);
        break;
      case ConstraintSense::kEq:
        row[art] = 1.0;
        t.basis[r] = art++;
        art_row.push_back(r);
        break;
    }
  }

  // Phase 1: minimize the sum of artificials.
  t.obj.assign(t.width + 1, 0.0);
  for (std::size_t r : art_row) {
    for (std::size_t j = 0; j <= t.width; ++j) {
      if (j >= first_art && j < t.width) continue;
      t.obj[j] -= t.rows[r][j];
    }
  }
  std::size_t iterations = 0;
  if (n_art > 0) {
    auto step = t.iterate(t.width, iterations, limits.max_iterations, deadline);
    result.iterations = iterations;
    if (step == Tableau::Step::kLimit) {
      result.status = SolveStatus::kEarlyStop;
      return result;
    }
    double infeasibility = -t.obj[t.width];
    if (infeasibility > limits.feasibility_tol) {
      result.status = SolveStatus::kInfeasible;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.basis[r] >= first_art && t.rhs(r) > limits.feasibility_tol) {
          result.unsatisfied_rows.push_back(work[r].name);
        }
      }
      return result;
    }
    // Drive remaining artificials out of the basis; drop redundant rows.
    std::vector<bool> redundant(t.rows.size(), false);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.basis[r] < first_art) continue;
      std::size_t col = first_art;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::fabs(t.rows[r][j]) > kPivotEps) {
          col = j;
          break;
        }
      }
      if (col == first_art) {
        redundant[r] = true;
      } else {
        t.pivot(r, col);
      }
    }
    std::vector<std::vector<double>> kept;
    std::vector<std::size_t> kept_basis;
    std::vector<WorkRow> kept_work;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (redundant[r]) continue;
      kept.push_back(std::move(t.rows[r]));
      kept_basis.push_back(t.basis[r]);
      kept_work.push_back(std::move(work[r]));
    }
    t.rows = std::move(kept);
    t.basis = std::move(kept_basis);
    work = std::move(kept_work);
  }

  // Phase 2 with the true costs; artificial columns may not re-enter.
  std::fill(t.obj.begin(), t.obj.end(), 0.0);
  for (std::size_t j = 0; j < ny; ++j) t.obj[j] = cost_y[j];
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t b = t.basis[r];
    double cb = b < ny ? cost_y[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= t.width; ++j) t.obj[j] -= cb * t.rows[r][j];
  }
  auto step = t.iterate(first_art, iterations, limits.max_iterations, deadline);
  result.iterations = iterations;
  if (step == Tableau::Step::kLimit) {
    result.status = SolveStatus::kEarlyStop;
    return result;
  }
  if (step == Tableau::Step::kUnbounded) {
    result.status = SolveStatus::kUnbounded;
    return result;
  }

  std::vector<double> y(ny, 0.0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.basis[r] < ny) y[t.basis[r]] = t.rhs(r);
  }
  result.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const ColumnMap& mj = map[j];
    double v = 0.0;
    switch (mj.kind) {
      case ColumnMap::kShift: v = mj.base + y[mj.col]; break;
      case ColumnMap::kMirror: v = mj.base - y[mj.col]; break;
      case ColumnMap::kFree: v = y[mj.col] - y[mj.col2]; break;
    }
    result.x[j] = std::clamp(v, lower[j], upper[j]);
  }
  result.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) result.value += cost[j] * result.x[j];
  result.status = SolveStatus::kOptimal;
  return result;
}

double objective_value(const StandardForm& form, const std::vector<double>& x) {
  double v = form.objective_offset;
  for (std::size_t j = 0; j < x.size(); ++j) v += form.objective[j] * x[j];
  return v;
}

std::string batch_of(const std::string& row_name) {
  return row_name.substr(0, row_name.find('['));
}

void log_infeasible_rows(const LpResult& lp, std::vector<std::string>& logs) {
  if (lp.unsatisfied_rows.empty()) return;
  std::string rows = "unsatisfied rows:";
  std::set<std::string> batches;
  for (const auto& r : lp.unsatisfied_rows) {
    rows += " " + r;
    batches.insert(batch_of(r));
  }
  logs.push_back(rows);
  for (const auto& b : batches) logs.push_back("violated batch: " + b);
}

std::string fmt(double v) { return format_number(v); }

}  // namespace

StandardForm to_standard_form(const ConcreteModel& model) {
  StandardForm f;
  const std::size_t n = model.variables.size();
  for (const auto& v : model.variables) {
    f.variable_names.push_back(v.display());
    f.lower.push_back(v.lower);
    f.upper.push_back(v.upper);
    f.integer.push_back(v.is_integer());
  }
  f.objective.assign(n, 0.0);
  for (const auto& [id, c] : model.objective.terms) f.objective[id] = c;
  f.objective_offset = model.objective.constant;
  f.maximize = model.sense == Sense::kMax;
  for (const auto& c : model.constraints) {
    StandardForm::Row row;
    row.name = c.name;
    row.coefficients.assign(n, 0.0);
    for (const auto& [id, a] : c.lhs.terms) row.coefficients[id] = a;
    row.sense = c.sense;
    row.rhs = -c.lhs.constant;
    f.rows.push_back(std::move(row));
  }
  return f;
}

std::string dump_lp(const StandardForm& form) {
  std::ostringstream out;
  out << "variables " << form.num_variables() << "\n";
  for (std::size_t j = 0; j < form.num_variables(); ++j) {
    out << "  x" << j << " " << form.variable_names[j] << " " << (form.integer[j] ? "I" : "C")
        << " [" << fmt(form.lower[j]) << ", " << fmt(form.upper[j]) << "]\n";
  }
  out << "objective " << (form.maximize ? "max" : "min") << ":";
  for (double c : form.objective) out << " " << fmt(c);
  out << " + " << fmt(form.objective_offset) << "\n";
  out << "rows " << form.rows.size() << "\n";
  for (const auto& row : form.rows) {
    out << "  " << row.name << ":";
    for (double a : row.coefficients) out << " " << fmt(a);
    out << " " << sense_symbol(row.sense) << " " << fmt(row.rhs) << "\n";
  }
  return out.str();
}

SolveOutcome SimplexBackend::solve(const StandardForm& form, const SolverLimits& limits) const {
  auto start = Clock::now();
  auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                              std::chrono::duration<double>(limits.time_limit_seconds));
  LpResult lp = run_simplex(form, form.lower, form.upper, limits, deadline);
  SolveOutcome out;
  out.status = lp.status;
  out.stats.iterations = lp.iterations;
  out.logs.push_back("simplex: " + std::string(status_name(lp.status)) + " after " +
                     std::to_string(lp.iterations) + " iterations");
  if (lp.status == SolveStatus::kOptimal) {
    out.assignment = lp.x;
    out.objective = objective_value(form, lp.x);
  }
  if (lp.status == SolveStatus::kInfeasible) log_infeasible_rows(lp, out.logs);
  if (lp.status == SolveStatus::kEarlyStop) {
    out.logs.push_back("iteration or time limit reached before optimality");
  }
  out.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

SolveOutcome BranchAndBoundBackend::solve(const StandardForm& form, const SolverLimits& limits) const {
  auto start = Clock::now();
  auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                              std::chrono::duration<double>(limits.time_limit_seconds));
  const std::size_t n = form.num_variables();
  const double sign = form.maximize ? -1.0 : 1.0;
  SolveOutcome out;

  struct Node {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> x;
    double bound;  // minimization form
    std::size_t order;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.order > b.order;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);

  std::vector<double> lower = form.lower;
  std::vector<double> upper = form.upper;
  for (std::size_t j = 0; j < n; ++j) {
    if (!form.integer[j]) continue;
    if (std::isfinite(lower[j])) lower[j] = std::ceil(lower[j] - limits.integrality_tol);
    if (std::isfinite(upper[j])) upper[j] = std::floor(upper[j] + limits.integrality_tol);
  }

  std::size_t nodes = 0;
  std::size_t iterations = 0;
  std::size_t order = 0;
  bool limit_hit = false;
  std::optional<std::vector<double>> incumbent;
  double incumbent_value = kInf;  // minimization form

  auto finish = [&](SolveStatus status) {
    out.status = status;
    out.stats.nodes = nodes;
    out.stats.iterations = iterations;
    out.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (incumbent) {
      out.assignment = *incumbent;
      out.objective = objective_value(form, *incumbent);
    }
    return out;
  };

  // Solves one relaxation; returns false when the node is discarded.
  auto relax = [&](std::vector<double> lo, std::vector<double> hi, LpResult& lp) {
    ++nodes;
    lp = run_simplex(form, lo, hi, limits, deadline);
    iterations += lp.iterations;
    if (lp.status == SolveStatus::kOptimal) {
      open.push(Node{std::move(lo), std::move(hi), lp.x, lp.value, order++});
      return true;
    }
    return false;
  };

  LpResult root;
  relax(lower, upper, root);
  if (root.status != SolveStatus::kOptimal) {
    out.logs.push_back("branch-and-bound: root relaxation " + std::string(status_name(root.status)));
    if (root.status == SolveStatus::kInfeasible) log_infeasible_rows(root, out.logs);
    return finish(root.status);
  }

  while (!open.empty()) {
    Node node = open.top();
    double tol = 1e-9 * std::max(1.0, std::fabs(incumbent_value));
    if (incumbent && node.bound >= incumbent_value - tol) break;
    open.pop();

    std::size_t branch = n;
    double best_frac = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!form.integer[j]) continue;
      double frac = node.x[j] - std::floor(node.x[j]);
      double dist = std::min(frac, 1.0 - frac);
      if (dist > limits.integrality_tol && dist > best_frac + 1e-12) {
        best_frac = dist;
        branch = j;
      }
    }
    if (branch == n) {
      std::vector<double> x = node.x;
      for (std::size_t j = 0; j < n; ++j) {
        if (form.integer[j]) x[j] = std::round(x[j]);
      }
      double value = 0.0;
      for (std::size_t j = 0; j < n; ++j) value += sign * form.objective[j] * x[j];
      if (!incumbent || value < incumbent_value) {
        incumbent = x;
        incumbent_value = value;
        out.logs.push_back("incumbent " + fmt(objective_value(form, x)) + " at node " +
                           std::to_string(nodes));
      }
      continue;
    }
    if (nodes >= limits.max_nodes || Clock::now() > deadline) {
      open.push(std::move(node));
      limit_hit = true;
      break;
    }
    double v = node.x[branch];
    LpResult lp;
    {
      std::vector<double> hi = node.upper;
      hi[branch] = std::floor(v);
      relax(node.lower, std::move(hi), lp);
      if (lp.status == SolveStatus::kEarlyStop) limit_hit = true;
    }
    if (nodes >= limits.max_nodes && !limit_hit) {
      // The second child would exceed the node budget.
      Node rest = node;
      rest.lower[branch] = std::ceil(v);
      open.push(std::move(rest));
      limit_hit = true;
      break;
    }
    {
      std::vector<double> lo = node.lower;
      lo[branch] = std::ceil(v);
      relax(std::move(lo), node.upper, lp);
      if (lp.status == SolveStatus::kEarlyStop) limit_hit = true;
    }
    if (limit_hit) break;
  }

  if (limit_hit) {
    double best_bound = open.empty() ? incumbent_value : open.top().bound;
    if (incumbent) {
      double gap = incumbent_value - best_bound;
      if (gap <= 1e-9 * std::max(1.0, std::fabs(incumbent_value))) {
        out.logs.push_back("branch-and-bound: limit reached but remaining nodes cannot improve");
        return finish(SolveStatus::kOptimal);
      }
      out.logs.push_back("branch-and-bound: node/time limit reached; incumbent " +
                         fmt(objective_value(form, *incumbent)) + ", gap " + fmt(gap));
      return finish(SolveStatus::kSuboptimal);
    }
    out.logs.push_back("branch-and-bound: node/time limit reached after " + std::to_string(nodes) +
                       " nodes without an integer solution");
    return finish(SolveStatus::kEarlyStop);
  }
  if (!incumbent) {
    out.logs.push_back("branch-and-bound: no integer-feasible leaf after " + std::to_string(nodes) + " nodes");
    return finish(SolveStatus::kInfeasible);
  }
  out.logs.push_back("branch-and-bound: tree exhausted after " + std::to_string(nodes) + " nodes");
  return finish(SolveStatus::kOptimal);
}

SolverChoice triage(const ConcreteModel& model) {
  bool integer = model.has_integer_variables();
  if (model.solver_hint && *model.solver_hint != "auto") {
    if (*model.solver_hint == "lp") {
      if (integer) {
        throw Error("IncompatibleHint", "solver hint 'lp' but the model has integer or binary variables");
      }
      return {Backend::kSimplexLp, ChoiceOrigin::kHint};
    }
    return {Backend::kBnbMilp, ChoiceOrigin::kHint};
  }
  return {integer ? Backend::kBnbMilp : Backend::kSimplexLp, ChoiceOrigin::kTriage};
}

SolveOutcome solve_lp(const ConcreteModel& model, const SolverLimits& limits) {
  limits.validate();
  if (model.has_integer_variables()) {
    throw Error("PreconditionFailed", "solve_lp requires all variables to be continuous");
  }
  return SimplexBackend().solve(to_standard_form(model), limits);
}

SolveOutcome solve_milp(const ConcreteModel& model, const SolverLimits& limits) {
  limits.validate();
  return BranchAndBoundBackend().solve(to_standard_form(model), limits);
}

SolveOutcome solve(const ConcreteModel& model, const SolverLimits& limits) {
  limits.validate();
  SolverChoice choice = triage(model);
  StandardForm form = to_standard_form(model);
  SolveOutcome out = choice.backend == Backend::kSimplexLp ? SimplexBackend().solve(form, limits)
                                                           : BranchAndBoundBackend().solve(form, limits);
  out.choice = choice;
  out.logs.insert(out.logs.begin(), "solver: " + std::string(backend_name(choice.backend)) + " (" +
                                        std::string(origin_name(choice.origin)) + ")");
  return out;
}

double max_violation(const ConcreteModel& model, const std::vector<double>& assignment) {
  double worst = 0.0;
  for (const auto& c : model.constraints) {
    double v = c.lhs.evaluate(assignment);
    double viol = 0.0;
    switch (c.sense) {
      case ConstraintSense::kLe: viol = std::max(0.0, v); break;
      case ConstraintSense::kGe: viol = std::max(0.0, -v); break;
      case ConstraintSense::kEq: viol = std::fabs(v); break;
    }
    worst = std::max(worst, viol);
  }
  for (const auto& var : model.variables) {
    double x = assignment[var.id];
    worst = std::max({worst, var.lower - x, x - var.upper});
  }
  return worst;
}

}  // namespace orpipe
