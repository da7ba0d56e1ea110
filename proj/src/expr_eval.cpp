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

#include <cmath>
#include <functional>

#include "orpipe/expr.hpp"

namespace orpipe {

bool Table::insert(Key key, std::vector<Scalar> value) {
  if (index_.count(key) != 0) return false;
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  values_.push_back(std::move(value));
  return true;
}

const std::vector<Scalar>* Table::find(const Key& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &values_[it->second];
}

void AffineExpr::add_term(VarId id, double coefficient) {
  if (coefficient == 0.0) return;
  auto [it, inserted] = terms.emplace(id, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) terms.erase(it);
  }
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  constant += other.constant;
  for (const auto& [id, c] : other.terms) add_term(id, c);
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  constant -= other.constant;
  for (const auto& [id, c] : other.terms) add_term(id, -c);
  return *this;
}

AffineExpr& AffineExpr::operator*=(double factor) {
  constant *= factor;
  if (factor == 0.0) {
    terms.clear();
    return *this;
  }
  for (auto& [id, c] : terms) c *= factor;
  return *this;
}

double AffineExpr::evaluate(std::span<const double> assignment) const {
  double total = constant;
  for (const auto& [id, c] : terms) total += c * assignment[id];
  return total;
}

std::string_view sense_symbol(ConstraintSense sense) {
  switch (sense) {
    case ConstraintSense::kLe: return "<=";
    case ConstraintSense::kGe: return ">=";
    case ConstraintSense::kEq: return "==";
  }
  return "?";
}

Value scalar_value(const Scalar& s) {
  return std::visit([](const auto& x) { return Value{x}; }, s);
}

Value key_value(const Key& key) {
  if (key.size() == 1) return scalar_value(key[0]);
  TupleValue t;
  for (const auto& s : key) t.items.push_back(scalar_value(s));
  return Value{std::move(t)};
}

std::string format_value(const Value& value) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_number(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "True" : "False";
        } else if constexpr (std::is_same_v<T, ValueList>) {
          std::string out = "[";
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i > 0) out += ", ";
            out += format_value(x[i]);
          }
          return out + "]";
        } else if constexpr (std::is_same_v<T, TupleValue>) {
          std::string out = "(";
          for (std::size_t i = 0; i < x.items.size(); ++i) {
            if (i > 0) out += ", ";
            out += format_value(x.items[i]);
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, TableView>) {
          return "self." + x.name;
        } else if constexpr (std::is_same_v<T, BatchView>) {
          return "self." + x.name;
        } else {
          std::string out = format_number(x.constant);
          for (const auto& [id, c] : x.terms) {
            out += " + " + format_number(c) + "*x" + std::to_string(id);
          }
          return out;
        }
      },
      value.v);
}

namespace {

[[noreturn]] void fail(const char* kind, const std::string& message) {
  throw EvalError(kind, message);
}

const char* kind_name(const Value& v) {
  switch (v.v.index()) {
    case 0: return "number";
    case 1: return "string";
    case 2: return "bool";
    case 3: return "list";
    case 4: return "tuple";
    case 5: return "table";
    case 6: return "variable batch";
    default: return "affine expression";
  }
}

class Interpreter {
 public:
  Interpreter(const DataEnv& env, const VariableTable* vars, bool allow_variables)
      : env_(env), vars_(vars), allow_variables_(allow_variables) {}

  void bind(const std::string& name, Value value) {
    scope_.emplace_back(name, std::move(value));
  }

  Value eval(const Expr& e) {
    return std::visit([&](const auto& n) { return eval_node(n, e); }, e.node);
  }

  // Calls `body` once per binding of the generator's for-clauses that passes
  // the if-clause. Loop bindings are visible in scope_ during the call.
  void for_each_binding(const GeneratorExpr& gen, const std::function<void()>& body) {
    iterate_from(gen, 0, body);
  }

  const Bindings& scope() const { return scope_; }

  AffineExpr to_affine(const Value& v, const char* what) {
    if (const auto* d = std::get_if<double>(&v.v)) {
      AffineExpr out;
      out.constant = *d;
      return out;
    }
    if (const auto* a = std::get_if<AffineExpr>(&v.v)) return *a;
    fail("TypeError", std::string(what) + " must be numeric, got " + kind_name(v));
  }

 private:
  Value resolve_root(const std::string& id) {
    if (auto it = env_.tables.find(id); it != env_.tables.end()) {
      return Value{TableView{&it->second, id, TableView::Part::kWhole}};
    }
    if (vars_ != nullptr) {
      if (auto it = vars_->batches.find(id); it != vars_->batches.end()) {
        return Value{BatchView{&it->second, id}};
      }
    }
    fail("NameResolutionError", "unknown name '" + id + "'");
  }

  Value eval_node(const NumberLit& n, const Expr&) { return Value{n.value}; }
  Value eval_node(const StringLit& n, const Expr&) { return Value{n.value}; }

  Value eval_node(const Name& n, const Expr&) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == n.id) return it->second;
    }
    return resolve_root(n.id);
  }

  Value eval_node(const SelfAttr& n, const Expr&) { return resolve_root(n.id); }

  static Scalar to_scalar(const Value& v) {
    if (const auto* d = std::get_if<double>(&v.v)) return *d;
    if (const auto* s = std::get_if<std::string>(&v.v)) return *s;
    if (const auto* b = std::get_if<bool>(&v.v)) return *b;
    fail("TypeError", std::string("a ") + kind_name(v) + " cannot be used as a key");
  }

  Key build_key(const Subscript& n) {
    Key key;
    for (const auto& idx : n.index) {
      Value v = eval(*idx);
      if (const auto* t = std::get_if<TupleValue>(&v.v)) {
        for (const auto& item : t->items) key.push_back(to_scalar(item));
      } else {
        key.push_back(to_scalar(v));
      }
    }
    return key;
  }

  Value eval_node(const Subscript& n, const Expr&) {
    Value target = eval(*n.target);
    if (const auto* view = std::get_if<TableView>(&target.v)) {
      if (view->part != TableView::Part::kWhole) {
        fail("TypeError", "cannot subscript a ." + std::string("keys/values/items") + "() view");
      }
      Key key = build_key(n);
      const Table& table = *view->table;
      if (key.size() != table.key_arity()) {
        fail("KeyArityError", "self." + view->name + " expects " +
                                  std::to_string(table.key_arity()) + "-component keys, got " +
                                  std::to_string(key.size()));
      }
      const auto* row = table.find(key);
      if (row == nullptr) {
        if (table.key_arity() > 1) {
          if (env_.missing_pair == MissingPairPolicy::kZero) return Value{0.0};
          fail("MissingDataPair", "self." + view->name + " has no entry for (" +
                                      format_key(key) + ")");
        }
        fail("MissingKey", "self." + view->name + " has no entry for " + format_key(key));
      }
      if (row->size() == 1) return scalar_value((*row)[0]);
      TupleValue t;
      for (const auto& s : *row) t.items.push_back(scalar_value(s));
      return Value{std::move(t)};
    }
    if (const auto* batch = std::get_if<BatchView>(&target.v)) {
      if (!allow_variables_) {
        fail("TypeError", "decision variable self." + batch->name +
                              " cannot appear in a data-only expression");
      }
      Key key = build_key(n);
      auto it = batch->batch->index.find(key);
      if (it == batch->batch->index.end()) {
        fail("MissingKey", "no variable " + display_name(batch->name, key));
      }
      AffineExpr a;
      a.add_term(it->second, 1.0);
      return Value{std::move(a)};
    }
    const std::vector<Value>* seq = nullptr;
    if (const auto* list = std::get_if<ValueList>(&target.v)) seq = list;
    if (const auto* tuple = std::get_if<TupleValue>(&target.v)) seq = &tuple->items;
    if (seq != nullptr) {
      if (n.index.size() != 1) fail("KeyArityError", "sequence index must be a single number");
      Value idx = eval(*n.index[0]);
      const auto* d = std::get_if<double>(&idx.v);
      if (d == nullptr || std::floor(*d) != *d) fail("TypeError", "sequence index must be an integer");
      auto i = static_cast<long long>(*d);
      auto size = static_cast<long long>(seq->size());
      if (i < 0) i += size;
      if (i < 0 || i >= size) fail("MissingKey", "sequence index out of range");
      return (*seq)[static_cast<std::size_t>(i)];
    }
    fail("TypeError", std::string("a ") + kind_name(target) + " is not subscriptable");
  }

  Value eval_node(const TupleKey& n, const Expr&) {
    TupleValue t;
    for (const auto& item : n.items) t.items.push_back(eval(*item));
    return Value{std::move(t)};
  }

  Value eval_node(const BinOp& n, const Expr&) {
    Value lhs = eval(*n.lhs);
    Value rhs = eval(*n.rhs);
    const auto* ld = std::get_if<double>(&lhs.v);
    const auto* rd = std::get_if<double>(&rhs.v);
    if (ld != nullptr && rd != nullptr) {
      switch (n.op) {
        case BinaryOp::kAdd: return Value{*ld + *rd};
        case BinaryOp::kSub: return Value{*ld - *rd};
        case BinaryOp::kMul: return Value{*ld * *rd};
        case BinaryOp::kDiv:
          if (*rd == 0.0) fail("TypeError", "division by zero");
          return Value{*ld / *rd};
      }
    }
    AffineExpr a = to_affine(lhs, "arithmetic operand");
    AffineExpr b = to_affine(rhs, "arithmetic operand");
    switch (n.op) {
      case BinaryOp::kAdd: a += b; break;
      case BinaryOp::kSub: a -= b; break;
      case BinaryOp::kMul:
        if (!a.is_constant() && !b.is_constant()) {
          fail("NonlinearityError", "product of two decision-variable expressions");
        }
        if (a.is_constant()) {
          double f = a.constant;
          a = b;
          a *= f;
        } else {
          a *= b.constant;
        }
        break;
      case BinaryOp::kDiv:
        if (!b.is_constant()) fail("NonlinearityError", "division by a decision-variable expression");
        if (b.constant == 0.0) fail("TypeError", "division by zero");
        a *= 1.0 / b.constant;
        break;
    }
    return Value{std::move(a)};
  }

  Value eval_node(const UnaryNeg& n, const Expr&) {
    Value v = eval(*n.operand);
    if (const auto* d = std::get_if<double>(&v.v)) return Value{-*d};
    AffineExpr a = to_affine(v, "operand of unary minus");
    a *= -1.0;
    return Value{std::move(a)};
  }

  static bool compare_numbers(CompareOp op, double a, double b) {
    switch (op) {
      case CompareOp::kLe: return a <= b;
      case CompareOp::kGe: return a >= b;
      case CompareOp::kEq: return a == b;
      case CompareOp::kLt: return a < b;
      case CompareOp::kGt: return a > b;
      case CompareOp::kNe: return a != b;
    }
    return false;
  }

  Value eval_node(const Compare& n, const Expr&) {
    Value lhs = eval(*n.lhs);
    Value rhs = eval(*n.rhs);
    const auto* ld = std::get_if<double>(&lhs.v);
    const auto* rd = std::get_if<double>(&rhs.v);
    if (ld != nullptr && rd != nullptr) return Value{compare_numbers(n.op, *ld, *rd)};
    if (std::holds_alternative<AffineExpr>(lhs.v) || std::holds_alternative<AffineExpr>(rhs.v)) {
      fail("TypeError", "comparison over decision variables is only allowed as a constraint");
    }
    if (n.op == CompareOp::kEq || n.op == CompareOp::kNe) {
      bool equal = false;
      const auto* ls = std::get_if<std::string>(&lhs.v);
      const auto* rs = std::get_if<std::string>(&rhs.v);
      const auto* lb = std::get_if<bool>(&lhs.v);
      const auto* rb = std::get_if<bool>(&rhs.v);
      if (ls != nullptr && rs != nullptr) equal = *ls == *rs;
      else if (lb != nullptr && rb != nullptr) equal = *lb == *rb;
      else if (lhs.v.index() <= 2 && rhs.v.index() <= 2) equal = false;
      else fail("TypeError", std::string("cannot compare ") + kind_name(lhs) + " and " + kind_name(rhs));
      return Value{n.op == CompareOp::kEq ? equal : !equal};
    }
    const auto* ls = std::get_if<std::string>(&lhs.v);
    const auto* rs = std::get_if<std::string>(&rhs.v);
    if (ls != nullptr && rs != nullptr) {
      int c = ls->compare(*rs);
      return Value{compare_numbers(n.op, c, 0)};
    }
    fail("TypeError", std::string("cannot order ") + kind_name(lhs) + " and " + kind_name(rhs));
  }

  std::vector<Value> iterate(const Value& v) {
    if (const auto* list = std::get_if<ValueList>(&v.v)) return *list;
    if (const auto* tuple = std::get_if<TupleValue>(&v.v)) return tuple->items;
    if (const auto* view = std::get_if<TableView>(&v.v)) {
      std::vector<Value> out;
      const Table& t = *view->table;
      out.reserve(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) {
        switch (view->part) {
          case TableView::Part::kWhole:
          case TableView::Part::kKeys:
            out.push_back(key_value(t.keys()[i]));
            break;
          case TableView::Part::kValues:
            out.push_back(key_value(t.values()[i]));
            break;
          case TableView::Part::kItems:
            out.push_back(Value{TupleValue{{key_value(t.keys()[i]), key_value(t.values()[i])}}});
            break;
        }
      }
      return out;
    }
    if (const auto* batch = std::get_if<BatchView>(&v.v)) {
      std::vector<Value> out;
      for (const auto& k : batch->batch->keys) out.push_back(key_value(k));
      return out;
    }
    fail("TypeError", std::string("a ") + kind_name(v) + " is not iterable");
  }

  void bind_targets(const ForClause& clause, const Value& item) {
    if (clause.targets.size() == 1) {
      scope_.emplace_back(clause.targets[0], item);
      return;
    }
    const std::vector<Value>* parts = nullptr;
    if (const auto* t = std::get_if<TupleValue>(&item.v)) parts = &t->items;
    if (const auto* l = std::get_if<ValueList>(&item.v)) parts = l;
    if (parts == nullptr || parts->size() != clause.targets.size()) {
      fail("KeyArityError", "cannot unpack " + format_value(item) + " into " +
                                std::to_string(clause.targets.size()) + " loop targets");
    }
    for (std::size_t i = 0; i < parts->size(); ++i) {
      scope_.emplace_back(clause.targets[i], (*parts)[i]);
    }
  }

  bool truthy(const Value& v) {
    if (const auto* b = std::get_if<bool>(&v.v)) return *b;
    if (const auto* d = std::get_if<double>(&v.v)) return *d != 0.0;
    fail("TypeError", std::string("if-clause must be a condition, got ") + kind_name(v));
  }

  void iterate_from(const GeneratorExpr& gen, std::size_t level,
                    const std::function<void()>& body) {
    if (level == gen.fors.size()) {
      if (gen.condition && !truthy(eval(*gen.condition))) return;
      body();
      return;
    }
    const ForClause& clause = gen.fors[level];
    std::vector<Value> items = iterate(eval(*clause.iter));
    for (const auto& item : items) {
      std::size_t mark = scope_.size();
      bind_targets(clause, item);
      iterate_from(gen, level + 1, body);
      scope_.resize(mark);
    }
  }

  // Materializes an argument that may be a generator expression.
  std::vector<Value> sequence_arg(const Expr& arg) {
    if (const auto* gen = std::get_if<GeneratorExpr>(&arg.node)) {
      std::vector<Value> out;
      for_each_binding(*gen, [&] { out.push_back(eval(*gen->body)); });
      return out;
    }
    return iterate(eval(arg));
  }

  Value eval_node(const GeneratorExpr& n, const Expr& e) {
    (void)n;
    return Value{sequence_arg(e)};
  }

  Value eval_node(const Call& n, const Expr&) {
    switch (n.fn) {
      case Builtin::kSum: {
        if (n.args.size() != 1) fail("TypeError", "sum() takes exactly one argument");
        double total = 0.0;
        AffineExpr acc;
        bool affine = false;
        auto add = [&](const Value& v) {
          if (const auto* d = std::get_if<double>(&v.v)) {
            total += *d;
          } else {
            acc += to_affine(v, "sum() element");
            affine = true;
          }
        };
        if (const auto* gen = std::get_if<GeneratorExpr>(&n.args[0]->node)) {
          for_each_binding(*gen, [&] { add(eval(*gen->body)); });
        } else {
          for (const auto& v : iterate(eval(*n.args[0]))) add(v);
        }
        if (!affine) return Value{total};
        acc.constant += total;
        return Value{std::move(acc)};
      }
      case Builtin::kMin:
      case Builtin::kMax: {
        std::vector<Value> items;
        if (n.args.size() == 1) {
          items = sequence_arg(*n.args[0]);
        } else {
          for (const auto& a : n.args) items.push_back(eval(*a));
        }
        if (items.empty()) fail("TypeError", "min()/max() of an empty sequence");
        double best = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) {
          double x = number_arg(items[i], n.fn == Builtin::kMin ? "min()" : "max()");
          if (i == 0 || (n.fn == Builtin::kMin ? x < best : x > best)) best = x;
        }
        return Value{best};
      }
      case Builtin::kAbs: {
        if (n.args.size() != 1) fail("TypeError", "abs() takes exactly one argument");
        return Value{std::fabs(number_arg(eval(*n.args[0]), "abs()"))};
      }
      case Builtin::kLen: {
        if (n.args.size() != 1) fail("TypeError", "len() takes exactly one argument");
        return Value{static_cast<double>(sequence_arg(*n.args[0]).size())};
      }
      case Builtin::kList: {
        if (n.args.empty()) return Value{ValueList{}};
        if (n.args.size() != 1) fail("TypeError", "list() takes at most one argument");
        return Value{sequence_arg(*n.args[0])};
      }
    }
    fail("TypeError", "unknown builtin");
  }

  double number_arg(const Value& v, const char* fn) {
    if (const auto* d = std::get_if<double>(&v.v)) return *d;
    if (const auto* a = std::get_if<AffineExpr>(&v.v)) {
      if (a->is_constant()) return a->constant;
      fail("NonlinearityError", std::string(fn) + " of a decision-variable expression");
    }
    fail("TypeError", std::string(fn) + " expects numbers, got " + kind_name(v));
  }

  Value eval_node(const MethodCall& n, const Expr&) {
    Value target = eval(*n.target);
    TableView::Part part = TableView::Part::kKeys;
    if (n.method == Method::kValues) part = TableView::Part::kValues;
    if (n.method == Method::kItems) part = TableView::Part::kItems;
    if (auto* view = std::get_if<TableView>(&target.v)) {
      view->part = part;
      return target;
    }
    if (const auto* batch = std::get_if<BatchView>(&target.v)) {
      if (part != TableView::Part::kKeys) {
        fail("TypeError", "only .keys() is available on decision variable batches");
      }
      return Value{iterate(Value{*batch})};
    }
    fail("TypeError", std::string("a ") + kind_name(target) + " has no such method");
  }

  const DataEnv& env_;
  const VariableTable* vars_;
  bool allow_variables_;
  Bindings scope_;
};

ConstraintSense constraint_sense(CompareOp op) {
  switch (op) {
    case CompareOp::kLe: return ConstraintSense::kLe;
    case CompareOp::kGe: return ConstraintSense::kGe;
    case CompareOp::kEq: return ConstraintSense::kEq;
    default:
      fail("TypeError", "strict inequalities and != cannot be used as constraints");
  }
}

std::string binding_label(std::string_view batch, const Bindings& binding) {
  std::string out(batch);
  if (binding.empty()) return out;
  out += '[';
  bool first = true;
  for (const auto& [name, value] : binding) {
    std::vector<const Value*> flat;
    if (const auto* t = std::get_if<TupleValue>(&value.v)) {
      for (const auto& item : t->items) flat.push_back(&item);
    } else {
      flat.push_back(&value);
    }
    for (const Value* v : flat) {
      if (!first) out += ',';
      out += format_value(*v);
      first = false;
    }
  }
  out += ']';
  return out;
}

}  // namespace

Value eval_concrete(const Expr& expr, const DataEnv& env, const VariableTable* vars,
                    const Bindings& bindings) {
  Interpreter interp(env, vars, /*allow_variables=*/false);
  for (const auto& [name, value] : bindings) interp.bind(name, value);
  return interp.eval(expr);
}

AffineExpr lower_affine(const Expr& expr, const DataEnv& env, const VariableTable& vars,
                        const Bindings& bindings) {
  Interpreter interp(env, &vars, /*allow_variables=*/true);
  for (const auto& [name, value] : bindings) interp.bind(name, value);
  return interp.to_affine(interp.eval(expr), "expression");
}

std::vector<GeneratedConstraint> expand_constraints(std::string_view batch_name,
                                                    const Expr& generator,
                                                    const DataEnv& env,
                                                    const VariableTable& vars) {
  if (!is_constraint_shape(generator)) {
    throw EvalError("InvalidGenerator", "constraint batch " + std::string(batch_name) +
                                            " must be a comparison or a generator of comparisons");
  }
  Interpreter interp(env, &vars, /*allow_variables=*/true);
  std::vector<GeneratedConstraint> out;

  auto emit = [&](const Compare& cmp) {
    const Bindings& binding = interp.scope();
    try {
      AffineExpr lhs = interp.to_affine(interp.eval(*cmp.lhs), "constraint side");
      AffineExpr rhs = interp.to_affine(interp.eval(*cmp.rhs), "constraint side");
      lhs -= rhs;
      GeneratedConstraint gc;
      gc.constraint.sense = constraint_sense(cmp.op);
      gc.constraint.lhs = std::move(lhs);
      gc.constraint.name = binding_label(batch_name, binding);
      gc.binding = binding;
      out.push_back(std::move(gc));
    } catch (const EvalError& e) {
      throw EvalError(e.kind(), "in " + binding_label(batch_name, binding) + ": " + e.what());
    }
  };

  if (const auto* cmp = std::get_if<Compare>(&generator.node)) {
    emit(*cmp);
    return out;
  }
  const auto& gen = std::get<GeneratorExpr>(generator.node);
  const auto& body = std::get<Compare>(gen.body->node);
  try {
    interp.for_each_binding(gen, [&] { emit(body); });
  } catch (const EvalError& e) {
    std::string msg = e.what();
    if (msg.rfind("in ", 0) == 0) throw;
    throw EvalError(e.kind(), "in " + std::string(batch_name) + ": " + msg);
  }
  return out;
}

}  // namespace orpipe
