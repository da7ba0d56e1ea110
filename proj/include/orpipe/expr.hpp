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

// Expression mini-language used by the `indices`, `constructor` and
// `generator` fields of a model document.
//
//   top        ::= comparison [ for_clauses ]
//   comparison ::= arith [ ("<=" | ">=" | "==" | "<" | ">" | "!=") arith ]
//   arith      ::= term { ("+" | "-") term }
//   term       ::= unary { ("*" | "/") unary }
//   unary      ::= "-" unary | "+" unary | postfix
//   postfix    ::= primary { "[" top { "," top } "]" | "." method "(" ")" }
//   primary    ::= number | string | "self" "." name | name
//                | builtin "(" args ")" | "(" top { "," top } ")"
//   for_clauses::= { "for" targets "in" arith } [ "if" comparison ]
//
// Backslash line continuations are treated as whitespace. Anything outside
// this grammar (chained comparisons, lambdas, deep attribute chains, unknown
// call targets) is rejected with a ParseError.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "orpipe/common.hpp"

namespace orpipe {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { kAdd, kSub, kMul, kDiv };
enum class CompareOp { kLe, kGe, kEq, kLt, kGt, kNe };
enum class Builtin { kSum, kMin, kMax, kAbs, kLen, kList };
enum class Method { kKeys, kValues, kItems };

struct NumberLit { double value; };
struct StringLit { std::string value; };
struct Name { std::string id; };
struct SelfAttr { std::string id; };
struct Subscript {
  ExprPtr target;
  std::vector<ExprPtr> index;
};
struct TupleKey { std::vector<ExprPtr> items; };
struct BinOp {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct UnaryNeg { ExprPtr operand; };
struct Compare {
  CompareOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Call {
  Builtin fn;
  std::vector<ExprPtr> args;
};
struct ForClause {
  std::vector<std::string> targets;
  ExprPtr iter;
};
struct GeneratorExpr {
  ExprPtr body;
  std::vector<ForClause> fors;
  ExprPtr condition;  // may be null
};
struct MethodCall {
  Method method;
  ExprPtr target;
};

struct Expr {
  using Node = std::variant<NumberLit, StringLit, Name, SelfAttr, Subscript,
                            TupleKey, BinOp, UnaryNeg, Compare, Call,
                            GeneratorExpr, MethodCall>;
  Node node;
  std::size_t pos = 0;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : Error("ParseError", "at offset " + std::to_string(position) + ": " +
                                message),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Kinds: NameResolutionError, KeyArityError, TypeError, NonlinearityError,
// MissingKey, MissingDataPair, InvalidGenerator.
class EvalError : public Error {
 public:
  using Error::Error;
};

ExprPtr parse_expr(std::string_view text);

// S-expression dump, e.g. (call sum (gen (sub self.costs i) (for [i] self.costs))).
std::string dump(const Expr& expr);

// `self.<name>` roots plus bare names not bound by an enclosing for-clause.
std::set<std::string> free_roots(const Expr& expr);

// ---------------------------------------------------------------------------
// Data and evaluation

// A named input table. Iteration order is insertion order.
class Table {
 public:
  Table() = default;
  Table(std::size_t key_arity, std::size_t value_arity)
      : key_arity_(key_arity), value_arity_(value_arity) {}

  // Returns false on a duplicate key.
  bool insert(Key key, std::vector<Scalar> value);
  const std::vector<Scalar>* find(const Key& key) const;

  std::size_t key_arity() const { return key_arity_; }
  std::size_t value_arity() const { return value_arity_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<Key>& keys() const { return keys_; }
  const std::vector<std::vector<Scalar>>& values() const { return values_; }

 private:
  std::size_t key_arity_ = 1;
  std::size_t value_arity_ = 1;
  std::vector<Key> keys_;
  std::vector<std::vector<Scalar>> values_;
  std::map<Key, std::size_t> index_;
};

enum class MissingPairPolicy { kError, kZero };

struct DataEnv {
  std::map<std::string, Table> tables;
  MissingPairPolicy missing_pair = MissingPairPolicy::kError;
};

using VarId = std::size_t;

struct VariableBatch {
  std::vector<Key> keys;
  std::vector<VarId> ids;
  std::map<Key, VarId> index;
};

struct VariableTable {
  std::map<std::string, VariableBatch> batches;
};

struct AffineExpr {
  double constant = 0.0;
  std::map<VarId, double> terms;

  bool is_constant() const { return terms.empty(); }
  void add_term(VarId id, double coefficient);
  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double factor);
  double evaluate(std::span<const double> assignment) const;
  friend bool operator==(const AffineExpr&, const AffineExpr&) = default;
};

enum class ConstraintSense { kLe, kGe, kEq };
std::string_view sense_symbol(ConstraintSense sense);

// lhs (sense) 0
struct AffineConstraint {
  std::string name;
  AffineExpr lhs;
  ConstraintSense sense = ConstraintSense::kLe;
};

struct Value;
using ValueList = std::vector<Value>;
struct TupleValue {
  std::vector<Value> items;
};
struct TableView {
  const Table* table = nullptr;
  std::string name;
  enum class Part { kWhole, kKeys, kValues, kItems } part = Part::kWhole;
};
struct BatchView {
  const VariableBatch* batch = nullptr;
  std::string name;
};

// Result of evaluation. AffineExpr only appears while lowering.
struct Value {
  std::variant<double, std::string, bool, ValueList, TupleValue, TableView,
               BatchView, AffineExpr>
      v;
};

std::string format_value(const Value& value);
Value scalar_value(const Scalar& s);
Value key_value(const Key& key);

using Bindings = std::vector<std::pair<std::string, Value>>;

// `vars` is only used to iterate decision-variable batch keys; referencing a
// decision variable itself is a TypeError here.
Value eval_concrete(const Expr& expr, const DataEnv& env,
                    const VariableTable* vars = nullptr,
                    const Bindings& bindings = {});

AffineExpr lower_affine(const Expr& expr, const DataEnv& env,
                        const VariableTable& vars,
                        const Bindings& bindings = {});

struct GeneratedConstraint {
  AffineConstraint constraint;
  Bindings binding;
};

// One constraint per binding combination of the generator. Errors carry the
// binding that produced them.
std::vector<GeneratedConstraint> expand_constraints(
    std::string_view batch_name, const Expr& generator, const DataEnv& env,
    const VariableTable& vars);

// True when `expr` is a comparison or a generator whose body is one.
bool is_constraint_shape(const Expr& expr);

}  // namespace orpipe
