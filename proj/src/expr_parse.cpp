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

#include <cctype>
#include <charconv>
#include <sstream>

#include "orpipe/expr.hpp"

namespace orpipe {
namespace {

enum class Tok {
  kEnd, kNumber, kString, kIdent,
  kLParen, kRParen, kLBracket, kRBracket, kComma, kDot,
  kPlus, kMinus, kStar, kSlash,
  kLe, kGe, kEq, kLt, kGt, kNe,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto at = [&](std::size_t k) -> char { return k < n ? src[k] : '\0'; };
  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    // Line continuation. YAML folding turns the newline after it into a
    // space, so any following whitespace counts.
    if (c == '\\') {
      std::size_t j = i + 1;
      while (j < n && std::isspace(static_cast<unsigned char>(src[j]))) ++j;
      if (j >= n || j > i + 1) {
        i = j;
        continue;
      }
      throw ParseError(i, "stray backslash");
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(at(i + 1))))) {
      std::size_t j = i;
      while (j < n && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < n && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < n && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      std::string_view lit = src.substr(i, j - i);
      auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), t.number);
      if (ec != std::errc() || ptr != lit.data() + lit.size()) {
        throw ParseError(i, "malformed number '" + std::string(lit) + "'");
      }
      if (j < n && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        throw ParseError(j, "malformed number");
      }
      t.kind = Tok::kNumber;
      t.text = std::string(lit);
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::kIdent;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      std::string value;
      while (j < n && src[j] != c) {
        if (src[j] == '\\' && j + 1 < n) {
          value += src[j + 1];
          j += 2;
          continue;
        }
        value += src[j++];
      }
      if (j >= n) throw ParseError(i, "unterminated string literal");
      t.kind = Tok::kString;
      t.text = std::move(value);
      i = j + 1;
    } else {
      auto two = [&](char a, char b) { return c == a && at(i + 1) == b; };
      if (two('<', '=')) { t.kind = Tok::kLe; i += 2; }
      else if (two('>', '=')) { t.kind = Tok::kGe; i += 2; }
      else if (two('=', '=')) { t.kind = Tok::kEq; i += 2; }
      else if (two('!', '=')) { t.kind = Tok::kNe; i += 2; }
      else if (two('*', '*')) throw ParseError(i, "unsupported operator '**'");
      else if (two('/', '/')) throw ParseError(i, "unsupported operator '//'");
      else {
        switch (c) {
          case '(': t.kind = Tok::kLParen; break;
          case ')': t.kind = Tok::kRParen; break;
          case '[': t.kind = Tok::kLBracket; break;
          case ']': t.kind = Tok::kRBracket; break;
          case ',': t.kind = Tok::kComma; break;
          case '.': t.kind = Tok::kDot; break;
          case '+': t.kind = Tok::kPlus; break;
          case '-': t.kind = Tok::kMinus; break;
          case '*': t.kind = Tok::kStar; break;
          case '/': t.kind = Tok::kSlash; break;
          case '<': t.kind = Tok::kLt; break;
          case '>': t.kind = Tok::kGt; break;
          case '=': throw ParseError(i, "assignment is not an expression");
          default:
            throw ParseError(i, std::string("unexpected character '") + c + "'");
        }
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = n;
  out.push_back(end);
  return out;
}

bool is_reserved(const std::string& id) {
  static const char* kReserved[] = {
      "lambda", "and", "or", "not", "else", "def", "return", "import",
      "while", "class", "yield", "is", "None", "True", "False", "await"};
  for (const char* r : kReserved) {
    if (id == r) return true;
  }
  return false;
}

std::optional<Builtin> builtin_from(const std::string& id) {
  if (id == "sum") return Builtin::kSum;
  if (id == "min") return Builtin::kMin;
  if (id == "max") return Builtin::kMax;
  if (id == "abs") return Builtin::kAbs;
  if (id == "len") return Builtin::kLen;
  if (id == "list") return Builtin::kList;
  return std::nullopt;
}

std::optional<CompareOp> compare_from(Tok kind) {
  switch (kind) {
    case Tok::kLe: return CompareOp::kLe;
    case Tok::kGe: return CompareOp::kGe;
    case Tok::kEq: return CompareOp::kEq;
    case Tok::kLt: return CompareOp::kLt;
    case Tok::kGt: return CompareOp::kGt;
    case Tok::kNe: return CompareOp::kNe;
    default: return std::nullopt;
  }
}

ExprPtr make(Expr::Node node, std::size_t pos) {
  return std::make_shared<const Expr>(Expr{std::move(node), pos});
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ExprPtr parse_all() {
    if (peek().kind == Tok::kEnd) throw ParseError(0, "empty expression");
    ExprPtr e = parse_top();
    if (peek().kind != Tok::kEnd) {
      throw ParseError(peek().pos, "unexpected token '" + describe(peek()) + "'");
    }
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = std::min(idx_ + ahead, toks_.size() - 1);
    return toks_[k];
  }
  const Token& next() {
    const Token& t = toks_[idx_];
    if (idx_ + 1 < toks_.size()) ++idx_;
    return t;
  }
  bool is_keyword(const char* word, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::kIdent && t.text == word;
  }
  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      throw ParseError(peek().pos, std::string("expected ") + what + ", found '" +
                                       describe(peek()) + "'");
    }
    next();
  }
  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::kEnd: return "end of expression";
      case Tok::kNumber:
      case Tok::kIdent: return t.text;
      case Tok::kString: return "'" + t.text + "'";
      case Tok::kLParen: return "(";
      case Tok::kRParen: return ")";
      case Tok::kLBracket: return "[";
      case Tok::kRBracket: return "]";
      case Tok::kComma: return ",";
      case Tok::kDot: return ".";
      case Tok::kPlus: return "+";
      case Tok::kMinus: return "-";
      case Tok::kStar: return "*";
      case Tok::kSlash: return "/";
      case Tok::kLe: return "<=";
      case Tok::kGe: return ">=";
      case Tok::kEq: return "==";
      case Tok::kLt: return "<";
      case Tok::kGt: return ">";
      case Tok::kNe: return "!=";
    }
    return "?";
  }

  // comparison, optionally followed by for-clauses (unparenthesized generator)
  ExprPtr parse_top() {
    ExprPtr body = parse_comparison();
    if (is_keyword("for")) return parse_generator(std::move(body));
    return body;
  }

  ExprPtr parse_generator(ExprPtr body) {
    std::size_t pos = body->pos;
    GeneratorExpr gen;
    gen.body = std::move(body);
    while (is_keyword("for")) {
      next();
      ForClause clause;
      bool parenthesized = false;
      if (peek().kind == Tok::kLParen) {
        parenthesized = true;
        next();
      }
      clause.targets.push_back(parse_target());
      while (peek().kind == Tok::kComma) {
        next();
        clause.targets.push_back(parse_target());
      }
      if (parenthesized) expect(Tok::kRParen, "')' after loop targets");
      if (!is_keyword("in")) throw ParseError(peek().pos, "expected 'in' in for-clause");
      next();
      clause.iter = parse_arith();
      gen.fors.push_back(std::move(clause));
      if (is_keyword("if")) {
        next();
        gen.condition = parse_comparison();
        if (is_keyword("if") || is_keyword("for")) {
          throw ParseError(peek().pos, "only one trailing if-clause is supported");
        }
        break;
      }
    }
    return make(std::move(gen), pos);
  }

  std::string parse_target() {
    const Token& t = peek();
    if (t.kind != Tok::kIdent || is_reserved(t.text) || t.text == "self" ||
        t.text == "for" || t.text == "in" || t.text == "if") {
      throw ParseError(t.pos, "expected loop identifier, found '" + describe(t) + "'");
    }
    return next().text;
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_arith();
    if (auto op = compare_from(peek().kind)) {
      std::size_t pos = peek().pos;
      next();
      ExprPtr rhs = parse_arith();
      if (compare_from(peek().kind)) {
        throw ParseError(peek().pos, "chained comparisons are not supported");
      }
      return make(Compare{*op, std::move(lhs), std::move(rhs)}, pos);
    }
    return lhs;
  }

  ExprPtr parse_arith() {
    ExprPtr lhs = parse_term();
    while (peek().kind == Tok::kPlus || peek().kind == Tok::kMinus) {
      std::size_t pos = peek().pos;
      BinaryOp op = next().kind == Tok::kPlus ? BinaryOp::kAdd : BinaryOp::kSub;
      ExprPtr rhs = parse_term();
      lhs = make(BinOp{op, std::move(lhs), std::move(rhs)}, pos);
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    while (peek().kind == Tok::kStar || peek().kind == Tok::kSlash) {
      std::size_t pos = peek().pos;
      BinaryOp op = next().kind == Tok::kStar ? BinaryOp::kMul : BinaryOp::kDiv;
      ExprPtr rhs = parse_unary();
      lhs = make(BinOp{op, std::move(lhs), std::move(rhs)}, pos);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (peek().kind == Tok::kMinus) {
      std::size_t pos = next().pos;
      return make(UnaryNeg{parse_unary()}, pos);
    }
    if (peek().kind == Tok::kPlus) {
      next();
      return parse_unary();
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    for (;;) {
      if (peek().kind == Tok::kLBracket) {
        std::size_t pos = next().pos;
        Subscript sub;
        sub.target = e;
        sub.index.push_back(parse_top());
        while (peek().kind == Tok::kComma) {
          next();
          sub.index.push_back(parse_top());
        }
        expect(Tok::kRBracket, "']'");
        e = make(std::move(sub), pos);
      } else if (peek().kind == Tok::kDot) {
        std::size_t pos = next().pos;
        const Token& name = peek();
        if (name.kind != Tok::kIdent) throw ParseError(name.pos, "expected attribute name");
        Method m;
        if (name.text == "keys") m = Method::kKeys;
        else if (name.text == "values") m = Method::kValues;
        else if (name.text == "items") m = Method::kItems;
        else throw ParseError(name.pos, "attribute chains deeper than self.<name> are not supported");
        if (!std::holds_alternative<SelfAttr>(e->node)) {
          throw ParseError(name.pos, "." + name.text + "() is only supported on self.<name>");
        }
        next();
        expect(Tok::kLParen, "'(' after method name");
        expect(Tok::kRParen, "')' (methods take no arguments)");
        e = make(MethodCall{m, e}, pos);
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kNumber: {
        next();
        return make(NumberLit{t.number}, t.pos);
      }
      case Tok::kString: {
        next();
        return make(StringLit{t.text}, t.pos);
      }
      case Tok::kLParen: return parse_paren();
      case Tok::kIdent: break;
      default:
        throw ParseError(t.pos, "unexpected token '" + describe(t) + "'");
    }
    std::size_t pos = t.pos;
    std::string id = next().text;
    if (id == "self") {
      expect(Tok::kDot, "'.' after self");
      const Token& attr = peek();
      if (attr.kind != Tok::kIdent) throw ParseError(attr.pos, "expected name after self.");
      std::string name = next().text;
      if (peek().kind == Tok::kDot && !(peek(1).kind == Tok::kIdent &&
                                        (peek(1).text == "keys" || peek(1).text == "values" ||
                                         peek(1).text == "items"))) {
        throw ParseError(peek().pos, "attribute chains deeper than self.<name> are not supported");
      }
      return make(SelfAttr{std::move(name)}, pos);
    }
    if (is_reserved(id) || id == "for" || id == "in" || id == "if") {
      throw ParseError(pos, "'" + id + "' is not supported in expressions");
    }
    if (peek().kind == Tok::kLParen) {
      auto fn = builtin_from(id);
      if (!fn) throw ParseError(pos, "unknown function '" + id + "'");
      next();
      Call call{*fn, {}};
      if (peek().kind != Tok::kRParen) {
        ExprPtr arg = parse_comparison();
        if (is_keyword("for")) {
          call.args.push_back(parse_generator(std::move(arg)));
        } else {
          call.args.push_back(std::move(arg));
          while (peek().kind == Tok::kComma) {
            next();
            call.args.push_back(parse_comparison());
          }
        }
      }
      expect(Tok::kRParen, "')' to close call");
      return make(std::move(call), pos);
    }
    return make(Name{std::move(id)}, pos);
  }

  ExprPtr parse_paren() {
    std::size_t pos = next().pos;
    if (peek().kind == Tok::kRParen) throw ParseError(peek().pos, "empty parentheses");
    ExprPtr first = parse_comparison();
    if (is_keyword("for")) {
      ExprPtr gen = parse_generator(std::move(first));
      expect(Tok::kRParen, "')' to close generator");
      return gen;
    }
    if (peek().kind == Tok::kComma) {
      TupleKey tuple;
      tuple.items.push_back(std::move(first));
      while (peek().kind == Tok::kComma) {
        next();
        if (peek().kind == Tok::kRParen) break;
        tuple.items.push_back(parse_comparison());
      }
      expect(Tok::kRParen, "')' to close tuple");
      return make(std::move(tuple), pos);
    }
    expect(Tok::kRParen, "')'");
    return first;
  }

  std::vector<Token> toks_;
  std::size_t idx_ = 0;
};

const char* op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
  }
  return "?";
}

const char* op_name(CompareOp op) {
  switch (op) {
    case CompareOp::kLe: return "<=";
    case CompareOp::kGe: return ">=";
    case CompareOp::kEq: return "==";
    case CompareOp::kLt: return "<";
    case CompareOp::kGt: return ">";
    case CompareOp::kNe: return "!=";
  }
  return "?";
}

const char* builtin_name(Builtin fn) {
  switch (fn) {
    case Builtin::kSum: return "sum";
    case Builtin::kMin: return "min";
    case Builtin::kMax: return "max";
    case Builtin::kAbs: return "abs";
    case Builtin::kLen: return "len";
    case Builtin::kList: return "list";
  }
  return "?";
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kKeys: return "keys";
    case Method::kValues: return "values";
    case Method::kItems: return "items";
  }
  return "?";
}

void dump_to(const Expr& e, std::ostringstream& out);

void dump_list(const std::vector<ExprPtr>& items, std::ostringstream& out) {
  for (const auto& item : items) {
    out << ' ';
    dump_to(*item, out);
  }
}

void dump_to(const Expr& e, std::ostringstream& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NumberLit>) {
          out << format_number(n.value);
        } else if constexpr (std::is_same_v<T, StringLit>) {
          out << '\'' << n.value << '\'';
        } else if constexpr (std::is_same_v<T, Name>) {
          out << n.id;
        } else if constexpr (std::is_same_v<T, SelfAttr>) {
          out << "self." << n.id;
        } else if constexpr (std::is_same_v<T, Subscript>) {
          out << "(sub ";
          dump_to(*n.target, out);
          dump_list(n.index, out);
          out << ')';
        } else if constexpr (std::is_same_v<T, TupleKey>) {
          out << "(tuple";
          dump_list(n.items, out);
          out << ')';
        } else if constexpr (std::is_same_v<T, BinOp>) {
          out << '(' << op_name(n.op) << ' ';
          dump_to(*n.lhs, out);
          out << ' ';
          dump_to(*n.rhs, out);
          out << ')';
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          out << "(neg ";
          dump_to(*n.operand, out);
          out << ')';
        } else if constexpr (std::is_same_v<T, Compare>) {
          out << '(' << op_name(n.op) << ' ';
          dump_to(*n.lhs, out);
          out << ' ';
          dump_to(*n.rhs, out);
          out << ')';
        } else if constexpr (std::is_same_v<T, Call>) {
          out << "(call " << builtin_name(n.fn);
          dump_list(n.args, out);
          out << ')';
        } else if constexpr (std::is_same_v<T, GeneratorExpr>) {
          out << "(gen ";
          dump_to(*n.body, out);
          for (const auto& f : n.fors) {
            out << " (for [";
            for (std::size_t i = 0; i < f.targets.size(); ++i) {
              if (i > 0) out << ' ';
              out << f.targets[i];
            }
            out << "] ";
            dump_to(*f.iter, out);
            out << ')';
          }
          if (n.condition) {
            out << " (if ";
            dump_to(*n.condition, out);
            out << ')';
          }
          out << ')';
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          out << "(" << method_name(n.method) << ' ';
          dump_to(*n.target, out);
          out << ')';
        }
      },
      e.node);
}

void collect_roots(const Expr& e, std::vector<std::string>& bound,
                   std::set<std::string>& roots) {
  auto is_bound = [&](const std::string& id) {
    for (const auto& b : bound) {
      if (b == id) return true;
    }
    return false;
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Name>) {
          if (!is_bound(n.id)) roots.insert(n.id);
        } else if constexpr (std::is_same_v<T, SelfAttr>) {
          roots.insert(n.id);
        } else if constexpr (std::is_same_v<T, Subscript>) {
          collect_roots(*n.target, bound, roots);
          for (const auto& i : n.index) collect_roots(*i, bound, roots);
        } else if constexpr (std::is_same_v<T, TupleKey>) {
          for (const auto& i : n.items) collect_roots(*i, bound, roots);
        } else if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, Compare>) {
          collect_roots(*n.lhs, bound, roots);
          collect_roots(*n.rhs, bound, roots);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          collect_roots(*n.operand, bound, roots);
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& a : n.args) collect_roots(*a, bound, roots);
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          collect_roots(*n.target, bound, roots);
        } else if constexpr (std::is_same_v<T, GeneratorExpr>) {
          std::size_t mark = bound.size();
          for (const auto& f : n.fors) {
            collect_roots(*f.iter, bound, roots);
            for (const auto& t : f.targets) bound.push_back(t);
          }
          if (n.condition) collect_roots(*n.condition, bound, roots);
          collect_roots(*n.body, bound, roots);
          bound.resize(mark);
        }
      },
      e.node);
}

}  // namespace

ExprPtr parse_expr(std::string_view text) {
  Parser parser(lex(text));
  return parser.parse_all();
}

std::string dump(const Expr& expr) {
  std::ostringstream out;
  dump_to(expr, out);
  return out.str();
}

std::set<std::string> free_roots(const Expr& expr) {
  std::vector<std::string> bound;
  std::set<std::string> roots;
  collect_roots(expr, bound, roots);
  return roots;
}

bool is_constraint_shape(const Expr& expr) {
  if (std::holds_alternative<Compare>(expr.node)) return true;
  if (const auto* gen = std::get_if<GeneratorExpr>(&expr.node)) {
    return std::holds_alternative<Compare>(gen->body->node);
  }
  return false;
}

}  // namespace orpipe
