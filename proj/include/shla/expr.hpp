#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "shla/rational.hpp"

namespace shla {

class ExprError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parse failure; `offset` is the byte position in the input text.
class ParseError : public ExprError {
public:
  ParseError(const std::string& msg, std::size_t offset)
      : ExprError(msg + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

class UnboundSymbolError : public ExprError {
public:
  explicit UnboundSymbolError(const std::string& sym)
      : ExprError("unbound symbol '" + sym + "'"), symbol(sym) {}
  std::string symbol;
};

enum class ExprKind {
  Constant,
  Pi,
  Symbol,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Sin,
  Cos,
  Exp,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  Rational value;    // Constant
  std::string name;  // Symbol
  int exponent = 0;  // Pow
  ExprPtr a, b;
};

using EvalEnv = std::unordered_map<std::string, double>;

/// Immutable symbolic expression over chart coordinates and named parameters.
/// Constants are exact rationals plus the symbol pi; the only folding done at
/// construction is exact constant arithmetic and zero/one elision.
class Expr {
public:
  Expr() : node_(constant_node(Rational(0))) {}
  explicit Expr(ExprPtr n) : node_(std::move(n)) {}

  static Expr constant(const Rational& r) { return Expr(constant_node(r)); }
  static Expr integer(std::int64_t n) { return constant(Rational(n)); }
  static Expr pi() {
    static ExprPtr node = std::make_shared<ExprNode>(ExprNode{ExprKind::Pi, {}, {}, 0, nullptr, nullptr});
    return Expr(node);
  }
  static Expr symbol(const std::string& name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Symbol;
    n->name = name;
    return Expr(n);
  }

  const ExprNode& node() const { return *node_; }
  ExprPtr ptr() const { return node_; }
  ExprKind kind() const { return node_->kind; }

  bool is_zero() const { return node_->kind == ExprKind::Constant && node_->value.is_zero(); }
  bool is_one() const { return node_->kind == ExprKind::Constant && node_->value.is_one(); }
  bool is_constant() const { return node_->kind == ExprKind::Constant; }

  double eval(const EvalEnv& env) const { return eval_node(*node_, env); }

  Expr diff(const std::string& coord) const;

  std::string str() const {
    std::ostringstream os;
    print(*node_, os, 0);
    return os.str();
  }

  void free_symbols(std::set<std::string>& out) const { collect_symbols(*node_, out); }
  std::set<std::string> free_symbols() const {
    std::set<std::string> out;
    free_symbols(out);
    return out;
  }
  bool depends_on(const std::string& sym) const {
    auto syms = free_symbols();
    return syms.count(sym) > 0;
  }

  /// Substitute symbols by expressions (used to bind chart parameters).
  Expr substitute(const std::map<std::string, Expr>& repl) const;

private:
  static ExprPtr constant_node(const Rational& r) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Constant;
    n->value = r;
    return n;
  }

  static double eval_node(const ExprNode& n, const EvalEnv& env);
  static void print(const ExprNode& n, std::ostringstream& os, int parent_prec);
  static void collect_symbols(const ExprNode& n, std::set<std::string>& out);

  ExprPtr node_;

  friend Expr make_binary(ExprKind k, const Expr& a, const Expr& b);
  friend Expr make_unary(ExprKind k, const Expr& a);
  friend Expr pow(const Expr& a, int e);
};

Expr make_binary(ExprKind k, const Expr& a, const Expr& b);
Expr make_unary(ExprKind k, const Expr& a);

inline Expr operator+(const Expr& a, const Expr& b) { return make_binary(ExprKind::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return make_binary(ExprKind::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return make_binary(ExprKind::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return make_binary(ExprKind::Div, a, b); }
inline Expr operator-(const Expr& a) { return make_unary(ExprKind::Neg, a); }
inline Expr sin(const Expr& a) { return make_unary(ExprKind::Sin, a); }
inline Expr cos(const Expr& a) { return make_unary(ExprKind::Cos, a); }
inline Expr exp(const Expr& a) { return make_unary(ExprKind::Exp, a); }

inline Expr pow(const Expr& a, int e) {
  if (e == 0) return Expr::integer(1);
  if (e == 1) return a;
  if (a.is_constant()) return Expr::constant(a.node().value.pow(e));
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Pow;
  n->exponent = e;
  n->a = a.ptr();
  return Expr(n);
}

inline Expr make_binary(ExprKind k, const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    const Rational& x = a.node().value;
    const Rational& y = b.node().value;
    switch (k) {
      case ExprKind::Add: return Expr::constant(x + y);
      case ExprKind::Sub: return Expr::constant(x - y);
      case ExprKind::Mul: return Expr::constant(x * y);
      case ExprKind::Div:
        if (!y.is_zero()) return Expr::constant(x / y);
        break;
      default: break;
    }
  }
  switch (k) {
    case ExprKind::Add:
      if (a.is_zero()) return b;
      if (b.is_zero()) return a;
      break;
    case ExprKind::Sub:
      if (b.is_zero()) return a;
      if (a.is_zero()) return make_unary(ExprKind::Neg, b);
      break;
    case ExprKind::Mul:
      if (a.is_zero() || b.is_zero()) return Expr::integer(0);
      if (a.is_one()) return b;
      if (b.is_one()) return a;
      break;
    case ExprKind::Div:
      if (a.is_zero()) return Expr::integer(0);
      if (b.is_one()) return a;
      break;
    default: break;
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = a.ptr();
  n->b = b.ptr();
  return Expr(n);
}

inline Expr make_unary(ExprKind k, const Expr& a) {
  if (k == ExprKind::Neg) {
    if (a.is_constant()) return Expr::constant(-a.node().value);
    if (a.kind() == ExprKind::Neg) return Expr(a.node().a);
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = a.ptr();
  return Expr(n);
}

inline double Expr::eval_node(const ExprNode& n, const EvalEnv& env) {
  switch (n.kind) {
    case ExprKind::Constant: return n.value.to_double();
    case ExprKind::Pi: return M_PI;
    case ExprKind::Symbol: {
      auto it = env.find(n.name);
      if (it == env.end()) throw UnboundSymbolError(n.name);
      return it->second;
    }
    case ExprKind::Add: return eval_node(*n.a, env) + eval_node(*n.b, env);
    case ExprKind::Sub: return eval_node(*n.a, env) - eval_node(*n.b, env);
    case ExprKind::Mul: return eval_node(*n.a, env) * eval_node(*n.b, env);
    case ExprKind::Div: {
      double num = eval_node(*n.a, env);
      double den = eval_node(*n.b, env);
      if (den == 0.0) {
        std::ostringstream os;
        print(*n.b, os, 0);
        throw ExprError("division by zero in subexpression '" + os.str() + "'");
      }
      return num / den;
    }
    case ExprKind::Neg: return -eval_node(*n.a, env);
    case ExprKind::Pow: return std::pow(eval_node(*n.a, env), n.exponent);
    case ExprKind::Sin: return std::sin(eval_node(*n.a, env));
    case ExprKind::Cos: return std::cos(eval_node(*n.a, env));
    case ExprKind::Exp: return std::exp(eval_node(*n.a, env));
  }
  throw ExprError("corrupt expression node");
}

inline Expr Expr::diff(const std::string& coord) const {
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprKind::Constant:
    case ExprKind::Pi:
      return Expr::integer(0);
    case ExprKind::Symbol:
      return n.name == coord ? Expr::integer(1) : Expr::integer(0);
    case ExprKind::Add: return Expr(n.a).diff(coord) + Expr(n.b).diff(coord);
    case ExprKind::Sub: return Expr(n.a).diff(coord) - Expr(n.b).diff(coord);
    case ExprKind::Mul:
      return Expr(n.a).diff(coord) * Expr(n.b) + Expr(n.a) * Expr(n.b).diff(coord);
    case ExprKind::Div: {
      Expr u(n.a), v(n.b);
      return (u.diff(coord) * v - u * v.diff(coord)) / (v * v);
    }
    case ExprKind::Neg: return -Expr(n.a).diff(coord);
    case ExprKind::Pow: {
      Expr base(n.a);
      return Expr::integer(n.exponent) * pow(base, n.exponent - 1) * base.diff(coord);
    }
    case ExprKind::Sin: return cos(Expr(n.a)) * Expr(n.a).diff(coord);
    case ExprKind::Cos: return -sin(Expr(n.a)) * Expr(n.a).diff(coord);
    case ExprKind::Exp: return Expr(*this) * Expr(n.a).diff(coord);
  }
  throw ExprError("corrupt expression node");
}

inline Expr Expr::substitute(const std::map<std::string, Expr>& repl) const {
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprKind::Constant:
    case ExprKind::Pi:
      return *this;
    case ExprKind::Symbol: {
      auto it = repl.find(n.name);
      return it == repl.end() ? *this : it->second;
    }
    case ExprKind::Pow: return pow(Expr(n.a).substitute(repl), n.exponent);
    case ExprKind::Neg:
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
      return make_unary(n.kind, Expr(n.a).substitute(repl));
    default:
      return make_binary(n.kind, Expr(n.a).substitute(repl), Expr(n.b).substitute(repl));
  }
}

// Precedence: 1 add/sub, 2 mul/div, 3 unary minus, 4 pow, 5 atom.
inline void Expr::print(const ExprNode& n, std::ostringstream& os, int parent_prec) {
  auto paren = [&](int prec, auto&& body) {
    if (prec < parent_prec) {
      os << "(";
      body();
      os << ")";
    } else {
      body();
    }
  };
  switch (n.kind) {
    case ExprKind::Constant:
      if (n.value.den() == 1 && n.value.num() < 0) {
        paren(3, [&] { os << n.value.str(); });
      } else if (n.value.den() != 1) {
        paren(2, [&] { os << n.value.num() << "/" << n.value.den(); });
      } else {
        os << n.value.str();
      }
      return;
    case ExprKind::Pi: os << "pi"; return;
    case ExprKind::Symbol: os << n.name; return;
    case ExprKind::Add:
      paren(1, [&] {
        print(*n.a, os, 1);
        os << " + ";
        print(*n.b, os, 1);
      });
      return;
    case ExprKind::Sub:
      paren(1, [&] {
        print(*n.a, os, 1);
        os << " - ";
        print(*n.b, os, 2);
      });
      return;
    case ExprKind::Mul:
      paren(2, [&] {
        print(*n.a, os, 2);
        os << "*";
        print(*n.b, os, 3);
      });
      return;
    case ExprKind::Div:
      paren(2, [&] {
        print(*n.a, os, 2);
        os << "/";
        print(*n.b, os, 4);
      });
      return;
    case ExprKind::Neg:
      paren(3, [&] {
        os << "-";
        print(*n.a, os, 3);
      });
      return;
    case ExprKind::Pow:
      paren(4, [&] {
        print(*n.a, os, 5);
        os << "^" << n.exponent;
      });
      return;
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
      os << (n.kind == ExprKind::Sin ? "sin" : n.kind == ExprKind::Cos ? "cos" : "exp") << "(";
      print(*n.a, os, 0);
      os << ")";
      return;
  }
}

inline void Expr::collect_symbols(const ExprNode& n, std::set<std::string>& out) {
  switch (n.kind) {
    case ExprKind::Symbol: out.insert(n.name); return;
    case ExprKind::Constant:
    case ExprKind::Pi:
      return;
    default:
      if (n.a) collect_symbols(*n.a, out);
      if (n.b) collect_symbols(*n.b, out);
  }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

private:
  Expr parse_sum() {
    Expr acc = parse_product();
    for (;;) {
      skip_ws();
      if (match('+')) {
        acc = acc + parse_product();
      } else if (match('-')) {
        acc = acc - parse_product();
      } else {
        return acc;
      }
    }
  }

  Expr parse_product() {
    Expr acc = parse_unary();
    for (;;) {
      skip_ws();
      if (match('*')) {
        acc = acc * parse_unary();
      } else if (match('/')) {
        acc = acc / parse_unary();
      } else {
        return acc;
      }
    }
  }

  Expr parse_unary() {
    skip_ws();
    if (match('-')) return -parse_unary();
    if (match('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    skip_ws();
    if (match('^')) {
      int e = parse_int_exponent();
      return pow(base, e);
    }
    return base;
  }

  int parse_int_exponent() {
    skip_ws();
    bool paren = match('(');
    skip_ws();
    bool neg = match('-');
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) throw ParseError("expected integer exponent", pos_);
    int v = std::stoi(text_.substr(start, pos_ - start));
    if (paren) {
      skip_ws();
      if (!match(')')) throw ParseError("expected ')' after exponent", pos_);
    }
    return neg ? -v : v;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      skip_ws();
      if (!match(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    std::string token = text_.substr(start, pos_ - start);
    int exponent = 0;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      bool neg = false;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        neg = text_[pos_] == '-';
        ++pos_;
      }
      std::size_t dstart = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == dstart) {
        pos_ = save;  // a bare identifier follows; not an exponent
      } else {
        exponent = std::stoi(text_.substr(dstart, pos_ - dstart));
        if (neg) exponent = -exponent;
      }
    }
    try {
      Rational r = Rational::from_decimal_string(token);
      if (exponent > 0)
        for (int i = 0; i < exponent; ++i) r = r * Rational(10);
      else
        for (int i = 0; i < -exponent; ++i) r = r / Rational(10);
      return Expr::constant(r);
    } catch (const std::exception&) {
      throw ParseError("bad numeric literal '" + token + "'", start);
    }
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name == "pi") return Expr::pi();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      Expr arg = parse_sum();
      skip_ws();
      if (!match(')')) throw ParseError("expected ')' after function argument", pos_);
      if (name == "sin") return sin(arg);
      if (name == "cos") return cos(arg);
      if (name == "exp") return exp(arg);
      throw ParseError("unknown function '" + name + "'", start);
    }
    return Expr::symbol(name);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool match(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expr(const std::string& text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Linear normalization: decide structural vanishing of sums like
// sin(y1) + (-1)*sin(y1) without a general simplifier.
// ---------------------------------------------------------------------------

namespace detail {

inline void accumulate_terms(const Expr& e, const Rational& scale,
                             std::map<std::string, Rational>& acc) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Add:
      accumulate_terms(Expr(n.a), scale, acc);
      accumulate_terms(Expr(n.b), scale, acc);
      return;
    case ExprKind::Sub:
      accumulate_terms(Expr(n.a), scale, acc);
      accumulate_terms(Expr(n.b), -scale, acc);
      return;
    case ExprKind::Neg:
      accumulate_terms(Expr(n.a), -scale, acc);
      return;
    case ExprKind::Constant:
      acc["1"] = acc.count("1") ? acc["1"] + scale * n.value : scale * n.value;
      return;
    case ExprKind::Mul: {
      Expr a(n.a), b(n.b);
      if (a.is_constant()) {
        accumulate_terms(b, scale * a.node().value, acc);
        return;
      }
      if (b.is_constant()) {
        accumulate_terms(a, scale * b.node().value, acc);
        return;
      }
      break;
    }
    case ExprKind::Div: {
      Expr b(n.b);
      if (b.is_constant() && !b.node().value.is_zero()) {
        accumulate_terms(Expr(n.a), scale / b.node().value, acc);
        return;
      }
      break;
    }
    default: break;
  }
  std::string key = e.str();
  acc[key] = acc.count(key) ? acc[key] + scale : scale;
}

}  // namespace detail

/// True when the expression reduces to zero under constant folding plus
/// collection of rational multiples of syntactically identical terms.
inline bool structurally_zero(const Expr& e) {
  std::map<std::string, Rational> acc;
  detail::accumulate_terms(e, Rational(1), acc);
  for (const auto& [key, coeff] : acc)
    if (!coeff.is_zero()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Compiled evaluation for grids: symbols resolved to slots once.
// ---------------------------------------------------------------------------

class CompiledExpr {
public:
  CompiledExpr() = default;

  CompiledExpr(const Expr& e, const std::vector<std::string>& slot_names) {
    std::unordered_map<std::string, int> slots;
    for (std::size_t i = 0; i < slot_names.size(); ++i)
      slots[slot_names[i]] = static_cast<int>(i);
    root_ = emit(e.node(), slots);
  }

  /// `slots` must follow the ordering given at construction.
  double eval(const double* slots) const {
    for (const Op& op : program_) {
      double a = op.a >= 0 ? regs_[op.a] : 0.0;
      double b = op.b >= 0 ? regs_[op.b] : 0.0;
      double& r = regs_[op.target];
      switch (op.kind) {
        case ExprKind::Constant: r = op.constant; break;
        case ExprKind::Pi: r = M_PI; break;
        case ExprKind::Symbol: r = slots[op.slot]; break;
        case ExprKind::Add: r = a + b; break;
        case ExprKind::Sub: r = a - b; break;
        case ExprKind::Mul: r = a * b; break;
        case ExprKind::Div: r = a / b; break;
        case ExprKind::Neg: r = -a; break;
        case ExprKind::Pow: r = std::pow(a, op.slot); break;
        case ExprKind::Sin: r = std::sin(a); break;
        case ExprKind::Cos: r = std::cos(a); break;
        case ExprKind::Exp: r = std::exp(a); break;
      }
    }
    return regs_[root_];
  }

private:
  struct Op {
    ExprKind kind;
    int target;
    int a = -1, b = -1;
    int slot = 0;  // symbol slot index or integer exponent
    double constant = 0.0;
  };

  int emit(const ExprNode& n, const std::unordered_map<std::string, int>& slots) {
    Op op;
    op.kind = n.kind;
    switch (n.kind) {
      case ExprKind::Constant: op.constant = n.value.to_double(); break;
      case ExprKind::Pi: break;
      case ExprKind::Symbol: {
        auto it = slots.find(n.name);
        if (it == slots.end()) throw UnboundSymbolError(n.name);
        op.slot = it->second;
        break;
      }
      case ExprKind::Pow:
        op.a = emit(*n.a, slots);
        op.slot = n.exponent;
        break;
      default:
        op.a = emit(*n.a, slots);
        if (n.b) op.b = emit(*n.b, slots);
    }
    op.target = static_cast<int>(regs_.size());
    regs_.push_back(0.0);
    program_.push_back(op);
    return op.target;
  }

  std::vector<Op> program_;
  mutable std::vector<double> regs_;
  int root_ = 0;
};

}  // namespace shla
