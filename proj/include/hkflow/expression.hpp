#pragma once

// Small arithmetic expression language used for initial conditions, spatial
// profiles and custom fitness models.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          (right associative)
//   atom   := number | 'x' | 'u' | 'pi' | func '(' args ')' | '(' expr ')'
//   func   := sin cos exp log abs min max
//
// Evaluation is templated on the scalar so the same tree yields values
// (double) and forward-mode derivatives (Dual).

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "hkflow/errors.hpp"

namespace hkflow {

/// Forward-mode dual number: value and one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual abs(Dual a) { return {std::abs(a.v), a.v < 0.0 ? -a.d : a.d}; }
inline Dual min(Dual a, Dual b) { return b.v < a.v ? b : a; }
inline Dual max(Dual a, Dual b) { return b.v > a.v ? b : a; }
inline Dual pow(Dual a, Dual b) {
  const double r = std::pow(a.v, b.v);
  if (b.d == 0.0) {
    const double dr = (a.d == 0.0) ? 0.0 : b.v * std::pow(a.v, b.v - 1.0) * a.d;
    return {r, dr};
  }
  return {r, r * (b.d * std::log(a.v) + (a.d == 0.0 ? 0.0 : b.v * a.d / a.v))};
}

namespace detail {

enum class Op { Const, VarX, VarU, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Abs, Min, Max };

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  std::unique_ptr<Node> lhs;
  std::unique_ptr<Node> rhs;
};

inline double lift(double v, const double*) { return v; }
inline Dual lift(double v, const Dual*) { return {v, 0.0}; }

template <class T>
T eval_node(const Node& n, const T& x, const T& u) {
  using std::abs, std::cos, std::exp, std::log, std::pow, std::sin;
  switch (n.op) {
    case Op::Const: return lift(n.value, static_cast<const T*>(nullptr));
    case Op::VarX: return x;
    case Op::VarU: return u;
    case Op::Add: return eval_node(*n.lhs, x, u) + eval_node(*n.rhs, x, u);
    case Op::Sub: return eval_node(*n.lhs, x, u) - eval_node(*n.rhs, x, u);
    case Op::Mul: return eval_node(*n.lhs, x, u) * eval_node(*n.rhs, x, u);
    case Op::Div: return eval_node(*n.lhs, x, u) / eval_node(*n.rhs, x, u);
    case Op::Pow: return pow(eval_node(*n.lhs, x, u), eval_node(*n.rhs, x, u));
    case Op::Neg: return -eval_node(*n.lhs, x, u);
    case Op::Sin: return sin(eval_node(*n.lhs, x, u));
    case Op::Cos: return cos(eval_node(*n.lhs, x, u));
    case Op::Exp: return exp(eval_node(*n.lhs, x, u));
    case Op::Log: return log(eval_node(*n.lhs, x, u));
    case Op::Abs: return abs(eval_node(*n.lhs, x, u));
    case Op::Min: {
      T a = eval_node(*n.lhs, x, u);
      T b = eval_node(*n.rhs, x, u);
      if constexpr (std::is_same_v<T, double>) return std::min(a, b);
      else return min(a, b);
    }
    case Op::Max: {
      T a = eval_node(*n.lhs, x, u);
      T b = eval_node(*n.rhs, x, u);
      if constexpr (std::is_same_v<T, double>) return std::max(a, b);
      else return max(a, b);
    }
  }
  return lift(0.0, static_cast<const T*>(nullptr));
}

inline bool mentions(const Node& n, Op var) {
  if (n.op == var) return true;
  return (n.lhs && mentions(*n.lhs, var)) || (n.rhs && mentions(*n.rhs, var));
}

class Parser {
 public:
  Parser(std::string_view src, bool allow_u) : src_(src), allow_u_(allow_u) {}

  std::unique_ptr<Node> parse() {
    auto n = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression \"" + std::string(src_) + "\" at column " +
                      std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  static std::unique_ptr<Node> make(Op op, std::unique_ptr<Node> l = nullptr,
                                    std::unique_ptr<Node> r = nullptr) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  std::unique_ptr<Node> expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = make(Op::Add, std::move(n), term());
      else if (accept('-')) n = make(Op::Sub, std::move(n), term());
      else return n;
    }
  }

  std::unique_ptr<Node> term() {
    auto n = unary();
    for (;;) {
      if (accept('*')) n = make(Op::Mul, std::move(n), unary());
      else if (accept('/')) n = make(Op::Div, std::move(n), unary());
      else return n;
    }
  }

  std::unique_ptr<Node> unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  std::unique_ptr<Node> power() {
    auto base = atom();
    if (accept('^')) return make(Op::Pow, std::move(base), unary());
    return base;
  }

  std::unique_ptr<Node> atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (accept('(')) {
      auto n = expr();
      expect(')');
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::unique_ptr<Node> number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = make(Op::Const);
    n->value = v;
    return n;
  }

  std::unique_ptr<Node> identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));
    if (name == "x") return make(Op::VarX);
    if (name == "u") {
      if (!allow_u_) fail("variable 'u' is not allowed here");
      return make(Op::VarU);
    }
    if (name == "pi") {
      auto n = make(Op::Const);
      n->value = std::numbers::pi;
      return n;
    }
    static constexpr std::pair<std::string_view, Op> unary_fns[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"abs", Op::Abs}};
    for (const auto& [fname, op] : unary_fns) {
      if (name == fname) {
        expect('(');
        auto arg = expr();
        expect(')');
        return make(op, std::move(arg));
      }
    }
    if (name == "min" || name == "max") {
      expect('(');
      auto a = expr();
      expect(',');
      auto b = expr();
      expect(')');
      return make(name == "min" ? Op::Min : Op::Max, std::move(a), std::move(b));
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view src_;
  bool allow_u_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Immutable parsed expression in the variables x (and optionally u).
class Expression {
 public:
  /// Parses `source`; throws ConfigError on syntax errors.
  static Expression parse(std::string_view source, bool allow_u = false) {
    Expression e;
    e.source_ = std::string(source);
    e.root_ = detail::Parser(source, allow_u).parse();
    return e;
  }

  double operator()(double x, double u = 0.0) const { return detail::eval_node(*root_, x, u); }

  Dual eval(Dual x, Dual u = {}) const { return detail::eval_node(*root_, x, u); }

  double d_dx(double x, double u = 0.0) const { return eval({x, 1.0}, {u, 0.0}).d; }
  double d_du(double x, double u = 0.0) const { return eval({x, 0.0}, {u, 1.0}).d; }

  bool depends_on_x() const { return detail::mentions(*root_, detail::Op::VarX); }
  bool depends_on_u() const { return detail::mentions(*root_, detail::Op::VarU); }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::shared_ptr<const detail::Node> root_;
};

}  // namespace hkflow
