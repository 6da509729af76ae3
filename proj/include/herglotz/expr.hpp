#ifndef HERGLOTZ_EXPR_HPP
#define HERGLOTZ_EXPR_HPP

// Scalar expression DSL: parsing, evaluation and forward-mode differentiation.
// Expressions are parsed once into an immutable tree and can then be evaluated
// with plain doubles, with first-order duals (gradient) or with second-order
// duals (gradient + Hessian).

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "herglotz/errors.hpp"

namespace herglotz {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Value of a scalar field together with its first (and optionally second)
/// partial derivatives with respect to the field's variables.
struct DualValue {
  double value = 0.0;
  Vec derivs;                 // one slot per variable
  std::optional<Mat> second;  // symmetric; present after eval_with_hessian
};

namespace expr_detail {

// ---------------------------------------------------------------------------
// Differentiation carriers

/// First-order forward dual: value plus gradient.
struct Grad {
  double v = 0.0;
  Vec g;

  static Grad constant(double c, int nvars) { return {c, Vec::Zero(nvars)}; }
  static Grad variable(double x, int idx, int nvars) {
    Grad r{x, Vec::Zero(nvars)};
    r.g[idx] = 1.0;
    return r;
  }
};

/// Second-order forward dual: value, gradient and Hessian.
struct Hess {
  double v = 0.0;
  Vec g;
  Mat h;

  static Hess constant(double c, int nvars) {
    return {c, Vec::Zero(nvars), Mat::Zero(nvars, nvars)};
  }
  static Hess variable(double x, int idx, int nvars) {
    Hess r{x, Vec::Zero(nvars), Mat::Zero(nvars, nvars)};
    r.g[idx] = 1.0;
    return r;
  }
};

inline double value_of(double x) { return x; }
inline double value_of(const Grad& x) { return x.v; }
inline double value_of(const Hess& x) { return x.v; }

// double arithmetic ---------------------------------------------------------

inline double add(double a, double b) { return a + b; }
inline double sub(double a, double b) { return a - b; }
inline double mul(double a, double b) { return a * b; }
inline double neg(double a) { return -a; }
inline double div(double a, double b) { return a / b; }

// chain-rule application: apply(x, f(x), f'(x), f''(x))
inline double chain(double, double f, double, double) { return f; }

// Grad arithmetic ------------------------------------------------------------

inline Grad add(const Grad& a, const Grad& b) { return {a.v + b.v, a.g + b.g}; }
inline Grad sub(const Grad& a, const Grad& b) { return {a.v - b.v, a.g - b.g}; }
inline Grad mul(const Grad& a, const Grad& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g};
}
inline Grad neg(const Grad& a) { return {-a.v, -a.g}; }
inline Grad div(const Grad& a, const Grad& b) {
  const double q = a.v / b.v;
  return {q, (a.g - q * b.g) / b.v};
}
inline Grad chain(const Grad& x, double f, double df, double) {
  return {f, df * x.g};
}

// Hess arithmetic ------------------------------------------------------------

inline Hess add(const Hess& a, const Hess& b) {
  return {a.v + b.v, a.g + b.g, a.h + b.h};
}
inline Hess sub(const Hess& a, const Hess& b) {
  return {a.v - b.v, a.g - b.g, a.h - b.h};
}
inline Hess mul(const Hess& a, const Hess& b) {
  Mat h = a.h * b.v + b.h * a.v;
  h += a.g * b.g.transpose();
  h += b.g * a.g.transpose();
  return {a.v * b.v, a.v * b.g + b.v * a.g, std::move(h)};
}
inline Hess neg(const Hess& a) { return {-a.v, -a.g, -a.h}; }
inline Hess div(const Hess& a, const Hess& b) {
  const double q = a.v / b.v;
  Vec g = (a.g - q * b.g) / b.v;
  Mat h = a.h - q * b.h;
  h -= g * b.g.transpose();
  h -= b.g * g.transpose();
  h /= b.v;
  return {q, std::move(g), std::move(h)};
}
inline Hess chain(const Hess& x, double f, double df, double ddf) {
  Mat h = df * x.h;
  h += ddf * (x.g * x.g.transpose());
  return {f, df * x.g, std::move(h)};
}

// ---------------------------------------------------------------------------
// Exact integer power by squaring (deterministic for any base).
inline double int_pow(double x, long long k) {
  if (k < 0) return 1.0 / int_pow(x, -k);
  double r = 1.0, b = x;
  while (k > 0) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

inline bool is_integer_exponent(double e) {
  return std::floor(e) == e && std::abs(e) <= 1e9;
}

}  // namespace expr_detail

namespace expr_detail {

enum class NodeKind : std::uint8_t {
  constant,
  variable,
  parameter,
  add,
  sub,
  mul,
  div,
  neg,
  pow,
  call
};

enum class FuncKind : std::uint8_t { sin, cos, exp, log, sqrt };

inline const char* func_name(FuncKind f) {
  switch (f) {
    case FuncKind::sin: return "sin";
    case FuncKind::cos: return "cos";
    case FuncKind::exp: return "exp";
    case FuncKind::log: return "log";
    case FuncKind::sqrt: return "sqrt";
  }
  return "?";
}

struct AstNode {
  NodeKind kind = NodeKind::constant;
  double num = 0.0;    // constant value; pow: numeric exponent
  int index = -1;      // variable/parameter index; call: FuncKind
  int a = -1, b = -1;  // children
  int exp_param = -1;  // pow: exponent parameter index, -1 when numeric
};

struct Program {
  std::vector<AstNode> nodes;
  int root = -1;
  std::vector<std::string> variables;
  std::vector<std::string> param_names;
};

// ---------------------------------------------------------------------------
// Lexer

enum class TokKind {
  number,
  ident,
  plus,
  minus,
  star,
  slash,
  caret,
  lparen,
  rparen,
  end
};

struct Token {
  TokKind kind;
  std::size_t pos;
  double num = 0.0;
  std::string text;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[j])))
        ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() &&
               std::isdigit(static_cast<unsigned char>(src[j])))
          ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          ++k;
          while (k < src.size() &&
                 std::isdigit(static_cast<unsigned char>(src[k])))
            ++k;
          j = k;
        }
      }
      double value = 0.0;
      const auto res = std::from_chars(src.data() + i, src.data() + j, value);
      if (res.ec != std::errc{})
        throw ParseError("malformed number literal", i);
      out.push_back({TokKind::number, i, value, std::string(src.substr(i, j - i))});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      out.push_back({TokKind::ident, i, 0.0, std::string(src.substr(i, j - i))});
      i = j;
      continue;
    }
    TokKind k;
    switch (c) {
      case '+': k = TokKind::plus; break;
      case '-': k = TokKind::minus; break;
      case '*': k = TokKind::star; break;
      case '/': k = TokKind::slash; break;
      case '^': k = TokKind::caret; break;
      case '(': k = TokKind::lparen; break;
      case ')': k = TokKind::rparen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({k, i, 0.0, std::string(1, c)});
    ++i;
  }
  out.push_back({TokKind::end, src.size(), 0.0, ""});
  return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser.
//
// Precedence (tightest first): ^  >  unary -  >  * /  >  + -
// '^' is right-associative and its exponent must be constant: a number
// literal, a parameter, or a chain of those combined with '^' and unary '-'.

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& variables,
         const std::vector<std::string>& param_names)
      : tokens_(lex(src)), variables_(variables), param_names_(param_names) {}

  Program run() {
    Program p;
    nodes_ = &p.nodes;
    p.root = parse_expression();
    expect(TokKind::end);
    p.variables = variables_;
    p.param_names = param_names_;
    return p;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  void advance() { ++pos_; }
  void expect(TokKind k) {
    if (cur().kind != k)
      throw ParseError("unexpected '" + describe(cur()) + "'", cur().pos);
    // end token is never consumed
    if (k != TokKind::end) advance();
  }
  static std::string describe(const Token& t) {
    return t.kind == TokKind::end ? std::string("end of input") : t.text;
  }

  int push(AstNode n) {
    nodes_->push_back(n);
    return static_cast<int>(nodes_->size() - 1);
  }

  int parse_expression() {
    int lhs = parse_term();
    while (cur().kind == TokKind::plus || cur().kind == TokKind::minus) {
      const bool plus = cur().kind == TokKind::plus;
      advance();
      int rhs = parse_term();
      lhs = push({plus ? NodeKind::add : NodeKind::sub, 0.0, -1, lhs, rhs});
    }
    return lhs;
  }

  int parse_term() {
    int lhs = parse_unary();
    while (cur().kind == TokKind::star || cur().kind == TokKind::slash) {
      const bool star = cur().kind == TokKind::star;
      advance();
      int rhs = parse_unary();
      lhs = push({star ? NodeKind::mul : NodeKind::div, 0.0, -1, lhs, rhs});
    }
    return lhs;
  }

  int parse_unary() {
    if (cur().kind == TokKind::minus) {
      advance();
      int inner = parse_unary();
      return push({NodeKind::neg, 0.0, -1, inner, -1});
    }
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (cur().kind == TokKind::caret) {
      advance();
      auto [num, param] = parse_exponent();
      AstNode n{NodeKind::pow, num, -1, base, -1};
      n.exp_param = param;
      return push(n);
    }
    return base;
  }

  // Returns {numeric exponent, -1} or {0, parameter index}. Numeric
  // exponent chains like 2^3 are folded right-associatively at parse time.
  std::pair<double, int> parse_exponent() {
    if (cur().kind == TokKind::minus) {
      advance();
      auto [num, param] = parse_exponent();
      if (param >= 0)
        throw ParseError("cannot negate a parameter exponent", cur().pos);
      return {-num, -1};
    }
    if (cur().kind == TokKind::lparen) {
      advance();
      auto e = parse_exponent();
      expect(TokKind::rparen);
      return e;
    }
    if (cur().kind == TokKind::number) {
      const double v = cur().num;
      advance();
      if (cur().kind == TokKind::caret) {
        advance();
        auto [num, param] = parse_exponent();
        if (param >= 0)
          throw ParseError("constant exponent required", cur().pos);
        return {pow_constant(v, num), -1};
      }
      return {v, -1};
    }
    if (cur().kind == TokKind::ident) {
      const int p = find(param_names_, cur().text);
      if (p < 0)
        throw ParseError("exponent must be a constant or a parameter, got '" +
                             cur().text + "'",
                         cur().pos);
      advance();
      if (cur().kind == TokKind::caret)
        throw ParseError("constant exponent required", cur().pos);
      return {0.0, p};
    }
    throw ParseError("expected an exponent, got '" + describe(cur()) + "'",
                     cur().pos);
  }

  static double pow_constant(double base, double e) {
    if (expr_detail::is_integer_exponent(e))
      return expr_detail::int_pow(base, static_cast<long long>(e));
    return std::pow(base, e);
  }

  int parse_primary() {
    const Token& t = cur();
    switch (t.kind) {
      case TokKind::number: {
        advance();
        return push({NodeKind::constant, t.num, -1, -1, -1});
      }
      case TokKind::lparen: {
        advance();
        int inner = parse_expression();
        expect(TokKind::rparen);
        return inner;
      }
      case TokKind::ident: {
        const std::string name = t.text;
        const std::size_t pos = t.pos;
        advance();
        if (int f = func_index(name); f >= 0) {
          if (cur().kind != TokKind::lparen)
            throw ParseError("expected '(' after function '" + name + "'",
                             cur().pos);
          advance();
          int arg = parse_expression();
          expect(TokKind::rparen);
          return push({NodeKind::call, 0.0, f, arg, -1});
        }
        if (int v = find(variables_, name); v >= 0)
          return push({NodeKind::variable, 0.0, v, -1, -1});
        if (int p = find(param_names_, name); p >= 0)
          return push({NodeKind::parameter, 0.0, p, -1, -1});
        throw ParseError("unknown identifier '" + name + "'", pos);
      }
      default:
        throw ParseError("unexpected '" + describe(t) + "'", t.pos);
    }
  }

  static int find(const std::vector<std::string>& names,
                  const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
  }

  static int func_index(const std::string& name) {
    static const char* names[] = {"sin", "cos", "exp", "log", "sqrt"};
    for (int i = 0; i < 5; ++i)
      if (name == names[i]) return i;
    return -1;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> variables_;
  std::vector<std::string> param_names_;
  std::vector<AstNode>* nodes_ = nullptr;
};

// ---------------------------------------------------------------------------
// Evaluation, generic over the scalar carrier T (double, Grad or Hess).

template <class T>
struct Seeder;

template <>
struct Seeder<double> {
  static double constant(double c, int) { return c; }
  static double variable(double x, int, int) { return x; }
};
template <>
struct Seeder<Grad> {
  static Grad constant(double c, int n) { return Grad::constant(c, n); }
  static Grad variable(double x, int i, int n) { return Grad::variable(x, i, n); }
};
template <>
struct Seeder<Hess> {
  static Hess constant(double c, int n) { return Hess::constant(c, n); }
  static Hess variable(double x, int i, int n) { return Hess::variable(x, i, n); }
};

template <class T>
T eval_pow(const T& base, double e) {
  const double x = value_of(base);
  if (is_integer_exponent(e)) {
    const auto k = static_cast<long long>(e);
    if (x == 0.0 && k < 0) throw EvalError("zero base with negative exponent");
    const double f = int_pow(x, k);
    const double df = k == 0 ? 0.0 : k * int_pow(x, k - 1);
    const double ddf = (k == 0 || k == 1) ? 0.0 : k * (k - 1) * int_pow(x, k - 2);
    return chain(base, f, df, ddf);
  }
  if (x <= 0.0)
    throw EvalError("real exponent requires a positive base, got base " +
                    std::to_string(x));
  const double f = std::pow(x, e);
  const double df = e * std::pow(x, e - 1.0);
  const double ddf = e * (e - 1.0) * std::pow(x, e - 2.0);
  return chain(base, f, df, ddf);
}

template <class T>
T eval_call(FuncKind f, const T& arg) {
  const double x = value_of(arg);
  switch (f) {
    case FuncKind::sin: return chain(arg, std::sin(x), std::cos(x), -std::sin(x));
    case FuncKind::cos: return chain(arg, std::cos(x), -std::sin(x), -std::cos(x));
    case FuncKind::exp: {
      const double e = std::exp(x);
      return chain(arg, e, e, e);
    }
    case FuncKind::log:
      if (x <= 0.0)
        throw EvalError("log domain error (argument " + std::to_string(x) + ")");
      return chain(arg, std::log(x), 1.0 / x, -1.0 / (x * x));
    case FuncKind::sqrt: {
      if (x < 0.0)
        throw EvalError("sqrt domain error (argument " + std::to_string(x) + ")");
      if constexpr (std::is_same_v<T, double>) {
        return chain(arg, std::sqrt(x), 0.0, 0.0);
      } else {
        if (x == 0.0)
          throw EvalError("sqrt derivative undefined at 0");
        const double s = std::sqrt(x);
        return chain(arg, s, 0.5 / s, -0.25 / (s * x));
      }
    }
  }
  throw EvalError("unknown function");
}

template <class T>
T eval_node(const std::vector<AstNode>& nodes, int idx, const T* seed_values,
            const std::vector<double>& params, int nvars) {
  const AstNode& n = nodes[static_cast<std::size_t>(idx)];
  switch (n.kind) {
    case NodeKind::constant:
      return Seeder<T>::constant(n.num, nvars);
    case NodeKind::variable:
      return seed_values[n.index];
    case NodeKind::parameter:
      return Seeder<T>::constant(params[static_cast<std::size_t>(n.index)], nvars);
    case NodeKind::add:
      return add(eval_node(nodes, n.a, seed_values, params, nvars),
                 eval_node(nodes, n.b, seed_values, params, nvars));
    case NodeKind::sub:
      return sub(eval_node(nodes, n.a, seed_values, params, nvars),
                 eval_node(nodes, n.b, seed_values, params, nvars));
    case NodeKind::mul:
      return mul(eval_node(nodes, n.a, seed_values, params, nvars),
                 eval_node(nodes, n.b, seed_values, params, nvars));
    case NodeKind::div: {
      T num = eval_node(nodes, n.a, seed_values, params, nvars);
      T den = eval_node(nodes, n.b, seed_values, params, nvars);
      if (value_of(den) == 0.0) throw EvalError("division by zero");
      return div(num, den);
    }
    case NodeKind::neg:
      return neg(eval_node(nodes, n.a, seed_values, params, nvars));
    case NodeKind::pow: {
      T base = eval_node(nodes, n.a, seed_values, params, nvars);
      const double e = n.exp_param >= 0
                           ? params[static_cast<std::size_t>(n.exp_param)]
                           : n.num;
      return eval_pow(base, e);
    }
    case NodeKind::call:
      return eval_call(static_cast<FuncKind>(n.index),
                       eval_node(nodes, n.a, seed_values, params, nvars));
  }
  throw EvalError("corrupt expression tree");
}

// ---------------------------------------------------------------------------
// Printer. Parenthesization preserves the tree shape exactly, so that
// parse(print(ast)) evaluates bit-identically.

inline int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::add:
    case NodeKind::sub: return 1;
    case NodeKind::mul:
    case NodeKind::div: return 2;
    case NodeKind::neg: return 3;
    case NodeKind::pow: return 4;
    default: return 5;
  }
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void print_node(const Program& p, int idx, std::string& out) {
  const AstNode& n = p.nodes[static_cast<std::size_t>(idx)];
  const int prec = precedence(n.kind);
  const auto child = [&](int c, bool needs_parens) {
    if (needs_parens) out += '(';
    print_node(p, c, out);
    if (needs_parens) out += ')';
  };
  switch (n.kind) {
    case NodeKind::constant:
      out += format_double(n.num);
      return;
    case NodeKind::variable:
      out += p.variables[static_cast<std::size_t>(n.index)];
      return;
    case NodeKind::parameter:
      out += p.param_names[static_cast<std::size_t>(n.index)];
      return;
    case NodeKind::add:
    case NodeKind::sub:
    case NodeKind::mul:
    case NodeKind::div: {
      const char* op = n.kind == NodeKind::add   ? "+"
                       : n.kind == NodeKind::sub ? "-"
                       : n.kind == NodeKind::mul ? "*"
                                                 : "/";
      child(n.a, precedence(p.nodes[static_cast<std::size_t>(n.a)].kind) < prec);
      out += op;
      // right child re-parenthesized on equal precedence to keep the exact
      // association (and with it the exact rounding) of the original tree
      child(n.b, precedence(p.nodes[static_cast<std::size_t>(n.b)].kind) <= prec);
      return;
    }
    case NodeKind::neg:
      out += '-';
      child(n.a, precedence(p.nodes[static_cast<std::size_t>(n.a)].kind) < prec);
      return;
    case NodeKind::pow:
      child(n.a, precedence(p.nodes[static_cast<std::size_t>(n.a)].kind) < 5);
      out += '^';
      if (n.exp_param >= 0)
        out += p.param_names[static_cast<std::size_t>(n.exp_param)];
      else if (n.num < 0.0)
        out += "(" + format_double(n.num) + ")";
      else
        out += format_double(n.num);
      return;
    case NodeKind::call:
      out += func_name(static_cast<FuncKind>(n.index));
      out += '(';
      print_node(p, n.a, out);
      out += ')';
      return;
  }
}

inline bool node_depends_on(const Program& p, int idx, int var) {
  const AstNode& n = p.nodes[static_cast<std::size_t>(idx)];
  switch (n.kind) {
    case NodeKind::variable: return n.index == var;
    case NodeKind::constant:
    case NodeKind::parameter: return false;
    case NodeKind::neg:
    case NodeKind::pow:
    case NodeKind::call: return node_depends_on(p, n.a, var);
    default:
      return node_depends_on(p, n.a, var) || node_depends_on(p, n.b, var);
  }
}

}  // namespace expr_detail

// ---------------------------------------------------------------------------

/// A parsed, differentiable scalar expression over a fixed ordered list of
/// variables, with named numeric parameters. Immutable after parse;
/// `with_parameters` rebinds parameter values without reparsing.
class ScalarField {
 public:
  /// Parses `text` over the given variables and parameters.
  /// Throws ParseError (with position) on malformed input, InputError on
  /// malformed variable/parameter declarations.
  static ScalarField parse(std::string_view text,
                           std::vector<std::string> variables,
                           const std::map<std::string, double>& parameters = {}) {
    if (text.empty()) throw InputError("empty expression");
    std::vector<std::string> pnames;
    std::vector<double> pvalues;
    pnames.reserve(parameters.size());
    for (const auto& [k, v] : parameters) {
      pnames.push_back(k);
      pvalues.push_back(v);
    }
    check_names(variables, pnames);
    expr_detail::Parser parser(text, variables, pnames);
    auto program = std::make_shared<const expr_detail::Program>(parser.run());
    return ScalarField(std::string(text), std::move(program), std::move(pvalues));
  }

  /// Evaluates at `point` (one entry per variable).
  double operator()(const Vec& point) const {
    check_point(point);
    try {
      return expr_detail::eval_node<double>(program_->nodes, program_->root,
                                            point.data(), param_values_,
                                            num_variables());
    } catch (const EvalError& e) {
      rethrow_with_assignment(e, point);
    }
    return 0.0;  // unreachable
  }

  /// Value and all first partial derivatives, exact to rounding.
  DualValue eval_with_gradient(const Vec& point) const {
    check_point(point);
    const int n = num_variables();
    std::vector<expr_detail::Grad> seeds;
    seeds.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      seeds.push_back(expr_detail::Grad::variable(point[i], i, n));
    try {
      auto r = expr_detail::eval_node<expr_detail::Grad>(
          program_->nodes, program_->root, seeds.data(), param_values_, n);
      DualValue d;
      d.value = r.v;
      d.derivs = std::move(r.g);
      return d;
    } catch (const EvalError& e) {
      rethrow_with_assignment(e, point);
    }
    return {};  // unreachable
  }

  /// Value, gradient and the full symmetric matrix of second partials.
  DualValue eval_with_hessian(const Vec& point) const {
    check_point(point);
    const int n = num_variables();
    std::vector<expr_detail::Hess> seeds;
    seeds.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      seeds.push_back(expr_detail::Hess::variable(point[i], i, n));
    try {
      auto r = expr_detail::eval_node<expr_detail::Hess>(
          program_->nodes, program_->root, seeds.data(), param_values_, n);
      DualValue d;
      d.value = r.v;
      d.derivs = std::move(r.g);
      d.second = std::move(r.h);
      return d;
    } catch (const EvalError& e) {
      rethrow_with_assignment(e, point);
    }
    return {};  // unreachable
  }

  /// Rebinds parameter values (no reparse). Unknown names are rejected.
  ScalarField with_parameters(const std::map<std::string, double>& updates) const {
    ScalarField copy(*this);
    for (const auto& [k, v] : updates) {
      const auto& names = program_->param_names;
      const auto it = std::find(names.begin(), names.end(), k);
      if (it == names.end())
        throw InputError("unknown parameter '" + k + "'");
      copy.param_values_[static_cast<std::size_t>(it - names.begin())] = v;
    }
    return copy;
  }

  /// True when the expression structurally references variable `var`.
  bool depends_on(int var) const {
    return expr_detail::node_depends_on(*program_, program_->root, var);
  }

  /// Canonical text form; parse(print()) evaluates bit-identically.
  std::string print() const {
    std::string out;
    expr_detail::print_node(*program_, program_->root, out);
    return out;
  }

  const std::string& source() const { return source_; }
  int num_variables() const {
    return static_cast<int>(program_->variables.size());
  }
  const std::vector<std::string>& variables() const {
    return program_->variables;
  }
  const std::vector<std::string>& parameter_names() const {
    return program_->param_names;
  }
  double parameter(const std::string& name) const {
    const auto& names = program_->param_names;
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("unknown parameter '" + name + "'");
    return param_values_[static_cast<std::size_t>(it - names.begin())];
  }

 private:
  ScalarField(std::string source,
              std::shared_ptr<const expr_detail::Program> program,
              std::vector<double> param_values)
      : source_(std::move(source)),
        program_(std::move(program)),
        param_values_(std::move(param_values)) {}

  static void check_names(const std::vector<std::string>& vars,
                          const std::vector<std::string>& params) {
    static const char* reserved[] = {"sin", "cos", "exp", "log", "sqrt"};
    auto check = [&](const std::string& n) {
      if (n.empty()) throw InputError("empty name");
      for (const char* r : reserved)
        if (n == r) throw InputError("'" + n + "' is a reserved function name");
    };
    for (std::size_t i = 0; i < vars.size(); ++i) {
      check(vars[i]);
      for (std::size_t j = i + 1; j < vars.size(); ++j)
        if (vars[i] == vars[j])
          throw InputError("duplicate variable '" + vars[i] + "'");
    }
    for (const auto& p : params) {
      check(p);
      for (const auto& v : vars)
        if (p == v)
          throw InputError("name '" + p + "' is both a variable and a parameter");
    }
  }

  void check_point(const Vec& point) const {
    if (point.size() != num_variables())
      throw InputError("point has " + std::to_string(point.size()) +
                       " entries, expected " + std::to_string(num_variables()));
  }

  [[noreturn]] void rethrow_with_assignment(const EvalError& e,
                                            const Vec& point) const {
    std::ostringstream os;
    os << e.what() << " at ";
    for (int i = 0; i < num_variables(); ++i) {
      if (i) os << ", ";
      os << program_->variables[static_cast<std::size_t>(i)] << "="
         << expr_detail::format_double(point[i]);
    }
    throw EvalError(os.str());
  }

  std::string source_;
  std::shared_ptr<const expr_detail::Program> program_;
  std::vector<double> param_values_;
};

/// Free-function spelling of ScalarField::parse.
inline ScalarField parse(std::string_view text,
                         std::vector<std::string> variables,
                         const std::map<std::string, double>& parameters = {}) {
  return ScalarField::parse(text, std::move(variables), parameters);
}

inline DualValue eval_with_gradient(const ScalarField& f, const Vec& point) {
  return f.eval_with_gradient(point);
}

inline DualValue eval_with_hessian(const ScalarField& f, const Vec& point) {
  return f.eval_with_hessian(point);
}

}  // namespace herglotz

#endif  // HERGLOTZ_EXPR_HPP
