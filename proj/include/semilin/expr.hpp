// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "semilin/error.hpp"

/// Arithmetic expressions for coefficients and nonlinearities.
///
/// Grammar (EBNF, whitespace ignored):
///
///   expr    = term { ("+" | "-") term } ;
///   term    = unary { ("*" | "/") unary } ;
///   unary   = "-" unary | power ;
///   power   = primary [ "^" unary ] ;            (* right associative *)
///   primary = number | variable | constant | call | "(" expr ")" ;
///   call    = function "(" expr { "," expr } ")" ;
///   variable = "x" | "y" | "u1" | "u2" | "s" | "lambda" ;
///   constant = "pi" | "e" ;
///   function = "sin" | "cos" | "exp" | "log" | "sqrt" | "tanh" | "abs"   (* one argument *)
///            | "min" | "max" ;                                          (* two arguments *)
///
/// `^` binds tighter than unary minus, so `-2^2` is -4 and `2^-1` is 0.5.
namespace semilin::expr {

enum class Var : std::uint8_t { X = 0, Y, U1, U2, S, Lambda };
inline constexpr std::size_t kVarCount = 6;

std::string_view var_name(Var v);
std::optional<Var> var_from_name(std::string_view name);

enum class Func : std::uint8_t { Sin, Cos, Exp, Log, Sqrt, Tanh, Abs, Min, Max };
enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  double value;
};
struct Constant {
  std::string name;  // "pi" or "e"
  double value;
};
struct Variable {
  Var var;
};
struct Negate {
  NodePtr operand;
};
struct Binary {
  BinOp op;
  NodePtr lhs;
  NodePtr rhs;
};
struct Call {
  Func func;
  std::vector<NodePtr> args;
};

struct Node {
  std::variant<Number, Constant, Variable, Negate, Binary, Call> kind;
  std::size_t offset = 0;  // byte offset in the source text, for diagnostics
};

/// Values for the free variables of an expression.
class Bindings {
 public:
  Bindings() = default;
  Bindings& set(Var v, double value) {
    values_[static_cast<std::size_t>(v)] = value;
    mask_ |= 1u << static_cast<unsigned>(v);
    return *this;
  }
  /// Throws Config for names outside the variable set.
  Bindings& set(std::string_view name, double value);
  bool bound(Var v) const { return (mask_ >> static_cast<unsigned>(v)) & 1u; }
  double get(Var v) const { return values_[static_cast<std::size_t>(v)]; }

 private:
  std::array<double, kVarCount> values_{};
  unsigned mask_ = 0;
};

/// Immutable expression tree. Copies share the tree.
class Expr {
 public:
  Expr() : Expr(number(0.0)) {}
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  static Expr number(double value);
  static Expr variable(Var v);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  bool uses(Var v) const;
  /// True when the expression is the literal 0 (possibly negated).
  bool is_zero_literal() const;

  /// Throws Config on unbound variables and on domain errors (log or sqrt of
  /// a negative number, division by zero, any non-finite intermediate).
  double eval(const Bindings& b) const;

  /// Canonical text with minimal parentheses; parse(to_string()) reproduces
  /// the tree.
  std::string to_string() const;

 private:
  NodePtr root_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
/// Replace every occurrence of `v` by `replacement`.
Expr substitute(const Expr& e, Var v, const Expr& replacement);

struct ParseError {
  std::size_t offset = 0;
  std::string message;
  std::string expected;  // hint, may be empty
};

using ParseResult = std::variant<Expr, ParseError>;

/// Never throws; every input yields an Expr or a ParseError.
ParseResult parse(std::string_view src);

/// parse() that throws a Config error carrying the offset.
Expr parse_or_throw(std::string_view src, std::string_view what = "expression");

std::string format_parse_error(std::string_view src, const ParseError& err);

/// Sampling axis: the variable and the points at which it is sampled.
struct SampleAxis {
  Var var;
  std::vector<double> points;
};

/// Evenly spaced samples of [lo, hi] (grid >= 2; a single point if lo == hi).
SampleAxis interval_axis(Var v, double lo, double hi, std::size_t grid);

struct SlopeRange {
  double min_slope;
  double max_slope;
};

/// Extreme finite-difference slopes of `e` with respect to `var` over the
/// tensor grid of `axes`. `var` must be one of the axes. Step is
/// 1e-6 * width of the var axis (1e-6 when the axis is a single point).
/// Central differences in the interior of the axis, one-sided inward at the
/// ends. Variables not on an axis are taken from `fixed`.
SlopeRange sampled_partial(const Expr& e, Var var, const std::vector<SampleAxis>& axes,
                           const Bindings& fixed = {});

/// Convenience form: per-variable intervals with `grid` samples each.
SlopeRange sampled_partial(const Expr& e, Var var,
                           const std::vector<std::pair<Var, std::pair<double, double>>>& box,
                           std::size_t grid, const Bindings& fixed = {});

}  // namespace semilin::expr
