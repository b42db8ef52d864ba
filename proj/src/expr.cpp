// SPDX-License-Identifier: Apache-2.0
#include "semilin/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

namespace semilin::expr {

namespace {

constexpr std::array<std::string_view, kVarCount> kVarNames{"x", "y", "u1", "u2", "s", "lambda"};

struct FuncInfo {
  std::string_view name;
  Func func;
  std::size_t arity;
};

constexpr std::array<FuncInfo, 9> kFuncs{{
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},
    {"sqrt", Func::Sqrt, 1},
    {"tanh", Func::Tanh, 1},
    {"abs", Func::Abs, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
}};

const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const FuncInfo& func_info(Func f) {
  for (const auto& info : kFuncs) {
    if (info.func == f) return info;
  }
  return kFuncs[0];
}

NodePtr make(std::variant<Number, Constant, Variable, Negate, Binary, Call> kind, std::size_t offset) {
  return std::make_shared<const Node>(Node{std::move(kind), offset});
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End, Bad };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) return {Tok::End, start, {}};
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      return {Tok::Ident, start, src_.substr(start, pos_ - start)};
    }
    ++pos_;
    switch (c) {
      case '+': return {Tok::Plus, start, src_.substr(start, 1)};
      case '-': return {Tok::Minus, start, src_.substr(start, 1)};
      case '*': return {Tok::Star, start, src_.substr(start, 1)};
      case '/': return {Tok::Slash, start, src_.substr(start, 1)};
      case '^': return {Tok::Caret, start, src_.substr(start, 1)};
      case '(': return {Tok::LParen, start, src_.substr(start, 1)};
      case ')': return {Tok::RParen, start, src_.substr(start, 1)};
      case ',': return {Tok::Comma, start, src_.substr(start, 1)};
      default: return {Tok::Bad, start, src_.substr(start, 1)};
    }
  }

 private:
  Token lex_number(std::size_t start) {
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) return {Tok::Bad, start, src_.substr(start, pos_ - start)};
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      // Only an exponent if digits follow; otherwise leave 'e' for the next token.
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        digits();
      }
    }
    const std::string_view text = src_.substr(start, pos_ - start);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || !std::isfinite(value)) return {Tok::Bad, start, text};
    return {Tok::Number, start, text, value};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Pratt parser

constexpr int kUnaryBp = 30;
constexpr int kMaxDepth = 200;

struct Infix {
  BinOp op;
  int left_bp;
  int right_bp;
};

std::optional<Infix> infix_of(Tok t) {
  switch (t) {
    case Tok::Plus: return Infix{BinOp::Add, 10, 11};
    case Tok::Minus: return Infix{BinOp::Sub, 10, 11};
    case Tok::Star: return Infix{BinOp::Mul, 20, 21};
    case Tok::Slash: return Infix{BinOp::Div, 20, 21};
    case Tok::Caret: return Infix{BinOp::Pow, 41, 40};
    default: return std::nullopt;
  }
}

struct Failure {
  ParseError error;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), lexer_(src) { advance(); }

  NodePtr parse_all() {
    NodePtr root = parse_expr(0);
    if (tok_.kind != Tok::End) fail(tok_.offset, fmt::format("unexpected trailing '{}'", tok_.text), "end of input");
    return root;
  }

 private:
  [[noreturn]] void fail(std::size_t offset, std::string message, std::string expected = {}) {
    throw Failure{ParseError{offset, std::move(message), std::move(expected)}};
  }

  void advance() {
    tok_ = lexer_.next();
    if (tok_.kind == Tok::Bad) fail(tok_.offset, fmt::format("invalid token '{}'", tok_.text));
  }

  void expect(Tok kind, std::string_view what) {
    if (tok_.kind != kind) {
      fail(tok_.offset, tok_.kind == Tok::End ? "unexpected end of input" : fmt::format("unexpected '{}'", tok_.text),
           std::string(what));
    }
    advance();
  }

  NodePtr parse_expr(int min_bp) {
    if (++depth_ > kMaxDepth) fail(tok_.offset, "expression nested too deeply");
    NodePtr lhs = parse_prefix();
    while (auto infix = infix_of(tok_.kind)) {
      if (infix->left_bp < min_bp) break;
      const std::size_t at = tok_.offset;
      advance();
      NodePtr rhs = parse_expr(infix->right_bp);
      lhs = make(Binary{infix->op, std::move(lhs), std::move(rhs)}, at);
    }
    --depth_;
    return lhs;
  }

  NodePtr parse_prefix() {
    const Token t = tok_;
    switch (t.kind) {
      case Tok::Number:
        advance();
        return make(Number{t.number}, t.offset);
      case Tok::Minus: {
        advance();
        NodePtr operand = parse_expr(kUnaryBp);
        return make(Negate{std::move(operand)}, t.offset);
      }
      case Tok::LParen: {
        advance();
        NodePtr inner = parse_expr(0);
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: return parse_identifier(t);
      case Tok::End: fail(t.offset, "unexpected end of input", "number, variable, function or '('");
      default: fail(t.offset, fmt::format("unexpected '{}'", t.text), "number, variable, function or '('");
    }
  }

  NodePtr parse_identifier(const Token& t) {
    advance();
    if (auto v = var_from_name(t.text)) return make(Variable{*v}, t.offset);
    if (t.text == "pi") return make(Constant{"pi", std::numbers::pi}, t.offset);
    if (t.text == "e") return make(Constant{"e", std::numbers::e}, t.offset);
    const FuncInfo* f = find_func(t.text);
    if (f == nullptr) {
      fail(t.offset, fmt::format("unknown identifier '{}'", t.text),
           "one of x, y, u1, u2, s, lambda, pi, e or a function name");
    }
    expect(Tok::LParen, fmt::format("'(' after function '{}'", t.text));
    std::vector<NodePtr> args;
    args.push_back(parse_expr(0));
    while (tok_.kind == Tok::Comma) {
      advance();
      args.push_back(parse_expr(0));
    }
    if (args.size() != f->arity) {
      fail(t.offset, fmt::format("function '{}' takes {} argument(s), got {}", f->name, f->arity, args.size()));
    }
    expect(Tok::RParen, "')'");
    return make(Call{f->func, std::move(args)}, t.offset);
  }

  std::string_view src_;
  Lexer lexer_;
  Token tok_{Tok::End, 0, {}};
  int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

[[noreturn]] void domain_error(const Node& n, const std::string& what) {
  throw config_error(fmt::format("expression domain error at offset {}: {}", n.offset, what));
}

double eval_node(const Node& n, const Bindings& b);

double checked(const Node& n, double v, std::string_view what) {
  if (!std::isfinite(v)) domain_error(n, fmt::format("{} is not finite", what));
  return v;
}

struct Evaluator {
  const Node& node;
  const Bindings& b;

  double operator()(const Number& x) const { return x.value; }
  double operator()(const Constant& c) const { return c.value; }
  double operator()(const Variable& v) const {
    if (!b.bound(v.var)) {
      throw config_error(fmt::format("unbound variable '{}' at offset {}", var_name(v.var), node.offset));
    }
    return b.get(v.var);
  }
  double operator()(const Negate& neg) const { return -eval_node(*neg.operand, b); }
  double operator()(const Binary& bin) const {
    const double l = eval_node(*bin.lhs, b);
    const double r = eval_node(*bin.rhs, b);
    switch (bin.op) {
      case BinOp::Add: return checked(node, l + r, "sum");
      case BinOp::Sub: return checked(node, l - r, "difference");
      case BinOp::Mul: return checked(node, l * r, "product");
      case BinOp::Div:
        if (r == 0.0) domain_error(node, "division by zero");
        return checked(node, l / r, "quotient");
      case BinOp::Pow: return checked(node, std::pow(l, r), fmt::format("{}^{}", l, r));
    }
    return 0.0;
  }
  double operator()(const Call& call) const {
    const double a = eval_node(*call.args[0], b);
    switch (call.func) {
      case Func::Sin: return std::sin(a);
      case Func::Cos: return std::cos(a);
      case Func::Exp: return checked(node, std::exp(a), "exp");
      case Func::Log:
        if (!(a > 0.0)) domain_error(node, fmt::format("log of non-positive value {}", a));
        return std::log(a);
      case Func::Sqrt:
        if (a < 0.0) domain_error(node, fmt::format("sqrt of negative value {}", a));
        return std::sqrt(a);
      case Func::Tanh: return std::tanh(a);
      case Func::Abs: return std::abs(a);
      case Func::Min: return std::min(a, eval_node(*call.args[1], b));
      case Func::Max: return std::max(a, eval_node(*call.args[1], b));
    }
    return 0.0;
  }
};

double eval_node(const Node& n, const Bindings& b) { return std::visit(Evaluator{n, b}, n.kind); }

// ---------------------------------------------------------------------------
// Printing

int precedence(const Node& n) {
  if (const auto* bin = std::get_if<Binary>(&n.kind)) {
    switch (bin->op) {
      case BinOp::Add:
      case BinOp::Sub: return 10;
      case BinOp::Mul:
      case BinOp::Div: return 20;
      case BinOp::Pow: return 40;
    }
  }
  if (std::holds_alternative<Negate>(n.kind)) return kUnaryBp;
  return 100;
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const Node& n, std::string& out) {
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Number>) {
          out += fmt::format("{}", k.value);  // shortest round-trip representation
        } else if constexpr (std::is_same_v<T, Constant>) {
          out += k.name;
        } else if constexpr (std::is_same_v<T, Variable>) {
          out += var_name(k.var);
        } else if constexpr (std::is_same_v<T, Negate>) {
          out += '-';
          print_child(*k.operand, precedence(*k.operand) < kUnaryBp, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          const int p = precedence(n);
          const int lp = precedence(*k.lhs);
          const int rp = precedence(*k.rhs);
          const bool right_assoc = k.op == BinOp::Pow;
          print_child(*k.lhs, right_assoc ? lp <= p : lp < p, out);
          constexpr std::array<std::string_view, 5> ops{" + ", " - ", " * ", " / ", "^"};
          out += ops[static_cast<std::size_t>(k.op)];
          print_child(*k.rhs, right_assoc ? rp < p : rp <= p, out);
        } else if constexpr (std::is_same_v<T, Call>) {
          out += func_info(k.func).name;
          out += '(';
          for (std::size_t i = 0; i < k.args.size(); ++i) {
            if (i > 0) out += ", ";
            print_node(*k.args[i], out);
          }
          out += ')';
        }
      },
      n.kind);
}

NodePtr substitute_node(const NodePtr& n, Var v, const NodePtr& replacement) {
  return std::visit(
      [&](const auto& k) -> NodePtr {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Variable>) {
          return k.var == v ? replacement : n;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return make(Negate{substitute_node(k.operand, v, replacement)}, n->offset);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return make(Binary{k.op, substitute_node(k.lhs, v, replacement), substitute_node(k.rhs, v, replacement)},
                      n->offset);
        } else if constexpr (std::is_same_v<T, Call>) {
          std::vector<NodePtr> args;
          for (const auto& a : k.args) args.push_back(substitute_node(a, v, replacement));
          return make(Call{k.func, std::move(args)}, n->offset);
        } else {
          return n;
        }
      },
      n->kind);
}

bool uses_node(const Node& n, Var v) {
  return std::visit(
      [&](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Variable>) {
          return k.var == v;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return uses_node(*k.operand, v);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return uses_node(*k.lhs, v) || uses_node(*k.rhs, v);
        } else if constexpr (std::is_same_v<T, Call>) {
          return std::any_of(k.args.begin(), k.args.end(), [&](const NodePtr& a) { return uses_node(*a, v); });
        } else {
          return false;
        }
      },
      n.kind);
}

}  // namespace

std::string_view var_name(Var v) { return kVarNames[static_cast<std::size_t>(v)]; }

std::optional<Var> var_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kVarNames.size(); ++i) {
    if (kVarNames[i] == name) return static_cast<Var>(i);
  }
  return std::nullopt;
}

Bindings& Bindings::set(std::string_view name, double value) {
  const auto v = var_from_name(name);
  if (!v) throw config_error(fmt::format("unknown variable '{}'", name));
  return set(*v, value);
}

Expr Expr::number(double value) { return Expr(make(Number{value}, 0)); }
Expr Expr::variable(Var v) { return Expr(make(Variable{v}, 0)); }

bool Expr::uses(Var v) const { return uses_node(*root_, v); }

bool Expr::is_zero_literal() const {
  const Node* n = root_.get();
  while (const auto* neg = std::get_if<Negate>(&n->kind)) n = neg->operand.get();
  const auto* num = std::get_if<Number>(&n->kind);
  return num != nullptr && num->value == 0.0;
}

double Expr::eval(const Bindings& b) const { return eval_node(*root_, b); }

std::string Expr::to_string() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(make(Binary{BinOp::Add, a.root_ptr(), b.root_ptr()}, 0)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make(Binary{BinOp::Mul, a.root_ptr(), b.root_ptr()}, 0)); }

Expr substitute(const Expr& e, Var v, const Expr& replacement) {
  return Expr(substitute_node(e.root_ptr(), v, replacement.root_ptr()));
}

ParseResult parse(std::string_view src) {
  try {
    Parser p(src);
    return Expr(p.parse_all());
  } catch (const Failure& f) {
    return f.error;
  } catch (const std::bad_alloc&) {
    return ParseError{0, "out of memory while parsing", {}};
  }
}

std::string format_parse_error(std::string_view src, const ParseError& err) {
  std::string msg = fmt::format("{} at offset {} in \"{}\"", err.message, err.offset, src);
  if (!err.expected.empty()) msg += fmt::format(" (expected {})", err.expected);
  return msg;
}

Expr parse_or_throw(std::string_view src, std::string_view what) {
  auto result = parse(src);
  if (auto* err = std::get_if<ParseError>(&result)) {
    throw config_error(fmt::format("cannot parse {}: {}", what, format_parse_error(src, *err)));
  }
  return std::get<Expr>(std::move(result));
}

// ---------------------------------------------------------------------------
// Sampled derivatives

SampleAxis interval_axis(Var v, double lo, double hi, std::size_t grid) {
  if (hi < lo) throw invalid_argument(fmt::format("empty sampling interval [{}, {}]", lo, hi));
  if (lo == hi) return {v, {lo}};
  if (grid < 2) throw invalid_argument("sampling grid needs at least 2 points per axis");
  SampleAxis axis{v, {}};
  axis.points.reserve(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    axis.points.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid - 1));
  }
  axis.points.back() = hi;
  return axis;
}

SlopeRange sampled_partial(const Expr& e, Var var, const std::vector<SampleAxis>& axes, const Bindings& fixed) {
  const auto var_axis = std::find_if(axes.begin(), axes.end(), [&](const SampleAxis& a) { return a.var == var; });
  if (var_axis == axes.end()) {
    throw invalid_argument(fmt::format("no sampling axis for '{}'", var_name(var)));
  }
  for (const auto& a : axes) {
    if (a.points.empty()) throw invalid_argument(fmt::format("empty sampling axis for '{}'", var_name(a.var)));
  }
  const auto [lo_it, hi_it] = std::minmax_element(var_axis->points.begin(), var_axis->points.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = hi - lo;
  const double step = 1e-6 * (width > 0.0 ? width : 1.0);

  SlopeRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> idx(axes.size(), 0);
  Bindings b = fixed;

  auto eval_at = [&](double value) {
    b.set(var, value);
    try {
      return e.eval(b);
    } catch (const Error& err) {
      std::string where;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        where += fmt::format("{}{}={}", a ? ", " : "", var_name(axes[a].var),
                             axes[a].var == var ? value : axes[a].points[idx[a]]);
      }
      throw Error(err.kind(), fmt::format("{} (while sampling at {})", err.what(), where));
    }
  };

  while (true) {
    for (std::size_t a = 0; a < axes.size(); ++a) b.set(axes[a].var, axes[a].points[idx[a]]);
    const double at = b.get(var);
    double slope = 0.0;
    if (width == 0.0 || (at > lo && at < hi)) {
      slope = (eval_at(at + step) - eval_at(at - step)) / (2.0 * step);
    } else if (at <= lo) {
      slope = (eval_at(at + step) - eval_at(at)) / step;
    } else {
      slope = (eval_at(at) - eval_at(at - step)) / step;
    }
    range.min_slope = std::min(range.min_slope, slope);
    range.max_slope = std::max(range.max_slope, slope);

    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].points.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  return range;
}

SlopeRange sampled_partial(const Expr& e, Var var,
                           const std::vector<std::pair<Var, std::pair<double, double>>>& box, std::size_t grid,
                           const Bindings& fixed) {
  if (grid < 2) throw invalid_argument("sampling grid needs at least 2 points per axis");
  std::vector<SampleAxis> axes;
  for (const auto& [v, interval] : box) axes.push_back(interval_axis(v, interval.first, interval.second, grid));
  return sampled_partial(e, var, axes, fixed);
}

}  // namespace semilin::expr
