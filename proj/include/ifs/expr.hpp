#pragma once

// Arithmetic expression language for vector fields, sections and impulse maps.
//
//   field   = expr { ";" expr }
//   expr    = term { ("+" | "-") term }
//   term    = unary { ("*" | "/") unary }
//   unary   = ("-" | "+") unary | primary
//   primary = number | "pi" | symbol | func "(" expr ")" | "(" expr ")"
//   func    = "sin" | "cos" | "exp" | "sqrt" | "abs"
//   symbol  = "x1" .. "xN"  (cartesian)  |  "r" | "th"  (polar2d)
//
// Nodes are stored in post-order, so a tree evaluates with one linear pass over
// a value stack and two trees are structurally equal iff their node arrays are.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/point.hpp"

namespace ifs {

enum class Op : std::uint8_t { number, symbol, neg, add, sub, mul, div, sin, cos, exp, sqrt, abs };

struct ExprNode {
  Op op = Op::number;
  double value = 0.0;        // Op::number
  std::uint32_t symbol = 0;  // Op::symbol
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;

  friend bool operator==(const ExprNode&, const ExprNode&) = default;
};

/// Coordinate names visible to expressions of a given chart and dimension.
inline std::vector<std::string> symbol_names(Chart chart, std::size_t dim) {
  if (chart == Chart::polar2d) return {"r", "th"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

class Expr {
 public:
  Expr() = default;

  std::span<const ExprNode> nodes() const noexcept { return nodes_; }
  std::size_t root() const noexcept { return nodes_.size() - 1; }
  bool empty() const noexcept { return nodes_.empty(); }

  /// Evaluates with `vars` bound to the coordinate symbols. Throws DomainError
  /// tagged with `component` on sqrt of a negative or a non-finite result.
  double eval(std::span<const double> vars, std::size_t component = 0) const {
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
#endif
    std::array<double, inline_stack> fixed;  // every slot is pushed before it is read
    std::vector<double> spill;
    double* stack = fixed.data();
    if (max_depth_ > inline_stack) {
      spill.resize(max_depth_);
      stack = spill.data();
    }
    std::size_t top = 0;
    for (const ExprNode& n : nodes_) {
      switch (n.op) {
        case Op::number: stack[top++] = n.value; break;
        case Op::symbol: stack[top++] = vars[n.symbol]; break;
        case Op::neg: stack[top - 1] = -stack[top - 1]; break;
        case Op::add: --top; stack[top - 1] += stack[top]; break;
        case Op::sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::div:
          --top;
          if (stack[top] == 0.0) throw DomainError(component, "division by zero");
          stack[top - 1] /= stack[top];
          break;
        case Op::sin: stack[top - 1] = std::sin(stack[top - 1]); break;
        case Op::cos: stack[top - 1] = std::cos(stack[top - 1]); break;
        case Op::exp: stack[top - 1] = std::exp(stack[top - 1]); break;
        case Op::sqrt:
          if (stack[top - 1] < 0.0) throw DomainError(component, "sqrt of a negative value");
          stack[top - 1] = std::sqrt(stack[top - 1]);
          break;
        case Op::abs: stack[top - 1] = std::fabs(stack[top - 1]); break;
      }
    }
    const double out = stack[0];
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic pop
#endif
    if (!std::isfinite(out)) throw DomainError(component, "non-finite result");
    return out;
  }

  friend bool operator==(const Expr& a, const Expr& b) { return a.nodes_ == b.nodes_; }

 private:
  friend class ExprParser;
  static constexpr std::size_t inline_stack = 64;

  std::vector<ExprNode> nodes_;
  std::size_t max_depth_ = 0;
};

/// Recursive-descent parser producing post-order node arrays.
class ExprParser {
 public:
  ExprParser(std::string_view src, std::vector<std::string> symbols)
      : src_(src), symbols_(std::move(symbols)) {}

  /// Parses `count` expressions separated by ';' (count 0 = any number >= 1).
  std::vector<Expr> parse_list(std::size_t count) {
    std::vector<Expr> out;
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(ErrorKind::parse, pos_, "empty expression");
    for (;;) {
      out.push_back(parse_one());
      skip_ws();
      if (pos_ >= src_.size()) break;
      if (src_[pos_] != ';') throw ParseError(ErrorKind::parse, pos_, "unexpected character");
      ++pos_;
    }
    if (count != 0 && out.size() != count) {
      throw ParseError(ErrorKind::arity, src_.size(),
                       "expected " + std::to_string(count) + " component(s), got " +
                           std::to_string(out.size()));
    }
    return out;
  }

 private:
  Expr parse_one() {
    Expr e;
    current_ = &e;
    depth_ = 0;
    parse_expr();
    current_ = nullptr;
    return e;
  }

  void emit(ExprNode node, int pops) {
    current_->nodes_.push_back(node);
    depth_ = depth_ - static_cast<std::size_t>(pops) + 1;
    if (depth_ > current_->max_depth_) current_->max_depth_ = depth_;
  }

  std::int32_t last() const { return static_cast<std::int32_t>(current_->nodes_.size()) - 1; }

  void parse_expr() {
    parse_term();
    for (;;) {
      skip_ws();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
        const Op op = src_[pos_] == '+' ? Op::add : Op::sub;
        ++pos_;
        const std::int32_t lhs = last();
        parse_term();
        emit({op, 0.0, 0, lhs, last()}, 2);
      } else {
        return;
      }
    }
  }

  void parse_term() {
    parse_unary();
    for (;;) {
      skip_ws();
      if (pos_ < src_.size() && (src_[pos_] == '*' || src_[pos_] == '/')) {
        const Op op = src_[pos_] == '*' ? Op::mul : Op::div;
        ++pos_;
        const std::int32_t lhs = last();
        parse_unary();
        emit({op, 0.0, 0, lhs, last()}, 2);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '-') {
      ++pos_;
      parse_unary();
      emit({Op::neg, 0.0, 0, last(), -1}, 1);
      return;
    }
    if (pos_ < src_.size() && src_[pos_] == '+') {
      ++pos_;
      parse_unary();
      return;
    }
    parse_primary();
  }

  void parse_primary() {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] == ';') {
      throw ParseError(ErrorKind::parse, pos_, "expected expression");
    }
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_expr();
      expect(')');
      return;
    }
    if (is_digit(c) || c == '.') {
      parse_number();
      return;
    }
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      if (const Op fn = function_op(name); fn != Op::number) {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != '(') {
          throw ParseError(ErrorKind::arity, pos_, "function '" + std::string(name) + "' takes one argument");
        }
        ++pos_;
        parse_expr();
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == ',') {
          throw ParseError(ErrorKind::arity, pos_, "function '" + std::string(name) + "' takes one argument");
        }
        expect(')');
        emit({fn, 0.0, 0, last(), -1}, 1);
        return;
      }
      if (name == "pi") {
        emit({Op::number, std::numbers::pi, 0, -1, -1}, 0);
        return;
      }
      for (std::size_t i = 0; i < symbols_.size(); ++i) {
        if (symbols_[i] == name) {
          emit({Op::symbol, 0.0, static_cast<std::uint32_t>(i), -1, -1}, 0);
          return;
        }
      }
      throw ParseError(ErrorKind::unknown_symbol, start, "unknown symbol '" + std::string(name) + "'");
    }
    throw ParseError(ErrorKind::parse, pos_, std::string("unexpected character '") + c + "'");
  }

  void parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        while (p < src_.size() && is_digit(src_[p])) ++p;
        pos_ = p;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      throw ParseError(ErrorKind::parse, start, "malformed number");
    }
    emit({Op::number, value, 0, -1, -1}, 0);
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != c) {
      throw ParseError(ErrorKind::parse, pos_, std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  static Op function_op(std::string_view name) {
    if (name == "sin") return Op::sin;
    if (name == "cos") return Op::cos;
    if (name == "exp") return Op::exp;
    if (name == "sqrt") return Op::sqrt;
    if (name == "abs") return Op::abs;
    return Op::number;
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  std::string_view src_;
  std::vector<std::string> symbols_;
  std::size_t pos_ = 0;
  Expr* current_ = nullptr;
  std::size_t depth_ = 0;
};

namespace detail {

inline int precedence(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    default: return 4;
  }
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline void print_node(const Expr& e, std::int32_t idx, const std::vector<std::string>& names, std::string& out) {
  const ExprNode& n = e.nodes()[static_cast<std::size_t>(idx)];
  auto child = [&](std::int32_t c, bool parens) {
    if (parens) out += '(';
    print_node(e, c, names, out);
    if (parens) out += ')';
  };
  switch (n.op) {
    case Op::number: out += format_number(n.value); return;
    case Op::symbol: out += names[n.symbol]; return;
    case Op::neg: {
      out += '-';
      child(n.lhs, precedence(e.nodes()[static_cast<std::size_t>(n.lhs)].op) < precedence(Op::neg));
      return;
    }
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
      const int p = precedence(n.op);
      child(n.lhs, precedence(e.nodes()[static_cast<std::size_t>(n.lhs)].op) < p);
      switch (n.op) {
        case Op::add: out += " + "; break;
        case Op::sub: out += " - "; break;
        case Op::mul: out += " * "; break;
        default: out += " / "; break;
      }
      child(n.rhs, precedence(e.nodes()[static_cast<std::size_t>(n.rhs)].op) <= p);
      return;
    }
    case Op::sin: out += "sin("; break;
    case Op::cos: out += "cos("; break;
    case Op::exp: out += "exp("; break;
    case Op::sqrt: out += "sqrt("; break;
    case Op::abs: out += "abs("; break;
  }
  print_node(e, n.lhs, names, out);
  out += ')';
}

}  // namespace detail

/// Canonical text form; parsing it back yields a structurally equal tree.
inline std::string print(const Expr& e, const std::vector<std::string>& names) {
  std::string out;
  if (!e.empty()) detail::print_node(e, static_cast<std::int32_t>(e.root()), names, out);
  return out;
}

/// A vector field (or point map): one expression per coordinate of a chart.
class Field {
 public:
  Field() = default;
  Field(Chart chart, std::size_t dim, std::vector<Expr> components)
      : chart_(chart), dim_(dim), components_(std::move(components)) {}

  Chart chart() const noexcept { return chart_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Expr>& components() const noexcept { return components_; }

  /// Componentwise evaluation at `x`; the result is a point of the same chart
  /// (for vector fields, read it as the velocity in chart coordinates).
  std::array<double, Point::max_dim> eval(const Point& x) const {
    if (x.chart() != chart_ || x.dim() != dim_) {
      throw Error(ErrorKind::precondition, "point chart/dimension does not match the field");
    }
    std::array<double, Point::max_dim> out{};
    for (std::size_t i = 0; i < components_.size(); ++i) out[i] = components_[i].eval(x.coords(), i);
    return out;
  }

  /// Applies the field as a point map.
  Point map(const Point& x) const {
    const auto v = eval(x);
    return Point::unchecked(chart_, std::span<const double>(v.data(), dim_));
  }

  friend bool operator==(const Field& a, const Field& b) {
    return a.chart_ == b.chart_ && a.dim_ == b.dim_ && a.components_ == b.components_;
  }

 private:
  Chart chart_ = Chart::cartesian;
  std::size_t dim_ = 0;
  std::vector<Expr> components_;
};

inline Field parse_field(std::string_view source, std::size_t dim, Chart chart) {
  if (chart == Chart::polar2d && dim != 2) throw Error(ErrorKind::precondition, "polar2d fields are two-dimensional");
  ExprParser parser(source, symbol_names(chart, dim));
  return Field(chart, dim, parser.parse_list(dim));
}

inline Expr parse_scalar(std::string_view source, std::size_t dim, Chart chart) {
  ExprParser parser(source, symbol_names(chart, dim));
  return std::move(parser.parse_list(1).front());
}

/// Parses a constant expression (no symbols), e.g. "3*pi/2".
inline double parse_constant(std::string_view source) {
  ExprParser parser(source, {});
  return parser.parse_list(1).front().eval({});
}

inline std::string print(const Field& f) {
  const auto names = symbol_names(f.chart(), f.dim());
  std::string out;
  for (std::size_t i = 0; i < f.components().size(); ++i) {
    if (i) out += "; ";
    out += print(f.components()[i], names);
  }
  return out;
}

inline std::array<double, Point::max_dim> eval_field(const Field& f, const Point& x) { return f.eval(x); }

}  // namespace ifs
