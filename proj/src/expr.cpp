#include "homog/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/measure.hpp"

namespace homog {

struct Expr::Node {
  enum class Op { constant, pi, variable, add, sub, mul, div, neg, cos, sin, exp, abs, min, max };
  Op op = Op::constant;
  double value = 0.0;
  int variable = 0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expr::Node;
using Op = Node::Op;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Op op, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

struct FunctionSpec {
  std::string_view name;
  Op op;
  int arity;
};

constexpr FunctionSpec kFunctions[] = {
    {"cos", Op::cos, 1}, {"sin", Op::sin, 1}, {"exp", Op::exp, 1},
    {"abs", Op::abs, 1}, {"min", Op::min, 2}, {"max", Op::max, 2},
};

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  NodePtr parse() {
    NodePtr root = expression();
    skip_space();
    if (pos_ < src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, pos_ + 1); }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr expression() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = make(Op::add, {lhs, term()});
      } else if (accept('-')) {
        lhs = make(Op::sub, {lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = make(Op::mul, {lhs, unary()});
      } else if (accept('/')) {
        lhs = make(Op::div, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, {unary()});
    if (accept('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expression();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = value;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    for (const auto& fn : kFunctions) {
      if (fn.name != name) continue;
      skip_space();
      if (!accept('(')) fail("function '" + std::string(name) + "' needs an argument list");
      std::vector<NodePtr> args;
      if (!accept(')')) {
        args.push_back(expression());
        while (accept(',')) args.push_back(expression());
        expect(')');
      }
      if (static_cast<int>(args.size()) != fn.arity) {
        throw SyntaxError("function '" + std::string(name) + "' takes " +
                              std::to_string(fn.arity) + " argument(s), got " +
                              std::to_string(args.size()),
                          start + 1);
      }
      return make(fn.op, std::move(args));
    }

    if (name == "pi") return make(Op::pi);

    int variable = -1;
    if (name.size() >= 2 && name[0] == 'y' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int index = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), index);
      variable = index - 1;
    } else if (name == "x") {
      variable = 0;
    } else if (name == "y") {
      variable = 1;
    } else if (name == "z") {
      variable = 2;
    }
    const bool alias = name.size() == 1;
    if (variable < 0 || variable >= dim_ || (alias && dim_ > 3)) {
      throw SyntaxError("unknown identifier '" + std::string(name) + "'", start + 1);
    }
    auto n = std::make_shared<Node>();
    n->op = Op::variable;
    n->variable = variable;
    return n;
  }

  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, std::span<const double> y) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::pi: return std::numbers::pi;
    case Op::variable: return y[n.variable];
    case Op::add: return eval_node(*n.args[0], y) + eval_node(*n.args[1], y);
    case Op::sub: return eval_node(*n.args[0], y) - eval_node(*n.args[1], y);
    case Op::mul: return eval_node(*n.args[0], y) * eval_node(*n.args[1], y);
    case Op::div: {
      const double den = eval_node(*n.args[1], y);
      if (den == 0.0) throw ConfigError("expression: division by zero");
      return eval_node(*n.args[0], y) / den;
    }
    case Op::neg: return -eval_node(*n.args[0], y);
    case Op::cos: return std::cos(eval_node(*n.args[0], y));
    case Op::sin: return std::sin(eval_node(*n.args[0], y));
    case Op::exp: return std::exp(eval_node(*n.args[0], y));
    case Op::abs: return std::abs(eval_node(*n.args[0], y));
    case Op::min: return std::min(eval_node(*n.args[0], y), eval_node(*n.args[1], y));
    case Op::max: return std::max(eval_node(*n.args[0], y), eval_node(*n.args[1], y));
  }
  return 0.0;
}

void unparse_node(const Node& n, std::ostringstream& os) {
  auto binary = [&](const char* op) {
    os << '(';
    unparse_node(*n.args[0], os);
    os << op;
    unparse_node(*n.args[1], os);
    os << ')';
  };
  auto call = [&](const char* name) {
    os << name << '(';
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) os << ',';
      unparse_node(*n.args[i], os);
    }
    os << ')';
  };
  switch (n.op) {
    case Op::constant: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      os << buf;
      break;
    }
    case Op::pi: os << "pi"; break;
    case Op::variable: os << 'y' << (n.variable + 1); break;
    case Op::add: binary("+"); break;
    case Op::sub: binary("-"); break;
    case Op::mul: binary("*"); break;
    case Op::div: binary("/"); break;
    case Op::neg:
      os << "(-";
      unparse_node(*n.args[0], os);
      os << ')';
      break;
    case Op::cos: call("cos"); break;
    case Op::sin: call("sin"); break;
    case Op::exp: call("exp"); break;
    case Op::abs: call("abs"); break;
    case Op::min: call("min"); break;
    case Op::max: call("max"); break;
  }
}

std::string format_point(std::span<const double> y) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i) os << ", ";
    os << y[i];
  }
  os << ')';
  return os.str();
}

}  // namespace

double Expr::eval(std::span<const double> y) const {
  if (!root_) throw ConfigError("expression: evaluating an empty expression");
  if (static_cast<int>(y.size()) < dim_)
    throw ConfigError("expression: point has fewer coordinates than the dimension");
  const double v = eval_node(*root_, y);
  if (!std::isfinite(v)) throw ConfigError("expression: non-finite value at " + format_point(y));
  return v;
}

std::string Expr::unparse() const {
  if (!root_) return {};
  std::ostringstream os;
  unparse_node(*root_, os);
  return os.str();
}

Expr parse_expr(std::string_view src, int dim) {
  if (dim < 1) throw ConfigError("expression: dimension must be >= 1");
  Parser parser(src, dim);
  return Expr(parser.parse(), dim);
}

CoefficientField check_bounds(const Expr& expr, const PeriodicMeasure& m, int resolution) {
  if (expr.dim() != m.dim())
    throw ConfigError("coefficient dimension " + std::to_string(expr.dim()) +
                      " does not match measure dimension " + std::to_string(m.dim()));
  const QuadratureSet quad = composite_quadrature(m, resolution);
  CoefficientField field{expr, std::numeric_limits<double>::infinity(),
                         -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const auto y = quad.point(i);
    const double a = expr.eval(y);
    if (!(a > 0.0)) {
      throw HypothesisError("coefficient <= 0 detected: A" + format_point(y) + " = " +
                            std::to_string(a));
    }
    field.a_min = std::min(field.a_min, a);
    field.a_max = std::max(field.a_max, a);
  }
  return field;
}

CoefficientField constant_coefficient(double value, int dim) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return {parse_expr(buf, dim), value, value};
}

}  // namespace homog
