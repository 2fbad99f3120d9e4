#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace homog {

class PeriodicMeasure;

/// Immutable scalar expression over y1..yd.
///
/// Grammar: standard infix with `+ - * /`, unary minus, parentheses, numeric
/// literals, the constant `pi`, variables `y1`..`yd` (aliases `x`, `y`, `z`
/// for d <= 3) and the functions cos, sin, exp, abs (one argument) and
/// min, max (two arguments).
class Expr {
 public:
  struct Node;

  Expr() = default;

  /// Evaluates at a point with `dim()` coordinates. Throws ConfigError on
  /// division by zero or a non-finite result.
  double eval(std::span<const double> y) const;

  /// Fully parenthesized text that parses back to an identical tree.
  std::string unparse() const;

  int dim() const { return dim_; }
  bool empty() const { return root_ == nullptr; }

 private:
  friend Expr parse_expr(std::string_view src, int dim);
  Expr(std::shared_ptr<const Node> root, int dim) : root_(std::move(root)), dim_(dim) {}

  std::shared_ptr<const Node> root_;
  int dim_ = 0;
};

/// Throws SyntaxError (with 1-based position) on malformed input, unknown
/// identifiers and wrong function arity.
Expr parse_expr(std::string_view src, int dim);

/// A coefficient A(y) together with its sampled range.
struct CoefficientField {
  Expr expr;
  double a_min = 0.0;
  double a_max = 0.0;
};

/// Samples the expression on the 3-point-per-axis composite quadrature of
/// `m` at `resolution` cells per axis. Throws HypothesisError naming the
/// point if the coefficient is not strictly positive there.
CoefficientField check_bounds(const Expr& expr, const PeriodicMeasure& m, int resolution);

/// Constant coefficient without sampling.
CoefficientField constant_coefficient(double value, int dim);

}  // namespace homog
