#pragma once

#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "homog/types.hpp"

namespace homog {

enum class ComponentKind { cell, plane };

/// One flat piece of a periodic measure: either the whole cell Q or an
/// axis-parallel flat {y : y_a = value for a in fixed}, carrying
/// `weight` times its intrinsic Lebesgue measure.
struct MeasureComponent {
  ComponentKind kind = ComponentKind::cell;
  std::map<int, double> fixed;
  double weight = 1.0;

  int intrinsic_dim(int dim) const { return dim - static_cast<int>(fixed.size()); }
  bool is_free(int axis) const { return !fixed.contains(axis); }
};

/// Q-periodic measure built from flat components.
///
/// Weights are stored as given; `normalization()` is the scale applied on
/// top of them. Normalizing recomputes the scale from the raw weights, so it
/// is idempotent bit for bit.
class PeriodicMeasure {
 public:
  /// Validates the components and keeps the raw weights (normalization 1).
  PeriodicMeasure(int dim, std::vector<MeasureComponent> components);

  int dim() const { return dim_; }
  const std::vector<MeasureComponent>& components() const { return components_; }
  double normalization() const { return normalization_; }
  double effective_weight(std::size_t j) const { return components_[j].weight * normalization_; }

  PeriodicMeasure normalized() const;

 private:
  int dim_;
  std::vector<MeasureComponent> components_;
  double normalization_ = 1.0;
};

/// Parses {"dim": d, "components": [{"kind": "cell"|"plane", "fixed": {"axis": value}, "weight": w}]}
/// and returns the normalized measure. Throws ConfigError on schema violations.
PeriodicMeasure parse_measure(const nlohmann::json& doc);
PeriodicMeasure parse_measure(std::string_view text);
inline PeriodicMeasure parse_measure(const char* text) { return parse_measure(std::string_view(text)); }

nlohmann::json to_json(const PeriodicMeasure& m);

double total_mass(const PeriodicMeasure& m);

using PointFunction = std::function<cplx(std::span<const double>)>;

/// Tensor Gauss quadrature of f over every component, exact for polynomials
/// of degree <= order along each free axis.
cplx integrate(const PointFunction& f, const PeriodicMeasure& m, int order);

/// Quadrature points and weights of the composite rule on an n-per-axis
/// lattice: `points_per_axis` Gauss points per cell and free axis, component
/// weights folded in. Points are stored row-wise, `dim` coordinates each.
struct QuadratureSet {
  int dim = 0;
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * dim, static_cast<std::size_t>(dim)};
  }
};
QuadratureSet composite_quadrature(const PeriodicMeasure& m, int n, int points_per_axis = 3);

/// Lebesgue measure on [0,1)^d.
PeriodicMeasure lebesgue_measure(int dim);
/// Lines through the origin along every axis, equal weights, normalized.
PeriodicMeasure square_grid_measure(int dim);

}  // namespace homog
