#include "homog/measure.hpp"

#include <cmath>
#include <string>

#include "homog/errors.hpp"
#include "homog/quadrature.hpp"

namespace homog {

namespace {

bool is_subset(const MeasureComponent& inner, const MeasureComponent& outer) {
  // Axis-parallel flats: inner ⊂ outer iff every constraint of outer also
  // constrains inner to the same value.
  for (const auto& [axis, value] : outer.fixed) {
    auto it = inner.fixed.find(axis);
    if (it == inner.fixed.end() || it->second != value) return false;
  }
  return true;
}

std::string describe(std::size_t j) { return "component " + std::to_string(j); }

void validate(int dim, const std::vector<MeasureComponent>& comps) {
  if (dim < 1) throw ConfigError("measure: dim must be >= 1, got " + std::to_string(dim));
  if (comps.empty()) throw ConfigError("measure: empty component list");
  bool any_positive = false;
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const auto& c = comps[j];
    if (c.kind == ComponentKind::cell && !c.fixed.empty())
      throw ConfigError("measure: " + describe(j) + " is a cell but has fixed coordinates");
    if (c.kind == ComponentKind::plane) {
      if (c.fixed.empty() || static_cast<int>(c.fixed.size()) > dim - 1)
        throw ConfigError("measure: " + describe(j) + " must fix between 1 and dim-1 axes");
    }
    for (const auto& [axis, value] : c.fixed) {
      if (axis < 0 || axis >= dim)
        throw ConfigError("measure: " + describe(j) + " fixes axis " + std::to_string(axis) +
                          " outside [0, dim)");
      if (!std::isfinite(value) || value < 0.0 || value >= 1.0)
        throw ConfigError("measure: " + describe(j) + " lies outside Q (coordinate " +
                          std::to_string(value) + " not in [0,1))");
    }
    if (!std::isfinite(c.weight) || c.weight < 0.0)
      throw ConfigError("measure: " + describe(j) + " has a negative or non-finite weight");
    any_positive = any_positive || c.weight > 0.0;
  }
  if (!any_positive) throw ConfigError("measure: all component weights are zero");

  for (std::size_t j = 0; j < comps.size(); ++j) {
    for (std::size_t k = 0; k < comps.size(); ++k) {
      if (j == k) continue;
      const auto& a = comps[j];
      const auto& b = comps[k];
      if (a.kind == b.kind && a.fixed == b.fixed)
        throw ConfigError("measure: " + describe(j) + " duplicates " + describe(k));
      // Lower-dimensional pieces inside the full cell are allowed (mixed measures).
      if (a.kind == ComponentKind::plane && b.kind == ComponentKind::plane && is_subset(a, b))
        throw ConfigError("measure: " + describe(j) + " is contained in " + describe(k));
    }
  }
}

template <typename F>
void for_each_tensor_point(int k, int points, F&& f) {
  std::vector<int> idx(k, 0);
  while (true) {
    f(idx);
    int a = 0;
    for (; a < k; ++a) {
      if (++idx[a] < points) break;
      idx[a] = 0;
    }
    if (a == k) break;
  }
}

}  // namespace

PeriodicMeasure::PeriodicMeasure(int dim, std::vector<MeasureComponent> components)
    : dim_(dim), components_(std::move(components)) {
  validate(dim_, components_);
}

PeriodicMeasure PeriodicMeasure::normalized() const {
  double sum = 0.0;
  for (const auto& c : components_) sum += c.weight;
  PeriodicMeasure out = *this;
  out.normalization_ = 1.0 / sum;
  return out;
}

double total_mass(const PeriodicMeasure& m) {
  // Every flat of the unit torus has unit intrinsic volume.
  double mass = 0.0;
  for (std::size_t j = 0; j < m.components().size(); ++j) mass += m.effective_weight(j);
  return mass;
}

PeriodicMeasure parse_measure(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("measure: document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "dim" && key != "components")
      throw ConfigError("measure: unknown field '" + key + "'");
  }
  if (!doc.contains("dim")) throw ConfigError("measure: missing field 'dim'");
  if (!doc.at("dim").is_number_integer()) throw ConfigError("measure: 'dim' must be an integer");
  if (!doc.contains("components")) throw ConfigError("measure: missing field 'components'");
  if (!doc.at("components").is_array()) throw ConfigError("measure: 'components' must be an array");

  const int dim = doc.at("dim").get<int>();
  std::vector<MeasureComponent> comps;
  std::size_t j = 0;
  for (const auto& item : doc.at("components")) {
    const std::string where = "measure: components[" + std::to_string(j++) + "]";
    if (!item.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : item.items()) {
      if (key != "kind" && key != "fixed" && key != "weight")
        throw ConfigError(where + " has unknown field '" + key + "'");
    }
    MeasureComponent c;
    if (!item.contains("kind") || !item.at("kind").is_string())
      throw ConfigError(where + " needs a string 'kind'");
    const auto kind = item.at("kind").get<std::string>();
    if (kind == "cell") {
      c.kind = ComponentKind::cell;
    } else if (kind == "plane") {
      c.kind = ComponentKind::plane;
    } else {
      throw ConfigError(where + ": kind must be \"cell\" or \"plane\", got \"" + kind + "\"");
    }
    if (item.contains("fixed")) {
      const auto& fixed = item.at("fixed");
      if (!fixed.is_object()) throw ConfigError(where + ": 'fixed' must be an object");
      for (const auto& [axis_text, value] : fixed.items()) {
        int axis = 0;
        try {
          std::size_t used = 0;
          axis = std::stoi(axis_text, &used);
          if (used != axis_text.size()) throw std::invalid_argument(axis_text);
        } catch (const std::exception&) {
          throw ConfigError(where + ": fixed axis '" + axis_text + "' is not an integer");
        }
        if (!value.is_number()) throw ConfigError(where + ": fixed value must be a number");
        c.fixed[axis] = value.get<double>();
      }
    }
    if (!item.contains("weight")) throw ConfigError(where + " missing field 'weight'");
    if (!item.at("weight").is_number()) throw ConfigError(where + ": 'weight' must be a number");
    c.weight = item.at("weight").get<double>();
    comps.push_back(std::move(c));
  }
  return PeriodicMeasure(dim, std::move(comps)).normalized();
}

PeriodicMeasure parse_measure(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("measure: invalid JSON: ") + e.what());
  }
  return parse_measure(doc);
}

nlohmann::json to_json(const PeriodicMeasure& m) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : m.components()) {
    nlohmann::json fixed = nlohmann::json::object();
    for (const auto& [axis, value] : c.fixed) fixed[std::to_string(axis)] = value;
    comps.push_back({{"kind", c.kind == ComponentKind::cell ? "cell" : "plane"},
                     {"fixed", fixed},
                     {"weight", c.weight}});
  }
  return {{"dim", m.dim()}, {"components", comps}};
}

cplx integrate(const PointFunction& f, const PeriodicMeasure& m, int order) {
  const GaussRule rule = gauss_legendre(gauss_points_for_order(order));
  const int q = static_cast<int>(rule.nodes.size());
  const int d = m.dim();
  cplx total = 0.0;
  std::vector<double> y(d);
  for (std::size_t j = 0; j < m.components().size(); ++j) {
    const auto& c = m.components()[j];
    const double weight = m.effective_weight(j);
    if (weight == 0.0) continue;
    std::vector<int> free_axes;
    for (int a = 0; a < d; ++a) {
      if (c.is_free(a)) free_axes.push_back(a);
    }
    for (const auto& [axis, value] : c.fixed) y[axis] = value;
    cplx part = 0.0;
    for_each_tensor_point(static_cast<int>(free_axes.size()), q, [&](const std::vector<int>& idx) {
      double w = 1.0;
      for (std::size_t a = 0; a < free_axes.size(); ++a) {
        y[free_axes[a]] = rule.nodes[idx[a]];
        w *= rule.weights[idx[a]];
      }
      part += w * f(y);
    });
    total += weight * part;
  }
  return total;
}

QuadratureSet composite_quadrature(const PeriodicMeasure& m, int n, int points_per_axis) {
  const GaussRule rule = gauss_legendre(points_per_axis);
  const int d = m.dim();
  const double h = 1.0 / n;
  QuadratureSet set;
  set.dim = d;
  std::vector<double> y(d);
  for (std::size_t j = 0; j < m.components().size(); ++j) {
    const auto& c = m.components()[j];
    const double weight = m.effective_weight(j);
    if (weight == 0.0) continue;
    std::vector<int> free_axes;
    for (int a = 0; a < d; ++a) {
      if (c.is_free(a)) free_axes.push_back(a);
    }
    const int k = static_cast<int>(free_axes.size());
    for (const auto& [axis, value] : c.fixed) y[axis] = value;
    for_each_tensor_point(k, n, [&](const std::vector<int>& cell) {
      for_each_tensor_point(k, points_per_axis, [&](const std::vector<int>& idx) {
        double w = weight;
        for (int a = 0; a < k; ++a) {
          y[free_axes[a]] = (cell[a] + rule.nodes[idx[a]]) * h;
          w *= rule.weights[idx[a]] * h;
        }
        set.points.insert(set.points.end(), y.begin(), y.end());
        set.weights.push_back(w);
      });
    });
  }
  return set;
}

PeriodicMeasure lebesgue_measure(int dim) {
  return PeriodicMeasure(dim, {MeasureComponent{ComponentKind::cell, {}, 1.0}}).normalized();
}

PeriodicMeasure square_grid_measure(int dim) {
  if (dim < 2) throw ConfigError("square grid needs dim >= 2");
  std::vector<MeasureComponent> comps;
  for (int free_axis = 0; free_axis < dim; ++free_axis) {
    MeasureComponent c{ComponentKind::plane, {}, 1.0};
    for (int a = 0; a < dim; ++a) {
      if (a != free_axis) c.fixed[a] = 0.0;
    }
    comps.push_back(std::move(c));
  }
  return PeriodicMeasure(dim, std::move(comps)).normalized();
}

}  // namespace homog
