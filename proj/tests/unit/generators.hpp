#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "homog/measure.hpp"
#include "homog/types.hpp"

namespace gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool coin() { return (engine_() & 1U) != 0; }

 private:
  std::mt19937_64 engine_;
};

inline homog::RVec kappa(Rng& rng, int dim) {
  homog::RVec k(dim);
  for (int a = 0; a < dim; ++a) k[a] = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return k;
}

inline homog::CVec complex_vector(Rng& rng, Eigen::Index n) {
  homog::CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v;
}

/// Polynomial sum_k c_k y^alpha_k with total degree per axis <= degree.
struct Polynomial {
  std::vector<double> coeffs;
  std::vector<std::vector<int>> powers;
  double operator()(std::span<const double> y) const {
    double out = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      double term = coeffs[k];
      for (std::size_t a = 0; a < powers[k].size(); ++a) term *= std::pow(y[a], powers[k][a]);
      out += term;
    }
    return out;
  }
};

inline Polynomial polynomial(Rng& rng, int dim, int degree, int terms = 4) {
  Polynomial p;
  for (int k = 0; k < terms; ++k) {
    p.coeffs.push_back(rng.uniform(-2, 2));
    std::vector<int> pw(dim);
    for (int a = 0; a < dim; ++a) pw[a] = rng.integer(0, degree);
    p.powers.push_back(pw);
  }
  return p;
}

/// Random expression text over y1..y_dim, safe to evaluate on [0,1)^d.
inline std::string expression(Rng& rng, int dim, int depth) {
  if (depth == 0 || rng.integer(0, 3) == 0) {
    switch (rng.integer(0, 2)) {
      case 0: return "y" + std::to_string(rng.integer(1, dim));
      case 1: return "pi";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", rng.uniform(0.1, 5.0));
        return buf;
      }
    }
  }
  const std::string a = expression(rng, dim, depth - 1);
  const std::string b = expression(rng, dim, depth - 1);
  switch (rng.integer(0, 9)) {
    case 0: return a + "+" + b;
    case 1: return a + "-" + b;
    case 2: return a + "*" + b;
    case 3: return "(" + a + ")/(2+cos(" + b + "))";
    case 4: return "-(" + a + ")";
    case 5: return "cos(" + a + ")";
    case 6: return "sin(" + a + ")*" + b;
    case 7: return "exp(-abs(" + a + "))";
    case 8: return "min(" + a + "," + b + ")";
    default: return "max(" + a + ", " + b + ")";
  }
}

/// Random valid measure on the lattice of resolution n: optionally the full
/// cell plus planes with fixed coordinates on multiples of 1/n.
inline homog::PeriodicMeasure measure(Rng& rng, int dim, int n) {
  using homog::ComponentKind;
  using homog::MeasureComponent;
  std::vector<MeasureComponent> comps;
  if (dim == 1 || rng.coin()) comps.push_back({ComponentKind::cell, {}, rng.uniform(0.5, 2.0)});
  const int planes = dim == 1 ? 0 : rng.integer(comps.empty() ? 1 : 0, 3);
  for (int p = 0; p < planes; ++p) {
    MeasureComponent c{ComponentKind::plane, {}, rng.uniform(0.5, 2.0)};
    const int fixed = rng.integer(1, dim - 1);
    while (static_cast<int>(c.fixed.size()) < fixed) c.fixed[rng.integer(0, dim - 1)] = rng.integer(0, n - 1) / double(n);
    bool clash = false;
    for (const auto& other : comps) {
      if (other.kind != ComponentKind::plane) continue;
      bool inner = true, outer = true;
      for (const auto& [axis, v] : other.fixed) {
        auto it = c.fixed.find(axis);
        if (it == c.fixed.end() || it->second != v) inner = false;
      }
      for (const auto& [axis, v] : c.fixed) {
        auto it = other.fixed.find(axis);
        if (it == other.fixed.end() || it->second != v) outer = false;
      }
      clash = clash || inner || outer;
    }
    if (!clash) comps.push_back(std::move(c));
  }
  if (comps.empty()) comps.push_back({ComponentKind::cell, {}, 1.0});
  return homog::PeriodicMeasure(dim, std::move(comps)).normalized();
}

}  // namespace gen
