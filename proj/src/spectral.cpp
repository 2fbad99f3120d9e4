#include "homog/spectral.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "homog/errors.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  std::vector<int> parent;
};

}  // namespace

Connectivity check_connectivity(const DiscreteSpace& sp) {
  UnionFind uf(sp.num_dofs());
  for (const Element& e : sp.elements()) {
    for (std::size_t c = 1; c < e.dofs.size(); ++c) uf.unite(e.dofs[0], e.dofs[c]);
  }
  int roots = 0;
  for (std::size_t i = 0; i < sp.num_dofs(); ++i) roots += uf.find(static_cast<int>(i)) == static_cast<int>(i);
  return {roots == 1, roots};
}

void require_connected(const DiscreteSpace& sp) {
  const Connectivity c = check_connectivity(sp);
  if (!c.connected)
    throw HypothesisError("support is disconnected: " + std::to_string(c.components) + " components");
}

std::vector<RVec> default_kappa_grid(int dim, int points) {
  if (dim < 1 || points < 1) throw ConfigError("kappa grid needs dim >= 1 and points >= 1");
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(points);
  std::vector<RVec> grid;
  grid.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    RVec kappa(dim);
    std::size_t rest = i;
    for (int a = 0; a < dim; ++a) {
      const auto idx = static_cast<double>(rest % points);
      rest /= points;
      kappa[a] = -std::numbers::pi + 2.0 * std::numbers::pi * idx / points;
    }
    grid.push_back(std::move(kappa));
  }
  return grid;
}

double mean_zero_eigenvalue(const DiscreteSpace& sp, const RVec& kappa, const EigenOptions& opts) {
  const QpField one = constant_field(sp, 1.0);
  const CSparse s = assemble_shifted_stiffness(sp, one, kappa);
  const RSparse mass = assemble_mass(sp);
  const CVec ones = CVec::Ones(static_cast<Eigen::Index>(sp.num_dofs()));
  return smallest_eigen(s, mass, &ones, opts).lambda;
}

PoincareEstimate poincare_constant(const DiscreteSpace& sp, const std::vector<RVec>& kappas,
                                   const PoincareOptions& opts) {
  if (kappas.empty()) throw ConfigError("poincare: empty kappa grid");
  require_connected(sp);
  PoincareEstimate out;
  out.samples.resize(kappas.size());
  parallel_for(kappas.size(), opts.workers, [&](std::size_t i) {
    out.samples[i] = {kappas[i], mean_zero_eigenvalue(sp, kappas[i], opts.eigen)};
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.samples.size(); ++i) {
    if (out.samples[i].lambda < out.samples[best].lambda) best = i;
  }
  out.lambda_min = out.samples[best].lambda;
  out.kappa_argmin = out.samples[best].kappa;
  if (!(out.lambda_min > 0.0))
    throw HypothesisError("poincare: smallest mean-zero eigenvalue is not positive");
  out.C_P = 1.0 / std::sqrt(out.lambda_min);
  return out;
}

}  // namespace homog
