#include "homog/mesh_space.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "homog/errors.hpp"
#include "homog/quadrature.hpp"

namespace homog {

namespace {

ReferenceCube make_reference(int k) {
  const GaussRule rule = gauss_legendre(3);
  ReferenceCube ref;
  ref.k = k;
  ref.num_corners = 1 << k;
  ref.num_points = 1;
  for (int a = 0; a < k; ++a) ref.num_points *= 3;
  ref.xi.resize(static_cast<std::size_t>(ref.num_points) * k);
  ref.weight.resize(ref.num_points);
  ref.phi.resize(static_cast<std::size_t>(ref.num_points) * ref.num_corners);
  ref.dphi.resize(static_cast<std::size_t>(ref.num_points) * ref.num_corners * k);
  for (int q = 0; q < ref.num_points; ++q) {
    double w = 1.0;
    int rest = q;
    for (int a = 0; a < k; ++a) {
      const int i = rest % 3;
      rest /= 3;
      ref.xi[q * k + a] = rule.nodes[i];
      w *= rule.weights[i];
    }
    ref.weight[q] = w;
    for (int c = 0; c < ref.num_corners; ++c) {
      auto factor = [&](int a) {
        const double x = ref.xi[q * k + a];
        return (c >> a) & 1 ? x : 1.0 - x;
      };
      double value = 1.0;
      for (int a = 0; a < k; ++a) value *= factor(a);
      ref.phi[q * ref.num_corners + c] = value;
      for (int a = 0; a < k; ++a) {
        double d = (c >> a) & 1 ? 1.0 : -1.0;
        for (int b = 0; b < k; ++b) {
          if (b != a) d *= factor(b);
        }
        ref.dphi[(q * ref.num_corners + c) * k + a] = d;
      }
    }
  }
  return ref;
}

}  // namespace

std::vector<double> DiscreteSpace::node_coords(int dof) const {
  std::vector<double> y(dim_);
  for (int a = 0; a < dim_; ++a) y[a] = dof_lattice_[static_cast<std::size_t>(dof) * dim_ + a] * h();
  return y;
}

void DiscreteSpace::qp_coords(const Element& e, int q, std::span<double> out) const {
  const ReferenceCube& ref = references_[e.free_axes.size()];
  for (int a = 0; a < dim_; ++a) out[a] = e.origin[a] * h();
  for (int a = 0; a < ref.k; ++a) out[e.free_axes[a]] += ref.xi[q * ref.k + a] * h();
}

double DiscreteSpace::qp_weight(const Element& e, int q) const {
  const ReferenceCube& ref = references_[e.free_axes.size()];
  return e.weight * std::pow(h(), ref.k) * ref.weight[q];
}

DiscreteSpace build_space(const PeriodicMeasure& m, int n) {
  if (n < 2) throw ConfigError("resolution must be >= 2, got " + std::to_string(n));
  const int d = m.dim();
  if (d * std::log2(static_cast<double>(n)) > 62.0)
    throw ConfigError("resolution " + std::to_string(n) + " too large for dimension " + std::to_string(d));

  DiscreteSpace sp(m);
  sp.dim_ = d;
  sp.n_ = n;
  for (int k = 0; k <= d; ++k) sp.references_.push_back(make_reference(k));

  std::unordered_map<std::uint64_t, int> dof_of;
  auto node_dof = [&](const std::vector<int>& index) {
    std::uint64_t key = 0;
    for (int a = d - 1; a >= 0; --a) key = key * static_cast<std::uint64_t>(n) + index[a];
    auto [it, inserted] = dof_of.try_emplace(key, static_cast<int>(dof_of.size()));
    if (inserted) sp.dof_lattice_.insert(sp.dof_lattice_.end(), index.begin(), index.end());
    return it->second;
  };

  for (std::size_t j = 0; j < m.components().size(); ++j) {
    const double weight = m.effective_weight(j);
    if (weight == 0.0) continue;
    const auto& comp = m.components()[j];

    std::vector<int> base(d, 0);
    for (const auto& [axis, value] : comp.fixed) {
      const double scaled = value * n;
      const long long snapped = std::llround(scaled);
      const double offset = std::abs(value - static_cast<double>(snapped) / n);
      if (offset > 1e-9) {
        std::ostringstream os;
        os << "component " << j << ": coordinate y" << axis + 1 << " = " << value
           << " is not on the lattice of resolution " << n;
        throw ConfigError(os.str());
      }
      if (offset != 0.0) {
        std::ostringstream os;
        os << "component " << j << ": snapped y" << axis + 1 << " = " << value << " to "
           << static_cast<double>(snapped) / n;
        sp.warnings_.push_back(os.str());
      }
      base[axis] = static_cast<int>(snapped % n);
    }

    std::vector<int> free_axes;
    for (int a = 0; a < d; ++a) {
      if (comp.is_free(a)) free_axes.push_back(a);
    }
    const int k = static_cast<int>(free_axes.size());
    const int corners = 1 << k;

    std::vector<int> cell(k, 0);
    std::vector<int> node(d);
    while (true) {
      Element e;
      e.component = static_cast<int>(j);
      e.free_axes = free_axes;
      e.origin = base;
      for (int a = 0; a < k; ++a) e.origin[free_axes[a]] = cell[a];
      e.weight = weight;
      e.dofs.resize(corners);
      for (int c = 0; c < corners; ++c) {
        node = e.origin;
        for (int a = 0; a < k; ++a) {
          if ((c >> a) & 1) node[free_axes[a]] = (node[free_axes[a]] + 1) % n;
        }
        e.dofs[c] = node_dof(node);
      }
      sp.elements_.push_back(std::move(e));

      int a = 0;
      for (; a < k; ++a) {
        if (++cell[a] < n) break;
        cell[a] = 0;
      }
      if (a == k) break;
    }
  }

  sp.qp_offsets_.reserve(sp.elements_.size());
  for (const auto& e : sp.elements_) {
    sp.qp_offsets_.push_back(sp.num_qps_);
    sp.num_qps_ += sp.references_[e.free_axes.size()].num_points;
  }
  return sp;
}

QpField sample_coefficient(const DiscreteSpace& sp, const CoefficientField& a) {
  if (a.expr.dim() != sp.dim())
    throw ConfigError("coefficient dimension does not match the space dimension");
  QpField field;
  field.values.resize(sp.num_qps());
  field.min = std::numeric_limits<double>::infinity();
  field.max = -std::numeric_limits<double>::infinity();
  std::vector<double> y(sp.dim());
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const int nq = sp.reference(static_cast<int>(e.free_axes.size())).num_points;
    for (int q = 0; q < nq; ++q) {
      sp.qp_coords(e, q, y);
      const double v = a.expr.eval(y);
      if (!(v > 0.0)) {
        std::ostringstream os;
        os << "coefficient <= 0 detected: A(";
        for (int i = 0; i < sp.dim(); ++i) os << (i ? ", " : "") << y[i];
        os << ") = " << v;
        throw HypothesisError(os.str());
      }
      field.values[sp.qp_offset(ei) + q] = v;
      field.min = std::min(field.min, v);
      field.max = std::max(field.max, v);
    }
  }
  return field;
}

QpField constant_field(const DiscreteSpace& sp, double value) {
  if (!(value > 0.0)) throw HypothesisError("coefficient <= 0 detected: constant " + std::to_string(value));
  return {std::vector<double>(sp.num_qps(), value), value, value};
}

CVec interpolate(const DiscreteSpace& sp, const PointFunction& f) {
  CVec out(static_cast<Eigen::Index>(sp.num_dofs()));
  for (std::size_t i = 0; i < sp.num_dofs(); ++i) {
    const auto y = sp.node_coords(static_cast<int>(i));
    out[static_cast<Eigen::Index>(i)] = f(y);
  }
  return out;
}

CVec interpolate(const DiscreteSpace& sp, const Expr& f) {
  return interpolate(sp, [&](std::span<const double> y) { return cplx(f.eval(y), 0.0); });
}

namespace {

void check_field(const DiscreteSpace& sp, const QpField& a) {
  if (a.values.size() != sp.num_qps())
    throw ConfigError("coefficient samples do not match the space");
  if (!(a.min > 0.0) || !std::isfinite(a.max))
    throw HypothesisError("coefficient bounds violated: min " + std::to_string(a.min) + ", max " +
                          std::to_string(a.max));
}

}  // namespace

RSparse assemble_mass(const DiscreteSpace& sp) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (const Element& e : sp.elements()) {
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    const double scale = e.weight * std::pow(sp.h(), ref.k);
    for (int a = 0; a < ref.num_corners; ++a) {
      for (int b = 0; b < ref.num_corners; ++b) {
        double v = 0.0;
        for (int q = 0; q < ref.num_points; ++q) v += ref.weight[q] * ref.value(q, a) * ref.value(q, b);
        triplets.emplace_back(e.dofs[a], e.dofs[b], scale * v);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  RSparse M(n, n);
  M.setFromTriplets(triplets.begin(), triplets.end());
  return M;
}

CSparse assemble_shifted_stiffness(const DiscreteSpace& sp, const QpField& a, const RVec& kappa) {
  check_field(sp, a);
  if (kappa.size() != sp.dim()) throw ConfigError("quasimomentum has the wrong dimension");
  const double inv_h = 1.0 / sp.h();
  std::vector<Eigen::Triplet<cplx>> triplets;
  std::vector<cplx> grad;  // corners x k
  std::vector<cplx> local;
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    const int k = ref.k;
    const int nc = ref.num_corners;
    const double scale = e.weight * std::pow(sp.h(), k);
    local.assign(static_cast<std::size_t>(nc) * nc, 0.0);
    grad.resize(static_cast<std::size_t>(nc) * k);
    for (int q = 0; q < ref.num_points; ++q) {
      const double wq = scale * ref.weight[q] * a.values[sp.qp_offset(ei) + q];
      for (int c = 0; c < nc; ++c) {
        for (int l = 0; l < k; ++l) {
          grad[c * k + l] = cplx(ref.deriv(q, c, l) * inv_h, kappa[e.free_axes[l]] * ref.value(q, c));
        }
      }
      for (int r = 0; r < nc; ++r) {      // test
        for (int c = 0; c < nc; ++c) {    // trial
          cplx v = 0.0;
          for (int l = 0; l < k; ++l) v += grad[c * k + l] * std::conj(grad[r * k + l]);
          local[r * nc + c] += wq * v;
        }
      }
    }
    for (int r = 0; r < nc; ++r) {
      for (int c = 0; c < nc; ++c) triplets.emplace_back(e.dofs[r], e.dofs[c], local[r * nc + c]);
    }
  }
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  CSparse S(n, n);
  S.setFromTriplets(triplets.begin(), triplets.end());
  return S;
}

CVec assemble_constant_image(const DiscreteSpace& sp, const QpField& a, const RVec& kappa) {
  check_field(sp, a);
  if (kappa.size() != sp.dim()) throw ConfigError("quasimomentum has the wrong dimension");
  const double inv_h = 1.0 / sp.h();
  CVec out = CVec::Zero(static_cast<Eigen::Index>(sp.num_dofs()));
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    double kappa_sq = 0.0;
    for (int k : e.free_axes) kappa_sq += kappa[k] * kappa[k];
    for (int q = 0; q < ref.num_points; ++q) {
      const double wa = sp.qp_weight(e, q) * a.values[sp.qp_offset(ei) + q];
      for (int c = 0; c < ref.num_corners; ++c) {
        double drift = 0.0;
        for (int l = 0; l < ref.k; ++l) drift += kappa[e.free_axes[l]] * ref.deriv(q, c, l) * inv_h;
        // iκ·(∇φ - iκφ) = iκ·∇φ + |κ|²φ
        out[e.dofs[c]] += wa * cplx(kappa_sq * ref.value(q, c), drift);
      }
    }
  }
  return out;
}

WeightedVectors assemble_weighted_vectors(const DiscreteSpace& sp, const QpField& a) {
  check_field(sp, a);
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  const double inv_h = 1.0 / sp.h();
  WeightedVectors out{RVec::Zero(n), RVec::Zero(n), std::vector<RVec>(sp.dim(), RVec::Zero(n))};
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    const double scale = e.weight * std::pow(sp.h(), ref.k);
    for (int q = 0; q < ref.num_points; ++q) {
      const double wq = scale * ref.weight[q];
      const double aq = a.values[sp.qp_offset(ei) + q];
      for (int c = 0; c < ref.num_corners; ++c) {
        const int i = e.dofs[c];
        out.w[i] += wq * aq * ref.value(q, c);
        out.m[i] += wq * ref.value(q, c);
        for (int l = 0; l < ref.k; ++l) out.b[e.free_axes[l]][i] += wq * aq * ref.deriv(q, c, l) * inv_h;
      }
    }
  }
  return out;
}

FiberSystem build_fiber_system(const DiscreteSpace& sp, const QpField& a, const RVec& kappa) {
  auto vectors = assemble_weighted_vectors(sp, a);
  return {assemble_mass(sp), assemble_shifted_stiffness(sp, a, kappa), std::move(vectors.w),
          std::move(vectors.m), kappa};
}

std::vector<double> sample_gradient(const DiscreteSpace& sp, const RVec& coeffs) {
  const int d = sp.dim();
  const double inv_h = 1.0 / sp.h();
  std::vector<double> out(sp.num_qps() * d, 0.0);
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    for (int q = 0; q < ref.num_points; ++q) {
      double* g = out.data() + (sp.qp_offset(ei) + q) * d;
      for (int c = 0; c < ref.num_corners; ++c) {
        for (int l = 0; l < ref.k; ++l) g[e.free_axes[l]] += coeffs[e.dofs[c]] * ref.deriv(q, c, l) * inv_h;
      }
    }
  }
  return out;
}

}  // namespace homog
