#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "generators.hpp"
#include "homog/errors.hpp"
#include "homog/mesh_space.hpp"

using namespace homog;

namespace {

Eigen::MatrixXcd dense(const CSparse& s) { return Eigen::MatrixXcd(s); }
Eigen::MatrixXd dense(const RSparse& s) { return Eigen::MatrixXd(s); }

// Nodal index of lattice point i of a d = 1 space.
int dof_at(const DiscreteSpace& sp, double y) {
  for (std::size_t i = 0; i < sp.num_dofs(); ++i) {
    if (std::abs(sp.node_coords(static_cast<int>(i))[0] - y) < 1e-12) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_SUITE("mesh_space") {
  TEST_CASE("element and DOF counts") {
    const auto leb1 = build_space(lebesgue_measure(1), 8);
    CHECK(leb1.num_dofs() == 8);
    CHECK(leb1.elements().size() == 8);
    // Two lines of 4 segments each; the crossing node is shared: 4 + 4 - 1.
    const auto grid = build_space(square_grid_measure(2), 4);
    CHECK(grid.num_dofs() == 7);
    CHECK(grid.elements().size() == 8);
    const auto leb2 = build_space(lebesgue_measure(2), 4);
    CHECK(leb2.num_dofs() == 16);
    CHECK(leb2.elements().size() == 16);
  }

  TEST_CASE("every DOF is used and quadrature weights sum to the mass") {
    gen::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = rng.integer(1, 3);
      const int n = rng.integer(2, 5);
      const auto sp = build_space(gen::measure(rng, d, n), n);
      std::vector<int> used(sp.num_dofs(), 0);
      double total = 0.0;
      for (const auto& e : sp.elements()) {
        for (int dof : e.dofs) used[dof] = 1;
        const int nq = sp.reference(static_cast<int>(e.free_axes.size())).num_points;
        for (int q = 0; q < nq; ++q) total += sp.qp_weight(e, q);
      }
      CHECK(std::count(used.begin(), used.end(), 0) == 0);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("fixed coordinates snap to the lattice or fail") {
    const auto near = PeriodicMeasure(2, {{ComponentKind::plane, {{1, 0.25 + 1e-12}}, 1.0}}).normalized();
    const auto sp = build_space(near, 4);
    CHECK(sp.warnings().size() == 1);
    const auto off = PeriodicMeasure(2, {{ComponentKind::plane, {{1, 0.3}}, 1.0}}).normalized();
    CHECK_THROWS_AS(build_space(off, 4), ConfigError);
    CHECK_THROWS_AS(build_space(lebesgue_measure(1), 1), ConfigError);
  }

  TEST_CASE("mass matrix") {
    const int n = 8;
    const double h = 1.0 / n;
    const auto sp = build_space(lebesgue_measure(1), n);
    const Eigen::MatrixXd m = dense(assemble_mass(sp));
    for (int i = 0; i < n; ++i) {
      const int a = dof_at(sp, i * h), b = dof_at(sp, ((i + 1) % n) * h);
      CHECK(m(a, a) == doctest::Approx(2 * h / 3).epsilon(1e-14));
      CHECK(m(a, b) == doctest::Approx(h / 6).epsilon(1e-14));
    }
    CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-14));

    // Grid: each line carries the 1D mass matrix scaled by its weight 1/2;
    // the crossing DOF gets both contributions.
    const auto grid = build_space(square_grid_measure(2), n);
    const Eigen::MatrixXd mg = dense(assemble_mass(grid));
    CHECK(mg.sum() == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < grid.num_dofs(); ++i) {
      const auto y = grid.node_coords(static_cast<int>(i));
      const bool crossing = y[0] == 0.0 && y[1] == 0.0;
      CHECK(mg(i, i) == doctest::Approx((crossing ? 2.0 : 1.0) * 0.5 * 2 * h / 3).epsilon(1e-14));
    }
    const auto vectors = assemble_weighted_vectors(grid, constant_field(grid, 1.0));
    CHECK((mg.rowwise().sum() - vectors.m).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("1D stiffness at kappa = 0") {
    const int n = 16;
    const double h = 1.0 / n;
    const auto sp = build_space(lebesgue_measure(1), n);
    const Eigen::MatrixXcd s = dense(assemble_shifted_stiffness(sp, constant_field(sp, 1.0), RVec::Zero(1)));
    for (int i = 0; i < n; ++i) {
      const int a = dof_at(sp, i * h), b = dof_at(sp, ((i + 1) % n) * h);
      CHECK(std::abs(s(a, a) - 2.0 / h) <= 1e-11);
      CHECK(std::abs(s(a, b) + 1.0 / h) <= 1e-11);
    }
  }

  TEST_CASE("S(kappa) applied to constants") {
    gen::Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const RVec k1 = gen::kappa(rng, 1);
      const auto sp1 = build_space(lebesgue_measure(1), 12);
      const CSparse s1 = assemble_shifted_stiffness(sp1, constant_field(sp1, 1.0), k1);
      const RSparse m1 = assemble_mass(sp1);
      const CVec one1 = CVec::Ones(static_cast<Eigen::Index>(sp1.num_dofs()));
      CHECK((s1 * one1 - k1.squaredNorm() * (m1 * one1)).cwiseAbs().maxCoeff() <= 1e-12);

      const RVec k2 = gen::kappa(rng, 2);
      const auto sp2 = build_space(lebesgue_measure(2), 6);
      const CSparse s2 = assemble_shifted_stiffness(sp2, constant_field(sp2, 1.0), k2);
      const CVec one2 = CVec::Ones(static_cast<Eigen::Index>(sp2.num_dofs()));
      CHECK((s2 * one2 - k2.squaredNorm() * (assemble_mass(sp2) * one2)).cwiseAbs().maxCoeff() <= 1e-12);

      // On the grid each line only sees the component of kappa along it:
      // S 1 = sum over lines of kappa_line^2 M_line 1.
      const auto grid = build_space(square_grid_measure(2), 6);
      const CSparse sg = assemble_shifted_stiffness(grid, constant_field(grid, 1.0), k2);
      const CVec oneg = CVec::Ones(static_cast<Eigen::Index>(grid.num_dofs()));
      CVec expected = CVec::Zero(oneg.size());
      for (const auto& e : grid.elements()) {
        const double k = k2[e.free_axes[0]];
        const double h = grid.h();
        for (int dof : e.dofs) expected[dof] += e.weight * k * k * h / 2;
      }
      CHECK((sg * oneg - expected).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((assemble_constant_image(grid, constant_field(grid, 1.0), k2) - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("S(0) annihilates constants for any coefficient") {
    gen::Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
      const int d = rng.integer(1, 3);
      const auto sp = build_space(gen::measure(rng, d, 4), 4);
      const auto a = sample_coefficient(sp, {parse_expr("2+sin(2*pi*y1)*cos(2*pi*y" + std::to_string(d) + ")", d), 1, 3});
      const CSparse s = assemble_shifted_stiffness(sp, a, RVec::Zero(d));
      CHECK((s * CVec::Ones(s.rows())).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("S(kappa) is Hermitian and positive semidefinite") {
    gen::Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
      const int d = rng.integer(1, 3);
      const auto sp = build_space(gen::measure(rng, d, 4), 4);
      const auto a = sample_coefficient(sp, {parse_expr("1.5+cos(2*pi*(y1+0.3))", d), 0.5, 2.5});
      const CSparse s = assemble_shifted_stiffness(sp, a, gen::kappa(rng, d));
      const Eigen::MatrixXcd ds = dense(s);
      CHECK((ds - ds.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
      for (int k = 0; k < 5; ++k) {
        const CVec v = gen::complex_vector(rng, s.rows());
        CHECK(v.dot(s * v).real() >= -1e-12 * v.squaredNorm());
      }
    }
  }

  TEST_CASE("gauge identity: shifted assembly equals conjugated basis functions") {
    // Independent path: ∫ A ∇ψ_j · conj(∇ψ_i) with ψ = e^{iκ·y} φ, the phase
    // evaluated at every quadrature point.
    gen::Rng rng(29);
    for (int trial = 0; trial < 5; ++trial) {
      const int d = rng.integer(1, 3);
      const auto sp = build_space(gen::measure(rng, d, 3), 3);
      const auto a = sample_coefficient(sp, {parse_expr("2+cos(2*pi*y1)", d), 1, 3});
      const RVec kappa = gen::kappa(rng, d);
      const Eigen::MatrixXcd s = dense(assemble_shifted_stiffness(sp, a, kappa));
      const auto nd = static_cast<Eigen::Index>(sp.num_dofs());
      Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(nd, nd);
      std::vector<double> y(d);
      for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
        const auto& e = sp.elements()[ei];
        const auto& ref = sp.reference(static_cast<int>(e.free_axes.size()));
        for (int q = 0; q < ref.num_points; ++q) {
          sp.qp_coords(e, q, y);
          double phase = 0.0;
          for (int k : e.free_axes) phase += kappa[k] * y[k];
          const cplx ek = std::polar(1.0, phase);
          const double w = sp.qp_weight(e, q) * a.values[sp.qp_offset(ei) + q];
          for (int r = 0; r < ref.num_corners; ++r) {
            for (int c = 0; c < ref.num_corners; ++c) {
              cplx acc = 0.0;
              for (int l = 0; l < ref.k; ++l) {
                const int axis = e.free_axes[l];
                const cplx gc = ek * (ref.deriv(q, c, l) / sp.h() + cplx(0, kappa[axis]) * ref.value(q, c));
                const cplx gr = ek * (ref.deriv(q, r, l) / sp.h() + cplx(0, kappa[axis]) * ref.value(q, r));
                acc += gc * std::conj(gr);
              }
              g(e.dofs[r], e.dofs[c]) += w * acc;
            }
          }
        }
      }
      CHECK((s - g).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("weighted vectors") {
    const auto leb = build_space(lebesgue_measure(2), 6);
    const auto v = assemble_weighted_vectors(leb, constant_field(leb, 1.0));
    CHECK(v.b[0].cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(v.b[1].cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((v.w - v.m).cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.m.sum() == doctest::Approx(1.0).epsilon(1e-14));

    const auto grid = build_space(square_grid_measure(2), 8);
    const auto g = assemble_weighted_vectors(grid, constant_field(grid, 1.0));
    CHECK(g.b[0].cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(g.b[1].cwiseAbs().maxCoeff() <= 1e-14);

    // Nonconstant coefficient: entries of b_j sum to zero (∫ A ∂_j 1 = 0).
    const auto a = sample_coefficient(leb, {parse_expr("2+cos(2*pi*y1)", 2), 1, 3});
    const auto va = assemble_weighted_vectors(leb, a);
    CHECK(va.b[0].cwiseAbs().maxCoeff() > 1e-3);
    CHECK(std::abs(va.b[0].sum()) <= 1e-14);
  }

  TEST_CASE("smallest nonzero eigenvalue converges to 4 pi^2 at order 2") {
    std::vector<double> errors;
    for (int n : {16, 32, 64}) {
      const auto sp = build_space(lebesgue_measure(1), n);
      const Eigen::MatrixXd s = dense(assemble_shifted_stiffness(sp, constant_field(sp, 1.0), RVec::Zero(1))).real();
      const Eigen::MatrixXd m = dense(assemble_mass(sp));
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, m);
      errors.push_back(std::abs(eig.eigenvalues()[1] - 4 * std::numbers::pi * std::numbers::pi));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double order = std::log2(errors[i - 1] / errors[i]);
      CHECK(order == doctest::Approx(2.0).epsilon(0.05));
    }
  }

  TEST_CASE("coefficient sampling rejects nonpositive values") {
    const auto sp = build_space(lebesgue_measure(1), 8);
    CHECK_THROWS_AS(sample_coefficient(sp, {parse_expr("y1 - 0.5", 1), 0, 0}), HypothesisError);
    CHECK_THROWS_AS(constant_field(sp, 0.0), HypothesisError);
    QpField bad = constant_field(sp, 1.0);
    bad.values.pop_back();
    CHECK_THROWS_AS(assemble_shifted_stiffness(sp, bad, RVec::Zero(1)), ConfigError);
  }

  TEST_CASE("gradient sampling of a linear-in-cell field") {
    // N(y) = y on the lattice except for the wrap; inside the interior cells
    // the sampled derivative is exactly 1.
    const int n = 8;
    const auto sp = build_space(lebesgue_measure(1), n);
    RVec f(n);
    for (int i = 0; i < n; ++i) f[i] = sp.node_coords(i)[0];
    const auto g = sample_gradient(sp, f);
    for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
      const auto& e = sp.elements()[ei];
      if (e.origin[0] == n - 1) continue;
      for (int q = 0; q < 3; ++q) CHECK(g[sp.qp_offset(ei) + q] == doctest::Approx(1.0));
    }
  }
}
