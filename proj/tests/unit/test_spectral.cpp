#include <doctest.h>

#include <cmath>
#include <numbers>

#include "homog/errors.hpp"
#include "homog/spectral.hpp"

using namespace homog;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicMeasure parallel_lines() {
  return PeriodicMeasure(2, {{ComponentKind::plane, {{1, 0.0}}, 1.0}, {ComponentKind::plane, {{1, 0.5}}, 1.0}})
      .normalized();
}

RVec vec(std::initializer_list<double> v) {
  RVec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Continuum value for Lebesgue d = 1: the mean-zero modes are e^{2πiky},
// k ≠ 0, with eigenvalues (2πk + κ)².
double lebesgue_1d(double kappa) { return std::pow(2 * kPi - std::abs(kappa), 2); }

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("connectivity") {
    const auto leb = check_connectivity(build_space(lebesgue_measure(2), 8));
    CHECK(leb.connected);
    CHECK(leb.components == 1);
    CHECK(check_connectivity(build_space(square_grid_measure(2), 8)).connected);
    CHECK(check_connectivity(build_space(square_grid_measure(3), 4)).connected);
    const auto sp = build_space(parallel_lines(), 8);
    const auto two = check_connectivity(sp);
    CHECK_FALSE(two.connected);
    CHECK(two.components == 2);
    CHECK_THROWS_AS(require_connected(sp), HypothesisError);
    CHECK_THROWS_AS(poincare_constant(sp, default_kappa_grid(2, 3)), HypothesisError);
  }

  TEST_CASE("kappa grid") {
    const auto g = default_kappa_grid(2, 9);
    REQUIRE(g.size() == 81);
    CHECK(g[0][0] == -kPi);
    CHECK(g[0][1] == -kPi);
    CHECK(g[1][0] == doctest::Approx(-kPi + 2 * kPi / 9));
    CHECK(g[1][1] == -kPi);
    CHECK(g[9][1] == doctest::Approx(-kPi + 2 * kPi / 9));
    for (const auto& k : g) CHECK(k.maxCoeff() < kPi);
  }

  TEST_CASE("Lebesgue d = 1") {
    const auto sp = build_space(lebesgue_measure(1), 256);
    CHECK(mean_zero_eigenvalue(sp, vec({0.0})) == doctest::Approx(4 * kPi * kPi).epsilon(1e-3));
    const auto est = poincare_constant(sp, default_kappa_grid(1));
    CHECK(est.lambda_min == doctest::Approx(kPi * kPi).epsilon(1e-2));
    CHECK(est.C_P == doctest::Approx(1 / kPi).epsilon(1e-2));
    CHECK(est.kappa_argmin[0] == -kPi);
    CHECK(est.samples.size() == 9);
  }

  TEST_CASE("Lebesgue d = 2 at the corner of the zone") {
    const auto sp = build_space(lebesgue_measure(2), 64);
    CHECK(mean_zero_eigenvalue(sp, vec({-kPi, 0.0})) == doctest::Approx(kPi * kPi).epsilon(1e-2));
  }

  TEST_CASE("square grid against a dense reference") {
    // Independent dense computation: closed-form P1 segment matrices on the
    // two lines, mean-zero subspace by QR, full generalized eigensolve.
    const auto sp16 = build_space(square_grid_measure(2), 16);
    CHECK(mean_zero_eigenvalue(sp16, vec({0.0, 0.0})) == doctest::Approx(9.901353678398948).epsilon(1e-7));
    CHECK(mean_zero_eigenvalue(sp16, vec({-kPi, -kPi})) == doctest::Approx(10.12228604402701).epsilon(1e-7));
    CHECK(mean_zero_eigenvalue(sp16, vec({0.5, -1.25})) == doctest::Approx(9.884463694624609).epsilon(1e-7));
    const auto est16 = poincare_constant(sp16, default_kappa_grid(2));
    CHECK(est16.lambda_min == doctest::Approx(8.21854930130403).epsilon(1e-7));
    // The two lines are interchangeable, so the minimizer comes in a pair.
    const double lo = est16.kappa_argmin.minCoeff(), hi = est16.kappa_argmin.maxCoeff();
    CHECK(lo == -kPi);
    CHECK(hi == doctest::Approx(-kPi + 8 * kPi / 9));
  }

  TEST_CASE("square grid at n = 256") {
    const auto sp = build_space(square_grid_measure(2), 256);
    PoincareOptions opts;
    opts.workers = 0;
    const auto est = poincare_constant(sp, default_kappa_grid(2), opts);
    CHECK(est.lambda_min == doctest::Approx(7.96697813223809).epsilon(1e-6));
    CHECK(est.lambda_min > 0.0);
  }

  // With the tangential gradient on each line the grid minimum sits below π²
  // (about 0.807 π²), so the π² lower bound does not hold for this measure.
  TEST_CASE("square grid lower bound pi^2" * doctest::may_fail()) {
    const auto sp = build_space(square_grid_measure(2), 64);
    const auto est = poincare_constant(sp, default_kappa_grid(2));
    CHECK(est.lambda_min >= kPi * kPi * (1 - 1e-2));
  }

  TEST_CASE("Lebesgue d = 1 follows the continuum curve") {
    const auto sp = build_space(lebesgue_measure(1), 256);
    for (const auto& k : default_kappa_grid(1, 16))
      CHECK(mean_zero_eigenvalue(sp, k) == doctest::Approx(lebesgue_1d(k[0])).epsilon(1e-2));
  }

  TEST_CASE("grid minimum is stable under refinement to spacing pi/8") {
    for (const auto& m : {lebesgue_measure(1), lebesgue_measure(2), square_grid_measure(2)}) {
      const auto sp = build_space(m, 32);
      const double coarse = poincare_constant(sp, default_kappa_grid(m.dim(), 9)).lambda_min;
      const double fine = poincare_constant(sp, default_kappa_grid(m.dim(), 16)).lambda_min;
      CHECK(std::abs(fine - coarse) <= 0.1 * coarse);
    }
  }

  // Read pointwise, the bound fails: the continuum curve (2π - |κ|)² changes
  // by 12% to 27% per π/8 step, e.g. π² to (9π/8)² next to κ = -π.
  TEST_CASE("pointwise kappa-continuity within 10% at spacing pi/8" * doctest::may_fail()) {
    const auto sp = build_space(lebesgue_measure(1), 256);
    const auto grid = default_kappa_grid(1, 16);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double a = mean_zero_eigenvalue(sp, grid[i]);
      const double b = mean_zero_eigenvalue(sp, grid[i + 1]);
      worst = std::max(worst, std::abs(b - a) / std::min(a, b));
    }
    CHECK(worst <= 0.1);
  }

  TEST_CASE("pointwise variation matches the continuum curve") {
    const auto sp = build_space(lebesgue_measure(1), 256);
    const auto grid = default_kappa_grid(1, 16);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double measured = mean_zero_eigenvalue(sp, grid[i + 1]) / mean_zero_eigenvalue(sp, grid[i]);
      const double exact = lebesgue_1d(grid[i + 1][0]) / lebesgue_1d(grid[i][0]);
      CHECK(measured == doctest::Approx(exact).epsilon(2e-2));
    }
  }

  TEST_CASE("minimum over a grid is its smallest sample") {
    const auto sp = build_space(lebesgue_measure(2), 8);
    const auto est = poincare_constant(sp, default_kappa_grid(2, 4));
    double smallest = est.samples[0].lambda;
    for (const auto& s : est.samples) smallest = std::min(smallest, s.lambda);
    CHECK(est.lambda_min == smallest);
    CHECK(est.C_P == doctest::Approx(1 / std::sqrt(smallest)));
    CHECK_THROWS_AS(poincare_constant(sp, {}), ConfigError);
  }
}
