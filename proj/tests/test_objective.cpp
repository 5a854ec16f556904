#include <doctest.h>

#include "reflectopt/objective.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace reflectopt;

namespace {

Matrix ou_matrix()
{
  Matrix B(2, 2);
  B << 1.0, 0.9, 0.9, 1.0;
  return B.inverse();
}

UnnormalizedDensity brownian(Index d) { return UnnormalizedDensity::analytic(Potential::zero(d)); }

Vector random_radii(Index n, std::mt19937_64 &gen, double lo = 0.8, double hi = 1.6)
{
  std::uniform_real_distribution<double> u(lo, hi);
  return Vector::NullaryExpr(n, [&] { return u(gen); });
}

Vector fd_gradient(StarPolytope const &poly, UnnormalizedDensity const &rho, CostModel const &cost,
                   CubatureRule const &rule = default_rule(), double h = 1e-6)
{
  Vector g(poly.vertex_count());
  for (Index i = 0; i < g.size(); ++i) {
    Vector up = poly.radii(), down = poly.radii();
    up(i) += h;
    down(i) -= h;
    g(i) = (evaluate(poly.with_radii(up), rho, cost, rule).J - evaluate(poly.with_radii(down), rho, cost, rule).J) / (2 * h);
  }
  return g;
}

double ball_J(double r, double kappa) { return 2.0 * r / 3.0 + 2.0 * kappa / r; }

// Sector lookup, then the side of that sector's edge.
bool inside_star_polygon(StarPolytope const &poly, Eigen::Vector2d const &x)
{
  Index const N = poly.vertex_count();
  double const angle = std::atan2(x(1), x(0));
  double const step = 2.0 * std::numbers::pi / static_cast<double>(N);
  double a = angle - step;
  while (a < 0.0) { a += 2.0 * std::numbers::pi; }
  Index const i = static_cast<Index>(std::floor(a / step)) % N;
  Index const j = (i + 1) % N;
  Eigen::Vector2d const p = poly.vertex(i), q = poly.vertex(j);
  Eigen::Vector2d const e = q - p, w = x - p;
  return e(0) * w(1) - e(1) * w(0) >= 0.0;
}

} // namespace

TEST_CASE("Brownian circle benchmark")
{
  double const r = std::sqrt(3.0);
  auto const poly = StarPolytope(make_directions(2, 512), Vector::Constant(512, r));
  auto const v = evaluate(poly, brownian(2), CostModel::norm(2, 1.0));
  CHECK(v.J == doctest::Approx(4.0 / std::sqrt(3.0)).epsilon(1e-4));
  CHECK(v.J == doctest::Approx((v.bulk + v.boundary) / v.mass).epsilon(1e-15));
  CHECK(v.boundary > 0.0);
  CHECK(v.bulk > 0.0);
}

TEST_CASE("zero model gives zero objective")
{
  auto const poly = StarPolytope(make_directions(2, 7), Vector::Ones(7));
  CHECK(evaluate(poly, brownian(2), CostModel::zero(2, 0.0)).J == 0.0);
}

TEST_CASE("quotient scale invariance")
{
  std::mt19937_64 gen(1);
  auto const rho = UnnormalizedDensity::analytic(Potential::quadratic(ou_matrix()));
  auto const cost = CostModel::weighted_norm(Eigen::Vector2d(1.0, 5.0), 1.3);
  auto const poly = StarPolytope(make_directions(2, 30), random_radii(30, gen));
  auto const base = gradient(poly, rho, cost);
  auto const twice = gradient(poly, rho.scaled(2.0), cost);
  CHECK(twice.value.J == doctest::Approx(base.value.J).epsilon(1e-12));
  CHECK(twice.value.mass == doctest::Approx(2.0 * base.value.mass).epsilon(1e-12));
  CHECK((twice.partials - base.partials).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + base.partials.cwiseAbs().maxCoeff()));
}

TEST_CASE("gradient matches finite differences")
{
  std::mt19937_64 gen(2);
  auto const rho = UnnormalizedDensity::analytic(Potential::quadratic(ou_matrix()));
  auto const cost = CostModel::weighted_norm(Eigen::Vector2d(1.0, 5.0), 0.8);
  auto const poly = StarPolytope(make_directions(2, 20), random_radii(20, gen));
  // The OU density is narrow across its short axis; 16 nodes resolve it to well below the tolerance.
  auto const rule = gauss_legendre(16);
  auto const g = gradient(poly, rho, cost, rule);
  Vector const fd = fd_gradient(poly, rho, cost, rule);
  for (Index i = 0; i < fd.size(); ++i) {
    CHECK(std::abs(g.partials(i) - fd(i)) < 1e-5 * std::max(std::abs(fd(i)), 1e-3));
  }

  Matrix M(3, 3);
  M << 1.0, 0.2, 0.1, 0.2, 0.7, 0.0, 0.1, 0.0, 0.4;
  auto const rho3 = UnnormalizedDensity::analytic(Potential::quadratic(M));
  auto const cost3 = CostModel::weighted_norm(Eigen::Vector3d(1.0, 2.0, 0.5), 1.1);
  auto const poly3 = StarPolytope(make_directions(3, 16), random_radii(16, gen));
  auto const g3 = gradient(poly3, rho3, cost3);
  Vector const fd3 = fd_gradient(poly3, rho3, cost3);
  for (Index i = 0; i < fd3.size(); ++i) {
    CHECK(std::abs(g3.partials(i) - fd3(i)) < 1e-5 * std::max(std::abs(fd3(i)), 1e-3));
  }
}

TEST_CASE("stationarity and symmetry at the Brownian optimum")
{
  for (Index N : {64, 128}) {
    auto const poly = StarPolytope(make_directions(2, N), Vector::Constant(N, std::sqrt(3.0)));
    auto const g = gradient(poly, brownian(2), CostModel::norm(2, 1.0));
    CHECK(g.partials.cwiseAbs().maxCoeff() < 1e-3);
    CHECK(g.partials.maxCoeff() - g.partials.minCoeff() < 1e-10);
  }
}

TEST_CASE("fast planar path matches the generic path")
{
  std::mt19937_64 gen(3);
  auto const rho = UnnormalizedDensity::analytic(Potential::quadratic(ou_matrix()));
  for (double kappa : {0.5, 1.0, 2.0}) {
    auto const cost = CostModel::weighted_norm(Eigen::Vector2d(1.0, 5.0), kappa);
    auto const poly = StarPolytope(make_directions(2, 50), random_radii(50, gen));
    auto const generic = gradient(poly, rho, cost);
    auto const fast = gradient_2d(poly, rho, cost);
    CHECK(std::abs(fast.value.J - generic.value.J) < 1e-10 * generic.value.J);
    CHECK(evaluate_2d(poly, rho, cost).J == doctest::Approx(evaluate(poly, rho, cost).J).epsilon(1e-10));
    double const scale = generic.partials.cwiseAbs().maxCoeff();
    CHECK((fast.partials - generic.partials).cwiseAbs().maxCoeff() < 1e-8 * scale);
  }
  CHECK_THROWS_AS(evaluate_2d(StarPolytope(make_directions(3, 6), Vector::Ones(6)), brownian(3), CostModel::norm(3, 1.0)),
                  CapabilityError);
  Matrix shifted = make_directions(2, 6).points;
  shifted.col(0) = Eigen::Vector2d(std::cos(0.1), std::sin(0.1));
  auto const uneven = StarPolytope(directions_from_points(shifted), Vector::Ones(6));
  CHECK_THROWS_AS(evaluate_2d(uneven, brownian(2), CostModel::norm(2, 1.0)), CapabilityError);
}

TEST_CASE("planar fast path examples")
{
  auto const square = StarPolytope(make_directions(2, 4), Vector::Ones(4));
  CHECK(evaluate_2d(square, brownian(2), CostModel::zero(2, 1.0)).mass == doctest::Approx(2.0).epsilon(1e-14));

  for (Index N : {5, 9, 24}) {
    double const r = 1.7;
    auto const gon = StarPolytope(make_directions(2, N), Vector::Constant(N, r));
    double const s = std::sin(2.0 * std::numbers::pi / static_cast<double>(N));
    double const area = 0.5 * static_cast<double>(N) * r * r * s;
    double const perimeter = static_cast<double>(N) * 2.0 * r * std::sin(std::numbers::pi / static_cast<double>(N));
    auto const v = evaluate_2d(gon, brownian(2), CostModel::zero(2, 1.0));
    CHECK(v.J == doctest::Approx(perimeter / area).epsilon(1e-13));
  }

  std::mt19937_64 gen(4);
  auto const poly = StarPolytope(make_directions(2, 12), random_radii(12, gen));
  auto const cost = CostModel::zero(2, 0.7);
  auto const g = gradient_2d(poly, brownian(2), cost);
  Vector const fd = fd_gradient(poly, brownian(2), cost);
  CHECK((g.partials - fd).cwiseAbs().maxCoeff() < 1e-5 * fd.cwiseAbs().maxCoeff());

  auto const circle = StarPolytope(make_directions(2, 128), Vector::Constant(128, std::sqrt(3.0)));
  CHECK(gradient_2d(circle, brownian(2), CostModel::norm(2, 1.0)).partials.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("polygon approximation converges at least linearly")
{
  double const r = std::sqrt(3.0);
  double prev = 0.0;
  for (Index N : {16, 32, 64, 128}) {
    auto const poly = StarPolytope(make_directions(2, N), Vector::Constant(N, r));
    double const err = std::abs(evaluate(poly, brownian(2), CostModel::norm(2, 1.0), gauss_legendre(12)).J - ball_J(r, 1.0));
    if (prev > 0.0) { CHECK(prev / err >= 1.8); }
    prev = err;
  }
}

TEST_CASE("bulk and mass agree with Monte Carlo")
{
  std::mt19937_64 gen(5);
  auto const rho = UnnormalizedDensity::analytic(Potential::quadratic(ou_matrix()));
  auto const cost = CostModel::weighted_norm(Eigen::Vector2d(1.0, 5.0), 1.0);
  auto const poly = StarPolytope(make_directions(2, 24), random_radii(24, gen));
  auto const v = evaluate(poly, rho, cost);
  double const R = poly.radii().maxCoeff();
  std::uniform_real_distribution<double> u(-R, R);
  int const n = 1'000'000;
  double sb = 0, sb2 = 0, sm = 0, sm2 = 0;
  for (int k = 0; k < n; ++k) {
    Eigen::Vector2d const x(u(gen), u(gen));
    if (!inside_star_polygon(poly, x)) { continue; }
    double const m = rho.value(x);
    double const b = cost(x) * m;
    sb += b;
    sb2 += b * b;
    sm += m;
    sm2 += m * m;
  }
  double const box = 4.0 * R * R;
  auto check = [&](double s, double s2, double exact) {
    double const mean = s / n;
    double const se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(box * mean - exact) < 3.0 * box * se);
  };
  check(sb, sb2, v.bulk);
  check(sm, sm2, v.mass);
}

TEST_CASE("thread count does not change results")
{
  std::mt19937_64 gen(6);
  auto const rho = UnnormalizedDensity::analytic(Potential::quadratic(Matrix::Identity(3, 3), 0.3));
  auto const poly = StarPolytope(make_directions(3, 30), random_radii(30, gen));
  auto const a = gradient(poly, rho, CostModel::norm(3, 1.0), default_rule(), 1);
  auto const b = gradient(poly, rho, CostModel::norm(3, 1.0), default_rule(), 3);
  CHECK(a.value.J == b.value.J);
  CHECK(a.partials == b.partials);
}

TEST_CASE("dimension mismatch is rejected")
{
  auto const poly = StarPolytope(make_directions(2, 6), Vector::Ones(6));
  CHECK_THROWS_AS(evaluate(poly, brownian(3), CostModel::norm(2, 1.0)), ArgumentError);
  CHECK_THROWS_AS(evaluate(poly, brownian(2), CostModel::norm(3, 1.0)), ArgumentError);
}
