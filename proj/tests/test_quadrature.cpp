#include <doctest.h>

#include "reflectopt/quadrature.hpp"

#include <cmath>
#include <random>

using namespace reflectopt;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Smooth test field exp(-x^T A x / 2 + b.x) with its gradient.
struct Field
{
  Matrix A;
  Vector b;
  double operator()(Vector const &x) const { return std::exp(-0.5 * x.dot(A * x) + b.dot(x)); }
  Vector grad(Vector const &x) const { return (*this)(x) * (b - A * x); }
};

Field random_field(Index d, std::mt19937_64 &gen)
{
  std::normal_distribution<double> normal;
  Matrix M = Matrix::NullaryExpr(d, d, [&] { return normal(gen); });
  return Field{0.3 * M * M.transpose(), Vector::NullaryExpr(d, [&] { return 0.3 * normal(gen); })};
}

// Random nondegenerate frame: directions within 60 degrees of a common axis,
// so the facet stays away from the origin as it does in a fine fan.
SimplexFrame<double> random_frame(Index d, std::mt19937_64 &gen)
{
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  while (true) {
    Matrix Q(d, d);
    for (Index j = 0; j < d; ++j) {
      Vector q = Vector::NullaryExpr(d, [&] { return 0.5 * normal(gen); });
      q(0) += 1.0;
      Q.col(j) = q.normalized();
    }
    if ((Q.row(0).array() < 0.5).any()) { continue; }
    Vector r = Vector::NullaryExpr(d, [&] { return radius(gen); });
    if (std::abs((Q * r.asDiagonal()).determinant()) < 0.05) { continue; }
    return SimplexFrame<double>::from_directions(Q, r);
  }
}

SimplexFrame<double> bumped(SimplexFrame<double> const &f, Index slot, double h)
{
  Vector r = f.radii;
  r(slot) += h;
  return SimplexFrame<double>::from_directions(f.Q, r);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-8); }

} // namespace

TEST_CASE("gauss_legendre rule")
{
  auto const rule = gauss_legendre(8);
  CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((rule.nodes.array() > 0.0).all());
  CHECK((rule.nodes.array() < 1.0).all());
  for (int k = 0; k <= 15; ++k) {
    double const q = (rule.weights.array() * rule.nodes.array().pow(k)).sum();
    CHECK(q == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
  }
  CHECK(rule.order(2) == 14);
  CHECK_THROWS_AS(gauss_legendre(0), ArgumentError);
}

TEST_CASE("eta and weights")
{
  Eigen::Vector2d t(0.3, 0.6);
  Vector const c = eta_coefficients<double>(t);
  CHECK(c.sum() == doctest::Approx(1.0));
  CHECK((c.array() >= 0.0).all());
  CHECK(psi<double>(Vector::Constant(1, 0.4)) == 1.0);
  CHECK(psi_hat<double>(Vector::Constant(1, 0.4)) == doctest::Approx(0.6));
  // d = 4: psi = t1^2 t2
  CHECK(psi<double>(Eigen::Vector3d(0.5, 0.3, 0.9)) == doctest::Approx(0.25 * 0.3));
}

TEST_CASE("integrate_simplex examples")
{
  auto const tri = SimplexFrame<double>::from_vertices(Matrix::Identity(2, 2));
  CHECK(integrate_simplex([](Vector const &) { return 1.0; }, tri) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(integrate_simplex([](Vector const &x) { return x(0); }, tri) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  std::mt19937_64 gen(1);
  for (int k = 0; k < 10; ++k) {
    auto const f = random_frame(3, gen);
    CHECK(integrate_simplex([](Vector const &) { return 1.0; }, f) == doctest::Approx(f.volume()).epsilon(1e-13));
  }
  // Monomials up to the rule order on the unit triangle: a! b! / (a + b + 2)!.
  auto const rule = default_rule();
  for (int a = 0; a <= 7; ++a) {
    for (int b = 0; a + b <= rule.order(2); ++b) {
      double const got = integrate_simplex([&](Vector const &x) { return std::pow(x(0), a) * std::pow(x(1), b); }, tri);
      CHECK(std::abs(got - factorial(a) * factorial(b) / factorial(a + b + 2)) < 1e-12);
    }
  }
}

TEST_CASE("affine integrands are exact at the centroid")
{
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 20; ++k) {
    auto const f = random_frame(3, gen);
    Vector const a = Vector::NullaryExpr(3, [&] { return normal(gen); });
    double const c0 = normal(gen);
    Vector const centroid = f.P.rowwise().sum() / 4.0;
    double const got = integrate_simplex([&](Vector const &x) { return c0 + a.dot(x); }, f);
    CHECK(got == doctest::Approx(f.volume() * (c0 + a.dot(centroid))).epsilon(1e-12));
  }
}

TEST_CASE("integrate_facet examples")
{
  auto const tri = SimplexFrame<double>::from_vertices(Matrix::Identity(2, 2));
  CHECK(integrate_facet([](Vector const &) { return 1.0; }, tri) == doctest::Approx(std::sqrt(2.0)));
  CHECK(integrate_facet([](Vector const &x) { return x(0) + x(1); }, tri) == doctest::Approx(std::sqrt(2.0)));

  Matrix P(3, 3);
  P << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  auto const reg = SimplexFrame<double>::from_vertices(P);
  Eigen::Vector3d const e1 = P.col(1) - P.col(0), e2 = P.col(2) - P.col(0);
  double const cross_area = 0.5 * e1.cross(e2).norm();
  CHECK(integrate_facet([](Vector const &) { return 1.0; }, reg) == doctest::Approx(cross_area).epsilon(1e-14));
  CHECK(reg.facet_volume() == doctest::Approx(cross_area).epsilon(1e-14));
}

TEST_CASE("vector-valued integrands")
{
  std::mt19937_64 gen(4);
  auto const f = random_frame(3, gen);
  auto const field = random_field(3, gen);
  Eigen::Vector2d const both =
    integrate_simplex([&](Vector const &x) { return Eigen::Vector2d(field(x), x.norm() * field(x)); }, f);
  CHECK(both(0) == doctest::Approx(integrate_simplex(field, f)).epsilon(1e-14));
  CHECK(both(1) == doctest::Approx(integrate_simplex([&](Vector const &x) { return x.norm() * field(x); }, f))
                     .epsilon(1e-14));
}

TEST_CASE("d_integrate examples")
{
  Matrix Q = Matrix::Identity(2, 2);
  auto const f = SimplexFrame<double>::from_directions(Q, Eigen::Vector2d(1.3, 0.7));
  auto const one = [](Vector const &) { return 1.0; };
  auto const zero_grad = [](Vector const &x) { return Vector::Zero(x.size()).eval(); };
  CHECK(d_integrate_simplex(one, f, 0) == doctest::Approx(0.7 / 2));
  CHECK(d_integrate_simplex(one, f, 1) == doctest::Approx(1.3 / 2));
  Vector const p1 = f.P.col(0), p2 = f.P.col(1);
  double const edge_slope = (p1 - p2).dot(f.Q.col(0)) / (p2 - p1).norm();
  CHECK(d_integrate_facet(one, zero_grad, f, 0) == doctest::Approx(edge_slope).epsilon(1e-13));

  std::mt19937_64 gen(6);
  auto const field = random_field(2, gen);
  auto const scaled = [&](Vector const &x) { return 3.5 * field(x); };
  auto const scaled_grad = [&](Vector const &x) { return (3.5 * field.grad(x)).eval(); };
  auto const grad = [&](Vector const &x) { return field.grad(x); };
  CHECK(d_integrate_facet(scaled, scaled_grad, f, 1) ==
        doctest::Approx(3.5 * d_integrate_facet(field, grad, f, 1)).epsilon(1e-13));
  CHECK_THROWS_AS(d_integrate_simplex(one, f, 2), ArgumentError);
}

TEST_CASE("derivative formulas agree with finite differences")
{
  std::mt19937_64 gen(8);
  double const h = 1e-5;
  // Some random fields are peaked on the scale of the simplex, so use a finer rule than the default.
  auto const rule = gauss_legendre(16);
  double worst_simplex = 0.0, worst_facet = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Index const d = trial % 2 == 0 ? 2 : 3;
    auto const f = random_frame(d, gen);
    auto const field = random_field(d, gen);
    auto const grad = [&](Vector const &x) { return field.grad(x); };
    auto const norm_field = [&](Vector const &x) { return x.norm() * field(x); };
    for (Index slot = 0; slot < d; ++slot) {
      auto const up = bumped(f, slot, h), down = bumped(f, slot, -h);
      double const fd_s =
        (integrate_simplex(norm_field, up, rule) - integrate_simplex(norm_field, down, rule)) / (2 * h);
      worst_simplex = std::max(worst_simplex, rel(d_integrate_simplex(norm_field, f, slot, rule), fd_s));
      double const fd_f = (integrate_facet(field, up, rule) - integrate_facet(field, down, rule)) / (2 * h);
      worst_facet = std::max(worst_facet, rel(d_integrate_facet(field, grad, f, slot, rule), fd_f));
    }
  }
  CHECK(worst_simplex < 1e-6);
  CHECK(worst_facet < 1e-6);
}

TEST_CASE("vertex order does not change plain integrals")
{
  std::mt19937_64 gen(10);
  auto const rule = gauss_legendre(24);
  for (int trial = 0; trial < 20; ++trial) {
    auto const f = random_frame(3, gen);
    auto const field = random_field(3, gen);
    double const base = integrate_facet(field, f, rule);
    for (Index slot = 1; slot < 3; ++slot) {
      CHECK(integrate_facet(field, f, rule, slot) == doctest::Approx(base).epsilon(1e-12));
      Matrix Q = f.Q;
      Vector r = f.radii;
      Q.col(0).swap(Q.col(slot));
      std::swap(r(0), r(slot));
      auto const g = SimplexFrame<double>::from_directions(Q, r);
      CHECK(integrate_simplex(field, g, rule) == doctest::Approx(integrate_simplex(field, f, rule)).epsilon(1e-12));
      CHECK(integrate_facet(field, g, rule) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("singular gram is rejected")
{
  SimplexFrame<double> f;
  f.P = Matrix::Identity(2, 2);
  f.Q = f.P;
  f.radii = Vector::Ones(2);
  f.P_minus1 = Vector::Zero(2);
  f.gram = Matrix::Zero(1, 1);
  f.detP = 1.0;
  auto const one = [](Vector const &) { return 1.0; };
  auto const zero_grad = [](Vector const &x) { return Vector::Zero(x.size()).eval(); };
  CHECK_THROWS_AS(d_integrate_facet(one, zero_grad, f, 0), GeometryError);
}

TEST_CASE("long double frames")
{
  using Ld = long double;
  MatrixX<Ld> Q = MatrixX<Ld>::Identity(2, 2);
  VectorX<Ld> r(2);
  r << 2.0L, 3.0L;
  auto const f = SimplexFrame<Ld>::from_directions(Q, r);
  Ld const area = integrate_simplex([](VectorX<Ld> const &) { return 1.0L; }, f);
  CHECK(static_cast<double>(area) == doctest::Approx(3.0));
}
