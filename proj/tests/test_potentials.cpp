#include <doctest.h>

#include "reflectopt/potentials.hpp"

#include <random>

using namespace reflectopt;

namespace {

Matrix ou_matrix()
{
  Matrix B(2, 2);
  B << 1.0, 0.9, 0.9, 1.0;
  return B.inverse();
}

Vector central_difference(std::function<double(Vector const &)> const &fn, Vector const &x, double h = 1e-5)
{
  Vector g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return g;
}

double rel_err(Vector const &a, Vector const &b) { return (a - b).norm() / std::max(1e-12, b.norm()); }

} // namespace

TEST_CASE("eval_potential examples")
{
  CHECK(eval_potential(Potential::zero(2), Eigen::Vector2d(3.0, -4.0)) == 0.0);
  auto const slow = Potential::quadratic(Matrix::Identity(2, 2), 0.1);
  CHECK(eval_potential(slow, Eigen::Vector2d(2.0, 0.0)) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(eval_potential(Potential::quadratic(ou_matrix()), Eigen::Vector2d(1.0, 1.0)) ==
        doctest::Approx(1.0 / 1.9).epsilon(1e-12));
  CHECK_THROWS_AS(eval_potential(slow, Eigen::Vector3d(1.0, 0.0, 0.0)), ArgumentError);
}

TEST_CASE("eval_drift examples")
{
  CHECK(eval_drift(Potential::zero(3), Eigen::Vector3d(1.0, 2.0, 3.0)).norm() == 0.0);
  auto const slow = Potential::quadratic(Matrix::Identity(2, 2), 0.1);
  Vector const drift = eval_drift(slow, Eigen::Vector2d(2.0, 0.0));
  CHECK(drift(0) == doctest::Approx(-0.2));
  CHECK(drift(1) == 0.0);
  CHECK_THROWS_AS(eval_drift(slow, Vector::Zero(4)), ArgumentError);
}

TEST_CASE("quadratic potential symmetrizes and rejects indefinite matrices")
{
  Matrix A(2, 2);
  A << 2.0, 1.0, 0.0, 2.0;
  auto const p = Potential::quadratic(A);
  CHECK((p.matrix() - p.matrix().transpose()).cwiseAbs().maxCoeff() == 0.0);
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(Potential::quadratic(bad), ArgumentError);
}

TEST_CASE("eval_cost examples")
{
  CHECK(eval_cost(CostModel::norm(2, 1.0), Eigen::Vector2d(3.0, 4.0)) == doctest::Approx(5.0));
  CHECK(eval_cost(CostModel::weighted_norm(Eigen::Vector2d(1.0, 5.0), 1.0), Eigen::Vector2d(1.0, 1.0)) ==
        doctest::Approx(std::sqrt(6.0)));
  CHECK(eval_cost(CostModel::weighted_norm(Eigen::Vector3d(2.0, 3.0, 7.0), 1.0), Vector::Zero(3)) == 0.0);
  CHECK_THROWS_AS(eval_cost(CostModel::norm(2, 1.0), Vector::Zero(3)), ArgumentError);
  CHECK_THROWS_AS(CostModel::weighted_norm(Eigen::Vector2d(1.0, -1.0), 1.0), ArgumentError);
}

TEST_CASE("gradient consistency at random points")
{
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  Matrix M = Matrix::NullaryExpr(3, 3, [&] { return normal(gen); });
  std::vector<Potential> models = {Potential::zero(2), Potential::quadratic(Matrix::Identity(2, 2), 0.1),
                                   Potential::quadratic(ou_matrix()), Potential::quadratic(M * M.transpose(), 0.5)};
  for (auto const &p : models) {
    for (int k = 0; k < 100; ++k) {
      Vector x = Vector::NullaryExpr(p.dimension(), [&] { return 2.0 * normal(gen); });
      Vector const fd = central_difference([&](Vector const &y) { return eval_potential(p, y); }, x);
      Vector const analytic = -eval_drift(p, x);
      if (analytic.norm() == 0.0) {
        CHECK(fd.norm() < 1e-9);
      } else {
        CHECK(rel_err(analytic, fd) < 1e-6);
      }
    }
  }
}

TEST_CASE("analytic density gradient matches finite differences")
{
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal;
  auto const rho = UnnormalizedDensity::analytic(Potential::quadratic(ou_matrix()));
  CHECK(rho.provenance == UnnormalizedDensity::Provenance::Analytic);
  for (int k = 0; k < 100; ++k) {
    Vector const x = Vector::NullaryExpr(2, [&] { return normal(gen); });
    CHECK(rel_err(rho.gradient(x), central_difference(rho.value, x)) < 1e-6);
    CHECK(rho.value(x) == doctest::Approx(std::exp(-eval_potential(Potential::quadratic(ou_matrix()), x))));
  }
}

TEST_CASE("radial symmetry flags")
{
  CHECK(Potential::zero(2).radially_symmetric());
  CHECK(Potential::quadratic(Matrix::Identity(2, 2), 0.1).radially_symmetric());
  CHECK_FALSE(Potential::quadratic(ou_matrix()).radially_symmetric());
  CHECK(CostModel::norm(3, 1.0).radially_symmetric());
  CHECK_FALSE(CostModel::weighted_norm(Eigen::Vector2d(1.0, 5.0), 1.0).radially_symmetric());
}
