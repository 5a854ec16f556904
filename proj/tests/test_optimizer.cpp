#include <doctest.h>

#include "reflectopt/optimizer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace reflectopt;

namespace {

OptimizerConfig box(double lower, double upper, StepRule rule = StepRule::ProjectedGradient)
{
  OptimizerConfig cfg;
  cfg.lower = lower;
  cfg.upper = upper;
  cfg.step_rule = rule;
  return cfg;
}

} // namespace

TEST_CASE("Brownian norm problem converges to the ball of radius sqrt 3")
{
  for (auto rule : {StepRule::ProjectedGradient, StepRule::ProjectedBFGS}) {
    auto const res = minimize(Potential::zero(2), CostModel::norm(2, 1.0), make_directions(2, 50), box(0.1, 10.0, rule));
    CHECK(res.converged);
    CHECK((res.polytope.radii().array() / std::sqrt(3.0) - 1.0).abs().maxCoeff() < 0.01);
    CHECK(roundness(res.polytope) < 0.02);
    CHECK(res.value.J == doctest::Approx(4.0 / std::sqrt(3.0)).epsilon(2e-3));
  }
}

TEST_CASE("trace is monotone, feasible and symmetric")
{
  auto cfg = box(0.5, 1.5);
  cfg.snapshot_every = 1;
  auto const res = minimize(Potential::zero(2), CostModel::norm(2, 1.0), make_directions(2, 40), cfg);
  for (size_t k = 1; k < res.trace.rows.size(); ++k) { CHECK(res.trace.rows[k].J <= res.trace.rows[k - 1].J); }
  for (auto const &[iter, r] : res.trace.snapshots) {
    CHECK(r.minCoeff() >= 0.5);
    CHECK(r.maxCoeff() <= 1.5);
    CHECK(r.maxCoeff() - r.minCoeff() < 1e-9);
  }
  // sqrt 3 lies outside the box, so the solution sits on the upper face.
  CHECK((res.polytope.radii().array() == 1.5).all());

  std::ostringstream csv;
  res.trace.write_csv(csv);
  CHECK(csv.str().rfind("iter,J,grad_inf,step\n", 0) == 0);
}

TEST_CASE("boundary price alone pushes radii to the upper bound")
{
  auto const res = minimize(Potential::zero(2), CostModel::zero(2, 1.0), make_directions(2, 24), box(0.5, 3.0));
  CHECK((res.polytope.radii().array() == 3.0).all());
  CHECK(res.converged);
}

TEST_CASE("non-finite objective reports the radii")
{
  UnnormalizedDensity bad;
  bad.dimension = 2;
  bad.value = [](Vector const &x) { return x.norm() > 1.2 ? std::numeric_limits<double>::quiet_NaN() : 1.0; };
  bad.gradient = [](Vector const &x) { return Vector::Zero(x.size()).eval(); };
  auto cfg = box(0.5, 2.0);
  cfg.initial_radii = Vector::Constant(8, 1.5);
  try {
    minimize(bad, CostModel::norm(2, 1.0), make_directions(2, 8), cfg);
    FAIL("expected ObjectiveError");
  } catch (ObjectiveError const &e) {
    CHECK(e.radii.size() == 8);
  }
}

TEST_CASE("configuration is validated")
{
  auto const dirs = make_directions(2, 6);
  CHECK_THROWS_AS(minimize(Potential::zero(2), CostModel::norm(2, 1.0), dirs, box(2.0, 1.0)), ArgumentError);
  CHECK_THROWS_AS(minimize(Potential::zero(2), CostModel::norm(2, 1.0), dirs, box(1.5, 3.0)), ArgumentError);
  auto cfg = box(0.5, 2.0);
  cfg.initial_radii = Vector::Ones(5);
  CHECK_THROWS_AS(minimize(Potential::zero(2), CostModel::norm(2, 1.0), dirs, cfg), ArgumentError);
}

TEST_CASE("ball radius baseline")
{
  auto const cfg = box(0.05, 10.0);
  CHECK(minimize_ball_radius(Potential::zero(2), CostModel::norm(2, 1.0), cfg) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
  for (double kappa : {0.5, 1.0, 2.0}) {
    CHECK(std::abs(minimize_ball_radius(Potential::zero(3), CostModel::norm(3, kappa), cfg) - 2.0 * std::sqrt(kappa)) <
          1e-6);
  }
  CHECK(minimize_ball_radius(Potential::zero(2), CostModel::norm(2, 1e-12), cfg) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(ball_objective(Potential::zero(2), CostModel::norm(2, 1.0), 1.2) == doctest::Approx(0.8 + 2.0 / 1.2));
  CHECK(ball_objective(Potential::zero(3), CostModel::norm(3, 1.0), 1.5) == doctest::Approx(0.75 * 1.5 + 3.0 / 1.5));
  Matrix skew(2, 2);
  skew << 1.0, 0.5, 0.5, 1.0;
  CHECK_THROWS_AS(minimize_ball_radius(Potential::quadratic(skew), CostModel::norm(2, 1.0), cfg), ArgumentError);
  CHECK_THROWS_AS(minimize_ball_radius(Potential::zero(2), CostModel::weighted_norm(Eigen::Vector2d(1, 5), 1.0), cfg),
                  ArgumentError);
}

TEST_CASE("roundness")
{
  CHECK(roundness(StarPolytope(make_directions(2, 9), Vector::Constant(9, 1.3))) == 0.0);
  Matrix tet(3, 4);
  tet << 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, -1, -1;
  CHECK(roundness(StarPolytope(directions_from_points(tet), Eigen::Vector4d(1, 1, 1, 2))) == doctest::Approx(0.8));
}

TEST_CASE("three-dimensional problem approaches the ball")
{
  auto cfg = box(0.2, 5.0, StepRule::ProjectedBFGS);
  cfg.grad_tol = 1e-7;
  auto const res = minimize(Potential::zero(3), CostModel::norm(3, 1.0), make_directions(3, 30), cfg);
  CHECK(res.converged);
  // A 30-vertex polytope is a coarse ball; the mean radius sits near 2 and the shape is nearly round.
  CHECK(res.polytope.radii().mean() == doctest::Approx(2.0).epsilon(0.1));
  CHECK(roundness(res.polytope) < 0.15);
}
