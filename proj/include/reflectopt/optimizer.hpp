#pragma once

#include "objective.hpp"

#include <iosfwd>
#include <optional>

namespace reflectopt {

enum class StepRule
{
  ProjectedGradient, // Armijo backtracking on the projection arc
  ProjectedBFGS
};

struct OptimizerConfig
{
  int max_iters = 500;
  double grad_tol = 1e-6; // on |x - proj(x - grad J)|_inf
  StepRule step_rule = StepRule::ProjectedGradient;
  double lower = 0.1;   // box [lower, upper] on every radius
  double upper = 10.0;
  Vector initial_radii; // empty: all ones
  double armijo_c = 1e-4;
  int snapshot_every = 10; // radii snapshot stride in the trace, 0 disables
  CubatureRule rule = default_rule();
  int threads = 1;
  bool allow_fast_path = true; // use the planar closed form when it applies

  void validate(Index vertex_count) const;
};

struct TraceRow
{
  int iter = 0;
  double J = 0.0;
  double grad_inf = 0.0; // projected-gradient sup norm
  double step = 0.0;     // accepted step length (0 on the first row)
};

struct OptimizationTrace
{
  std::vector<TraceRow> rows;
  std::vector<std::pair<int, Vector>> snapshots;

  void write_csv(std::ostream &os) const; // iter,J,grad_inf,step
};

struct OptimizationResult
{
  StarPolytope polytope;
  ObjectiveValue value;
  OptimizationTrace trace;
  bool converged = false;
  int iterations = 0;
};

// Raised when J or its gradient is not finite; carries the radii that caused it.
struct ObjectiveError : NumericError
{
  ObjectiveError(std::string const &what, Vector radii_)
    : NumericError(what)
    , radii(std::move(radii_))
  {
  }
  Vector radii;
};

OptimizationResult minimize(UnnormalizedDensity const &density, CostModel const &cost, SphereDirections const &dirs,
                            OptimizerConfig const &cfg = {});
OptimizationResult minimize(Potential const &potential, CostModel const &cost, SphereDirections const &dirs,
                            OptimizerConfig const &cfg = {});
// Reuses an existing fan (warm starts keep the triangulation).
OptimizationResult minimize(UnnormalizedDensity const &density, CostModel const &cost,
                            std::shared_ptr<Fan const> const &fan, OptimizerConfig const &cfg = {});

// r -> J(B(0, r)) for radially symmetric models, evaluated from radial profiles.
double ball_objective(Potential const &potential, CostModel const &cost, double r, Index points = 48);

// Golden-section minimization of ball_objective over [cfg.lower, cfg.upper].
double minimize_ball_radius(Potential const &potential, CostModel const &cost, OptimizerConfig const &cfg = {},
                            double tol = 1e-10);

// (max r - min r) / mean r
double roundness(StarPolytope const &poly);

} // namespace reflectopt
