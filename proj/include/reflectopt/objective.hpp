#pragma once

#include "potentials.hpp"
#include "quadrature.hpp"

namespace reflectopt {

// J = (bulk + boundary) / mass with
//   bulk     = sum_I int_{S_I} f rho,
//   boundary = kappa sum_I int_{F_I} rho,
//   mass     = sum_I int_{S_I} rho.
struct ObjectiveValue
{
  double J = 0.0;
  double bulk = 0.0;
  double boundary = 0.0;
  double mass = 0.0;
};

struct ObjectiveGradient
{
  ObjectiveValue value;
  Vector partials; // dJ/dr_i
};

// Evaluation is split over facets; `threads` > 1 runs facets concurrently.
// Facet results are combined by a fixed pairwise tree, so the output does not
// depend on the thread count.
ObjectiveValue evaluate(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                        CubatureRule const &rule = default_rule(), int threads = 1);

ObjectiveGradient gradient(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                           CubatureRule const &rule = default_rule(), int threads = 1);

// Closed-form planar versions over equiangular directions (i, i+1 mod N).
ObjectiveValue evaluate_2d(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                           CubatureRule const &rule = default_rule());

ObjectiveGradient gradient_2d(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                              CubatureRule const &rule = default_rule());

// Sum with a balanced binary tree; the result depends only on the input order.
double pairwise_sum(double const *values, size_t n);

// Runs fn(k) for k in [0, n) on up to `threads` workers.
void parallel_for(Index n, int threads, std::function<void(Index)> const &fn);

} // namespace reflectopt
