#pragma once

#include "geometry.hpp"
#include "potentials.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace reflectopt {

struct SimConfig
{
  double dt = 1e-4;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  Index stride = 1;             // record every stride-th step (the last step is always recorded)
  std::uint64_t step_offset = 0; // global index of the first step, for continuing a path
  double start_time = 0.0;

  void validate() const;
};

// Strided record of a path with cumulative costs. The totals cover every step,
// not only the recorded ones.
struct PathRecord
{
  Index dimension = 0;
  double kappa = 0.0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> local_time;   // L_t
  std::vector<double> running_cost; // int_0^t f(X_s) ds, left-endpoint rule

  double start_time = 0.0;
  double end_time = 0.0;
  Vector final_state;
  double total_local_time = 0.0;
  double total_running_cost = 0.0;
  std::uint64_t steps = 0;

  double duration() const { return end_time - start_time; }
  double total_cost() const { return total_running_cost + kappa * total_local_time; }
  // (int f ds + kappa L) / duration
  double average_cost() const;
  Index size() const { return static_cast<Index>(times.size()); }

  void write_csv(std::ostream &os) const; // t,x_1..x_d,L,cost
};

// Exact closest-point queries against a fixed star polytope.
class PolytopeProjector
{
public:
  explicit PolytopeProjector(StarPolytope poly);

  bool contains(Vector const &x) const;
  // Closest point of the closed polytope and its distance; inside points map to themselves.
  std::pair<Vector, double> project(Vector const &x) const;

  StarPolytope const &polytope() const { return poly_; }

private:
  Index sector_2d(Vector const &x) const;

  StarPolytope poly_;
  double inner_radius_ = 0.0; // ball inside the polytope
  double outer_radius_ = 0.0; // ball containing the polytope
  std::vector<Matrix> inverse_P_;
  std::vector<double> sector_angles_; // 2D: ascending direction angles
  std::vector<Index> sector_facet_;   // 2D: facet spanning [angle_k, angle_{k+1})
};

std::pair<Vector, double> project_to_polytope(StarPolytope const &poly, Vector const &x);

// Euler-Maruyama for dX = -grad V dt + sqrt(2) dW. With a cost model the
// running cost is accumulated; the local time stays zero.
PathRecord simulate_free(Potential const &p, Vector const &x0, SimConfig const &cfg);
PathRecord simulate_free(Potential const &p, CostModel const &cost, Vector const &x0, SimConfig const &cfg);

// Euler step followed by projection onto the polytope whenever the proposal
// leaves it; the projection distance is added to the local time.
PathRecord simulate_reflected(Potential const &p, StarPolytope const &poly, CostModel const &cost, Vector const &x0,
                              SimConfig const &cfg);
PathRecord simulate_reflected(Potential const &p, PolytopeProjector const &projector, CostModel const &cost,
                              Vector const &x0, SimConfig const &cfg);

// First recorded time t >= t_min with |x| <= radius.
std::optional<double> first_hit_time(PathRecord const &path, double radius, double t_min);

struct HitResult
{
  PathRecord path;
  double hit_time = 0.0;
};

// Free simulation from cfg.start_time until the first step at or after t_min
// that lands in the closed ball of the given radius. cfg.horizon is ignored;
// `cap` bounds the simulated duration.
HitResult simulate_until_hit(Potential const &p, CostModel const &cost, Vector const &x0, double radius, double t_min,
                             SimConfig const &cfg, double cap = 1e6);

struct BoundedHit
{
  PathRecord path;
  std::optional<double> hit_time; // empty when the limit was reached first
};

// Like simulate_until_hit, but a run that reaches start_time + limit without a
// hit ends there, with a shortened final step, instead of throwing.
BoundedHit simulate_until_hit_within(Potential const &p, CostModel const &cost, Vector const &x0, double radius,
                                     double t_min, SimConfig const &cfg, double limit);

} // namespace reflectopt
