#pragma once

#include "density.hpp"
#include "optimizer.hpp"
#include "sde.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace reflectopt {

// Estimation rate: log t / sqrt t for d = 2 and (log t / t)^(s / (2s + d - 2))
// for d >= 3, where s is the harmonic-mean smoothness plus one.
double rate_psi(Index dimension, double smoothness, double t);

struct Schedule
{
  Index dimension = 2;
  double smoothness = 2.0; // harmonic mean of beta_i + 1, used when d >= 3
  double growth = 2.0;     // a_i = growth^i
  bool strict_rate = false; // start at the first i with a_i >= e^2 instead of i = 1

  void validate() const;
  int first_index() const;
  double exploration(int i) const; // a_i
  double exploitation(int i) const; // b_i = a_i / Psi(a_i), at least 1
  // Sum of a_j + b_j over the first k episodes.
  double cumulative(int k) const;
  // n(T): number of episodes whose nominal lengths first reach T.
  int episodes_until(double T) const;
};

struct LearnerBounds
{
  double inner_radius = 1.0;     // B(0, inner) lies in the optimal domain
  double outer_radius = 3.0;     // optimal domain lies in B(0, outer)
  double surface_bound = 1e300;  // boundary measure bound, checked after each fit
  double density_low = 0.0;      // lower bound on rho over B(0, outer)
  double density_high = 0.0;     // upper bound on rho over B(0, outer)

  void validate() const;
};

struct LearnerConfig
{
  Schedule schedule;
  LearnerBounds bounds;
  SimConfig sim;             // dt, seed and the stride of recorded exploration states
  double horizon = 100.0;
  double ledger_spacing = 0.1; // time between cost knots during exploitation
  double bandwidth_scale = 1.0; // d = 2 bandwidth constant
  LepskiConfig lepski;          // d >= 3
  KernelSpec kernel = KernelSpec::biweight();
  OptimizerConfig optimizer; // box is replaced by [inner_radius, outer_radius]
  bool warm_start = true;
  Vector initial_state;      // empty: the origin
  double hit_cap = 1e6;      // longest admissible return to the inner ball
  bool keep_windows = false; // store each exploration sample in the log
  bool evaluate_true_cost = false; // harness only: J of each fitted domain under exp(-V)

  void validate(Index dimension) const;
};

struct Episode
{
  int index = 0; // schedule index i
  double explore_start = 0.0;  // T_i
  double nominal_end = 0.0;    // T_i + a_i
  double exploit_start = 0.0;  // S_i
  double end = 0.0;            // T_{i+1}
  bool truncated = false;      // horizon reached inside this episode
  bool fitted = false;
  bool degraded = false; // optimizer failed, previous domain reused
  std::string note;
  double exploration_cost = 0.0;
  double exploitation_cost = 0.0;
  double exploitation_local_time = 0.0;
  double hit_norm = 0.0;
  std::uint64_t window_hash = 0;
  Vector bandwidth;
  Vector radii;
  double plug_in_cost = 0.0;
  double boundary_measure = 0.0;
  bool surface_ok = true;
  std::optional<double> true_cost;
  std::optional<Sample> window;
};

struct EpisodeLog
{
  double horizon = 0.0;
  std::vector<Episode> episodes;
  // Cumulative realized cost C(t) at strictly increasing knots, starting at (0, 0).
  std::vector<double> knot_times;
  std::vector<double> knot_costs;

  double total_cost() const { return knot_costs.empty() ? 0.0 : knot_costs.back(); }
  // Linear interpolation between knots.
  double cost_until(double t) const;
};

struct RegretReport
{
  double horizon = 0.0;
  double cumulative_cost = 0.0;
  double reference_cost = 0.0; // J(D*)
  double average_regret = 0.0; // C(T) / T - J(D*)
  int episode_count = 0;       // n(T) from the schedule
};

struct LearnerResult
{
  EpisodeLog log;
  RegretReport report;
};

struct DomainFit
{
  DensityEstimate density;
  OptimizationResult optimization;
};

// One estimation step: bandwidth, truncated plug-in density and the box-constrained shape fit.
DomainFit fit_domain(Sample const &window, CostModel const &cost, std::shared_ptr<Fan const> const &fan,
                     LearnerConfig const &cfg, Vector const &initial_radii);

// J(D*) from the analytic density, as used for regret reporting.
double reference_cost(Potential const &truth, CostModel const &cost, SphereDirections const &dirs,
                      LearnerConfig const &cfg);

std::uint64_t window_hash(Sample const &window);

// Alternating exploration and exploitation until cfg.horizon. The true
// potential drives the simulation only; estimation sees the sampled windows.
LearnerResult run_episodic(Potential const &truth, CostModel const &cost, SphereDirections const &dirs,
                           LearnerConfig const &cfg, std::optional<double> reference = std::nullopt);

// Reflection in a fixed domain from t = 0, logged like a learner run.
EpisodeLog run_oracle(Potential const &truth, CostModel const &cost, StarPolytope const &domain,
                      LearnerConfig const &cfg);

// (T, C(T)/T - J*) per checkpoint.
std::vector<std::pair<double, double>> regret_curve(EpisodeLog const &log, double reference,
                                                    std::vector<double> const &checkpoints);

} // namespace reflectopt
