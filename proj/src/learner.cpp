#include "reflectopt/learner.hpp"
#include "reflectopt/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace reflectopt {

double rate_psi(Index dimension, double smoothness, double t)
{
  if (dimension < 2) { throw ArgumentError("rate_psi: dimension must be at least 2"); }
  if (!(t > 1.0)) { throw ArgumentError("rate_psi: t must exceed 1"); }
  double const ratio = std::log(t) / t;
  if (dimension == 2) { return std::log(t) / std::sqrt(t); }
  if (!(smoothness > 0.0)) { throw ArgumentError("rate_psi: smoothness must be positive"); }
  return std::pow(ratio, smoothness / (2.0 * smoothness + static_cast<double>(dimension) - 2.0));
}

void Schedule::validate() const
{
  if (dimension < 2) { throw ConfigError("schedule: dimension must be at least 2"); }
  if (!(smoothness > 0.0)) { throw ConfigError("schedule: smoothness must be positive"); }
  if (!(growth > 1.0)) { throw ConfigError("schedule: growth must exceed 1"); }
}

int Schedule::first_index() const
{
  if (!strict_rate) { return 1; }
  int i = 1;
  while (exploration(i) < std::exp(2.0)) { ++i; }
  return i;
}

double Schedule::exploration(int i) const { return std::pow(growth, static_cast<double>(i)); }

double Schedule::exploitation(int i) const
{
  double const a = exploration(i);
  return std::max(1.0, a / rate_psi(dimension, smoothness, a));
}

double Schedule::cumulative(int k) const
{
  double sum = 0.0;
  int const first = first_index();
  for (int m = 0; m < k; ++m) { sum += exploration(first + m) + exploitation(first + m); }
  return sum;
}

int Schedule::episodes_until(double T) const
{
  if (!(T > 0.0)) { return 0; }
  int const first = first_index();
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    sum += exploration(first + k - 1) + exploitation(first + k - 1);
    if (sum >= T) { return k; }
  }
  throw ArgumentError("Schedule::episodes_until: horizon out of range");
}

void LearnerBounds::validate() const
{
  if (!(inner_radius > 0.0) || !(outer_radius >= inner_radius)) {
    throw ConfigError("learner bounds: need 0 < inner_radius <= outer_radius");
  }
  if (!(density_low > 0.0) || !(density_high >= density_low)) {
    throw ConfigError("learner bounds: need 0 < density_low <= density_high");
  }
  if (!(surface_bound > 0.0)) { throw ConfigError("learner bounds: surface_bound must be positive"); }
}

void LearnerConfig::validate(Index dimension) const
{
  schedule.validate();
  bounds.validate();
  require_dimension(dimension, schedule.dimension, "learner (schedule)");
  if (!(sim.dt > 0.0) || sim.stride < 1) { throw ConfigError("learner: invalid simulation step"); }
  if (!(horizon > 0.0)) { throw ConfigError("learner: horizon must be positive"); }
  if (!(ledger_spacing > 0.0)) { throw ConfigError("learner: ledger_spacing must be positive"); }
  if (!(bandwidth_scale > 0.0)) { throw ConfigError("learner: bandwidth_scale must be positive"); }
  if (!(hit_cap > 0.0)) { throw ConfigError("learner: hit_cap must be positive"); }
  if (initial_state.size() != 0) { require_dimension(dimension, initial_state.size(), "learner (initial state)"); }
}

double EpisodeLog::cost_until(double t) const
{
  if (knot_times.empty()) { throw ArgumentError("EpisodeLog: empty ledger"); }
  if (t < knot_times.front() || t > knot_times.back() * (1.0 + 1e-12)) {
    throw ArgumentError("EpisodeLog: time outside the ledger");
  }
  auto const it = std::upper_bound(knot_times.begin(), knot_times.end(), t);
  if (it == knot_times.end()) { return knot_costs.back(); }
  auto const k = static_cast<size_t>(it - knot_times.begin());
  double const t0 = knot_times[k - 1], t1 = knot_times[k];
  double const w = (t - t0) / (t1 - t0);
  return (1.0 - w) * knot_costs[k - 1] + w * knot_costs[k];
}

std::uint64_t window_hash(Sample const &window)
{
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(window.size()));
  auto mix = [&h](double v) { h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v)); };
  for (Index k = 0; k < window.size(); ++k) {
    for (Index j = 0; j < window.dimension(); ++j) { mix(window.points(j, k)); }
    mix(window.weights(k));
  }
  return h;
}

namespace {

OptimizerConfig boxed(LearnerConfig const &cfg, Vector const &initial)
{
  OptimizerConfig opt = cfg.optimizer;
  opt.lower = cfg.bounds.inner_radius;
  opt.upper = cfg.bounds.outer_radius;
  opt.initial_radii = initial.cwiseMax(opt.lower).cwiseMin(opt.upper);
  return opt;
}

// Appends the cumulative cost of one phase to the ledger.
void append_knots(EpisodeLog &log, PathRecord const &path, double cost_before)
{
  for (size_t k = 0; k < path.times.size(); ++k) {
    double const t = path.times[k];
    if (!log.knot_times.empty() && t <= log.knot_times.back()) { continue; }
    log.knot_times.push_back(t);
    log.knot_costs.push_back(cost_before + path.running_cost[k] + path.kappa * path.local_time[k]);
  }
}

// Phase runner: keeps the clock, the state, the global step counter and the ledger.
struct Clock
{
  Potential const &truth;
  CostModel const &cost;
  LearnerConfig const &cfg;
  EpisodeLog &log;
  Vector x;
  double t = 0.0;
  std::uint64_t step = 0;

  double remaining() const { return cfg.horizon - t; }
  bool finished() const { return remaining() <= 1e-12 * cfg.horizon; }

  SimConfig phase_config(double length, Index stride) const
  {
    SimConfig sc = cfg.sim;
    sc.start_time = t;
    sc.step_offset = step;
    sc.stride = stride;
    sc.horizon = length;
    sc.dt = std::min(cfg.sim.dt, length);
    return sc;
  }

  void advance(PathRecord const &path)
  {
    append_knots(log, path, log.total_cost());
    x = path.final_state;
    t = path.end_time;
    step += path.steps;
  }
};

} // namespace

DomainFit fit_domain(Sample const &window, CostModel const &cost, std::shared_ptr<Fan const> const &fan,
                     LearnerConfig const &cfg, Vector const &initial_radii)
{
  Index const d = window.dimension();
  Vector h;
  if (d == 2) {
    h = bandwidth_2d(window.horizon(), cfg.bandwidth_scale);
  } else {
    LepskiConfig lepski = cfg.lepski;
    lepski.kernel = cfg.kernel;
    h = bandwidth_lepski(window, lepski);
  }
  DensityEstimate density =
    DensityEstimate(window, h, cfg.kernel).truncated(cfg.bounds.density_low, cfg.bounds.density_high);
  OptimizationResult optimization = minimize(density.as_density(), cost, fan, boxed(cfg, initial_radii));
  return {std::move(density), std::move(optimization)};
}

double reference_cost(Potential const &truth, CostModel const &cost, SphereDirections const &dirs,
                      LearnerConfig const &cfg)
{
  Vector const start = Vector::Constant(dirs.size(), 0.5 * (cfg.bounds.inner_radius + cfg.bounds.outer_radius));
  return minimize(truth, cost, dirs, boxed(cfg, start)).value.J;
}

LearnerResult run_episodic(Potential const &truth, CostModel const &cost, SphereDirections const &dirs,
                           LearnerConfig const &cfg, std::optional<double> reference)
{
  Index const d = truth.dimension();
  require_dimension(d, dirs.dimension(), "run_episodic (directions)");
  require_dimension(d, cost.dimension(), "run_episodic (cost)");
  cfg.validate(d);

  auto const fan = std::make_shared<Fan const>(dirs);
  // Every polytope with radii >= inner contains the one with all radii equal
  // to inner, so returning to its inscribed ball guarantees a feasible start.
  double const hit_radius =
    cfg.bounds.inner_radius * facet_offsets(StarPolytope(fan, Vector::Ones(dirs.size()))).minCoeff() * (1.0 - 1e-9);
  UnnormalizedDensity const true_density = UnnormalizedDensity::analytic(truth);

  LearnerResult result;
  EpisodeLog &log = result.log;
  log.horizon = cfg.horizon;
  log.knot_times.push_back(0.0);
  log.knot_costs.push_back(0.0);

  Clock clock{truth, cost, cfg, log, cfg.initial_state.size() ? cfg.initial_state : Vector(Vector::Zero(d))};
  Index const ledger_stride =
    std::max<Index>(1, static_cast<Index>(std::llround(cfg.ledger_spacing / cfg.sim.dt)));
  Vector const midpoint = Vector::Constant(dirs.size(), 0.5 * (cfg.bounds.inner_radius + cfg.bounds.outer_radius));
  Vector radii = midpoint;
  bool have_domain = false;

  for (int i = cfg.schedule.first_index(); !clock.finished(); ++i) {
    Episode ep;
    ep.index = i;
    ep.explore_start = clock.t;
    double const a = cfg.schedule.exploration(i);
    ep.nominal_end = clock.t + a;

    // Exploration: a free run of nominal length a, then back to the inner ball.
    double const explore_len = std::min(a, clock.remaining());
    PathRecord const explore = simulate_free(truth, cost, clock.x, clock.phase_config(explore_len, cfg.sim.stride));
    clock.advance(explore);
    ep.exploration_cost = explore.total_cost();
    if (explore_len < a || clock.finished()) {
      ep.truncated = explore_len < a;
      ep.exploit_start = ep.end = clock.t;
      log.episodes.push_back(std::move(ep));
      break;
    }
    bool const cap_binds = cfg.hit_cap < clock.remaining();
    double const limit = std::min(cfg.hit_cap, clock.remaining());
    auto const back = simulate_until_hit_within(truth, cost, clock.x, hit_radius, clock.t,
                                                clock.phase_config(limit, cfg.sim.stride), limit);
    clock.advance(back.path);
    ep.exploration_cost += back.path.total_cost();
    if (!back.hit_time) {
      if (cap_binds) { throw TimeoutError("run_episodic: no return to the inner ball within hit_cap"); }
      ep.truncated = true;
      ep.exploit_start = ep.end = clock.t;
      log.episodes.push_back(std::move(ep));
      break;
    }
    ep.exploit_start = clock.t;
    ep.hit_norm = clock.x.norm();

    // Estimation on the exploration window [T_i, T_i + a_i] only.
    Sample window = Sample::from_path(explore, ep.explore_start, ep.nominal_end);
    ep.window_hash = window_hash(window);
    try {
      DomainFit fit = fit_domain(window, cost, fan, cfg, cfg.warm_start ? radii : midpoint);
      radii = fit.optimization.polytope.radii();
      ep.bandwidth = fit.density.bandwidth();
      ep.plug_in_cost = fit.optimization.value.J;
      ep.fitted = true;
      have_domain = true;
    } catch (NumericError const &e) {
      ep.degraded = true;
      ep.note = e.what();
    } catch (GeometryError const &e) {
      ep.degraded = true;
      ep.note = e.what();
    } catch (ConfigError const &e) {
      ep.degraded = true;
      ep.note = e.what();
    }
    if (ep.degraded && !have_domain) { ep.note += " (no earlier domain; using the box midpoint)"; }
    if (cfg.keep_windows) { ep.window = std::move(window); }

    StarPolytope const domain(fan, radii);
    ep.radii = radii;
    ep.boundary_measure = domain.boundary_measure();
    ep.surface_ok = ep.boundary_measure <= cfg.bounds.surface_bound;
    if (cfg.evaluate_true_cost) { ep.true_cost = evaluate(domain, true_density, cost).J; }

    // Exploitation: reflection at the fitted domain for b_i.
    double const b = cfg.schedule.exploitation(i);
    double const exploit_len = std::min(b, clock.remaining());
    PathRecord const exploit = simulate_reflected(truth, PolytopeProjector(domain), cost, clock.x,
                                                  clock.phase_config(exploit_len, ledger_stride));
    clock.advance(exploit);
    ep.exploitation_cost = exploit.total_cost();
    ep.exploitation_local_time = exploit.total_local_time;
    ep.end = clock.t;
    ep.truncated = exploit_len < b;
    log.episodes.push_back(std::move(ep));
  }

  RegretReport &report = result.report;
  report.horizon = cfg.horizon;
  report.cumulative_cost = log.total_cost();
  report.reference_cost = reference ? *reference : reference_cost(truth, cost, dirs, cfg);
  report.average_regret = report.cumulative_cost / cfg.horizon - report.reference_cost;
  report.episode_count = cfg.schedule.episodes_until(cfg.horizon);
  return result;
}

EpisodeLog run_oracle(Potential const &truth, CostModel const &cost, StarPolytope const &domain,
                      LearnerConfig const &cfg)
{
  cfg.validate(truth.dimension());
  EpisodeLog log;
  log.horizon = cfg.horizon;
  log.knot_times.push_back(0.0);
  log.knot_costs.push_back(0.0);
  Index const d = truth.dimension();
  Clock clock{truth, cost, cfg, log, cfg.initial_state.size() ? cfg.initial_state : Vector(Vector::Zero(d))};
  Index const ledger_stride =
    std::max<Index>(1, static_cast<Index>(std::llround(cfg.ledger_spacing / cfg.sim.dt)));
  PathRecord const path = simulate_reflected(truth, PolytopeProjector(domain), cost, clock.x,
                                             clock.phase_config(cfg.horizon, ledger_stride));
  clock.advance(path);
  Episode ep;
  ep.end = clock.t;
  ep.radii = domain.radii();
  ep.exploitation_cost = path.total_cost();
  ep.exploitation_local_time = path.total_local_time;
  ep.boundary_measure = domain.boundary_measure();
  log.episodes.push_back(std::move(ep));
  return log;
}

std::vector<std::pair<double, double>> regret_curve(EpisodeLog const &log, double reference,
                                                    std::vector<double> const &checkpoints)
{
  std::vector<std::pair<double, double>> out;
  out.reserve(checkpoints.size());
  for (double T : checkpoints) {
    if (!(T > 0.0) || log.knot_times.empty() || T > log.knot_times.back() * (1.0 + 1e-12)) {
      throw ArgumentError("regret_curve: checkpoint " + std::to_string(T) + " lies outside the ledger");
    }
    out.emplace_back(T, log.cost_until(T) / T - reference);
  }
  return out;
}

} // namespace reflectopt
