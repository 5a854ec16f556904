#include "reflectopt/sde.hpp"
#include "reflectopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace reflectopt {

void SimConfig::validate() const
{
  if (!(dt > 0.0) || !std::isfinite(dt)) { throw ArgumentError("SimConfig: dt must be positive"); }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) { throw ArgumentError("SimConfig: horizon must be positive"); }
  if (dt > horizon) { throw ArgumentError("SimConfig: dt must not exceed the horizon"); }
  if (stride < 1) { throw ArgumentError("SimConfig: stride must be at least 1"); }
}

double PathRecord::average_cost() const
{
  double const T = duration();
  if (!(T > 0.0)) { throw ArgumentError("PathRecord::average_cost: empty path"); }
  return total_cost() / T;
}

void PathRecord::write_csv(std::ostream &os) const
{
  os << 't';
  for (Index k = 0; k < dimension; ++k) { os << ",x_" << (k + 1); }
  os << ",L,cost\n";
  auto const old = os.precision(17);
  for (size_t i = 0; i < times.size(); ++i) {
    os << times[i];
    for (Index k = 0; k < dimension; ++k) { os << ',' << states[i](k); }
    os << ',' << local_time[i] << ',' << running_cost[i] + kappa * local_time[i] << '\n';
  }
  os.precision(old);
}

namespace {

double angle_of(double x, double y)
{
  double a = std::atan2(y, x);
  if (a < 0.0) { a += 2.0 * std::numbers::pi; }
  return a;
}

Vector closest_on_segment(Vector const &x, Vector const &a, Vector const &b)
{
  Vector const ab = b - a;
  double const t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

// Closest point on triangle abc (Voronoi-region walk).
Eigen::Vector3d closest_on_triangle(Eigen::Vector3d const &p, Eigen::Vector3d const &a, Eigen::Vector3d const &b,
                                    Eigen::Vector3d const &c)
{
  Eigen::Vector3d const ab = b - a, ac = c - a, ap = p - a;
  double const d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) { return a; }
  Eigen::Vector3d const bp = p - b;
  double const d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) { return b; }
  double const vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) { return a + (d1 / (d1 - d3)) * ab; }
  Eigen::Vector3d const cp = p - c;
  double const d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) { return c; }
  double const vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) { return a + (d2 / (d2 - d6)) * ac; }
  double const va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  double const denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

} // namespace

PolytopeProjector::PolytopeProjector(StarPolytope poly)
  : poly_(std::move(poly))
{
  Index const d = poly_.dimension();
  if (d != 2 && d != 3) { throw CapabilityError("PolytopeProjector: only d = 2 and d = 3 are supported"); }
  Vector const offsets = facet_offsets(poly_);
  inner_radius_ = offsets.minCoeff() * (1.0 - 1e-12);
  outer_radius_ = poly_.radii().maxCoeff();
  inverse_P_.reserve(static_cast<size_t>(poly_.facet_count()));
  for (Index f = 0; f < poly_.facet_count(); ++f) { inverse_P_.push_back(frame(poly_, f).P.inverse()); }

  if (d == 2) {
    Index const N = poly_.vertex_count();
    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < N; ++i) {
      auto const q = poly_.directions()[i];
      order.emplace_back(angle_of(q(0), q(1)), i);
    }
    std::sort(order.begin(), order.end());
    std::vector<Index> facet_of_start(static_cast<size_t>(N), -1);
    // Positive orientation means each facet runs counterclockwise from slot 0 to slot 1.
    for (Index f = 0; f < poly_.facet_count(); ++f) { facet_of_start[static_cast<size_t>(poly_.facets()(0, f))] = f; }
    for (auto const &[angle, vertex] : order) {
      sector_angles_.push_back(angle);
      sector_facet_.push_back(facet_of_start[static_cast<size_t>(vertex)]);
    }
  }
}

Index PolytopeProjector::sector_2d(Vector const &x) const
{
  double const a = angle_of(x(0), x(1));
  auto it = std::upper_bound(sector_angles_.begin(), sector_angles_.end(), a);
  size_t k = it == sector_angles_.begin() ? sector_angles_.size() - 1 : static_cast<size_t>(it - sector_angles_.begin()) - 1;
  return sector_facet_[k];
}

bool PolytopeProjector::contains(Vector const &x) const
{
  double const r = x.norm();
  if (r <= inner_radius_) { return true; }
  if (r > outer_radius_) { return false; }
  Index const d = poly_.dimension();
  auto inside_facet = [&](Index f) {
    Matrix const &Pinv = inverse_P_[static_cast<size_t>(f)];
    double sum = 0.0;
    for (Index j = 0; j < d; ++j) { sum += Pinv.row(j).dot(x); }
    return sum <= 1.0 + 1e-12;
  };
  if (d == 2) { return inside_facet(sector_2d(x)); }
  for (Index f = 0; f < poly_.facet_count(); ++f) {
    Matrix const &Pinv = inverse_P_[static_cast<size_t>(f)];
    bool in_cone = true;
    for (Index j = 0; j < d && in_cone; ++j) { in_cone = Pinv.row(j).dot(x) >= -1e-12; }
    if (in_cone) { return inside_facet(f); }
  }
  return false;
}

std::pair<Vector, double> PolytopeProjector::project(Vector const &x) const
{
  require_dimension(poly_.dimension(), x.size(), "project_to_polytope");
  if (contains(x)) { return {x, 0.0}; }
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index f = 0; f < poly_.facet_count(); ++f) {
    Vector candidate;
    if (poly_.dimension() == 2) {
      candidate = closest_on_segment(x, poly_.vertex(poly_.facets()(0, f)), poly_.vertex(poly_.facets()(1, f)));
    } else {
      candidate = closest_on_triangle(x, poly_.vertex(poly_.facets()(0, f)), poly_.vertex(poly_.facets()(1, f)),
                                      poly_.vertex(poly_.facets()(2, f)));
    }
    double const dist = (x - candidate).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(candidate);
    }
  }
  return {best, best_dist};
}

std::pair<Vector, double> project_to_polytope(StarPolytope const &poly, Vector const &x)
{
  return PolytopeProjector(poly).project(x);
}

namespace {

struct StopRule
{
  bool until_hit = false;
  double radius = 0.0;
  double t_min = 0.0;
  double cap = 0.0;
};

PathRecord run_path(Potential const &p, CostModel const *cost, PolytopeProjector const *projector, Vector const &x0,
                    SimConfig const &cfg, StopRule const &stop, bool *hit)
{
  Index const d = p.dimension();
  require_dimension(d, x0.size(), "simulate");
  if (cost) { require_dimension(d, cost->dimension(), "simulate (cost)"); }
  if (!x0.allFinite()) { throw ArgumentError("simulate: initial state must be finite"); }

  PathRecord rec;
  rec.dimension = d;
  rec.kappa = cost ? cost->kappa() : 0.0;
  rec.start_time = cfg.start_time;

  Vector x = x0, drift(d), noise(d), proposal(d);
  double L = 0.0, running = 0.0;
  auto record = [&](double t) {
    rec.times.push_back(t);
    rec.states.push_back(x);
    rec.local_time.push_back(L);
    rec.running_cost.push_back(running);
  };

  double t = cfg.start_time;
  record(t);
  auto is_hit = [&](double time) { return time >= stop.t_min && x.norm() <= stop.radius; };

  if (stop.until_hit && is_hit(t)) {
    *hit = true;
    rec.end_time = t;
    rec.final_state = x;
    return rec;
  }
  // Whole steps of dt, then one shorter step so the run ends exactly at the limit.
  double const duration = stop.until_hit ? stop.cap : cfg.horizon;
  auto const full_steps = static_cast<std::uint64_t>(std::floor(duration / cfg.dt * (1.0 + 1e-12)));
  double tail = duration - static_cast<double>(full_steps) * cfg.dt;
  if (tail < 1e-9 * cfg.dt) { tail = 0.0; }
  std::uint64_t const max_steps = full_steps + (tail > 0.0 ? 1 : 0);

  for (std::uint64_t k = 0; k < max_steps; ++k) {
    double const h = k == full_steps ? tail : cfg.dt;
    p.drift(x, drift);
    if (cost) { running += (*cost)(x) * h; }
    counter_normals(cfg.seed, cfg.step_offset + k, noise);
    proposal.noalias() = x + h * drift + std::sqrt(2.0 * h) * noise;
    if (projector && !projector->contains(proposal)) {
      auto [projected, dist] = projector->project(proposal);
      x = projected;
      L += dist;
    } else {
      x = proposal;
    }
    if (!x.allFinite()) { throw SimulationError("simulate: non-finite state", static_cast<long long>(k)); }
    bool const last = k + 1 == max_steps;
    t = last ? cfg.start_time + duration : cfg.start_time + static_cast<double>(k + 1) * cfg.dt;
    ++rec.steps;
    bool const stopping = stop.until_hit && is_hit(t);
    if ((k + 1) % static_cast<std::uint64_t>(cfg.stride) == 0 || last || stopping) { record(t); }
    if (stopping) {
      *hit = true;
      break;
    }
  }
  rec.end_time = t;
  rec.final_state = x;
  rec.total_local_time = L;
  rec.total_running_cost = running;
  return rec;
}

} // namespace

PathRecord simulate_free(Potential const &p, Vector const &x0, SimConfig const &cfg)
{
  cfg.validate();
  return run_path(p, nullptr, nullptr, x0, cfg, {}, nullptr);
}

PathRecord simulate_free(Potential const &p, CostModel const &cost, Vector const &x0, SimConfig const &cfg)
{
  cfg.validate();
  return run_path(p, &cost, nullptr, x0, cfg, {}, nullptr);
}

PathRecord simulate_reflected(Potential const &p, PolytopeProjector const &projector, CostModel const &cost,
                              Vector const &x0, SimConfig const &cfg)
{
  cfg.validate();
  require_dimension(projector.polytope().dimension(), x0.size(), "simulate_reflected");
  if (!projector.contains(x0) && projector.project(x0).second > 1e-9 * projector.polytope().radii().maxCoeff()) {
    throw ArgumentError("simulate_reflected: initial state must lie in the polytope");
  }
  return run_path(p, &cost, &projector, x0, cfg, {}, nullptr);
}

PathRecord simulate_reflected(Potential const &p, StarPolytope const &poly, CostModel const &cost, Vector const &x0,
                              SimConfig const &cfg)
{
  return simulate_reflected(p, PolytopeProjector(poly), cost, x0, cfg);
}

std::optional<double> first_hit_time(PathRecord const &path, double radius, double t_min)
{
  if (!(radius > 0.0)) { throw ArgumentError("first_hit_time: radius must be positive"); }
  for (size_t i = 0; i < path.times.size(); ++i) {
    if (path.times[i] >= t_min && path.states[i].norm() <= radius) { return path.times[i]; }
  }
  return std::nullopt;
}

BoundedHit simulate_until_hit_within(Potential const &p, CostModel const &cost, Vector const &x0, double radius,
                                     double t_min, SimConfig const &cfg, double limit)
{
  if (!(radius > 0.0)) { throw ArgumentError("simulate_until_hit: radius must be positive"); }
  if (!(limit > 0.0)) { throw ArgumentError("simulate_until_hit: time limit must be positive"); }
  if (!(cfg.dt > 0.0) || cfg.stride < 1) { throw ArgumentError("simulate_until_hit: invalid step configuration"); }
  StopRule const stop{true, radius, t_min, limit};
  bool hit = false;
  BoundedHit out{run_path(p, &cost, nullptr, x0, cfg, stop, &hit), std::nullopt};
  if (hit) { out.hit_time = out.path.end_time; }
  return out;
}

HitResult simulate_until_hit(Potential const &p, CostModel const &cost, Vector const &x0, double radius, double t_min,
                             SimConfig const &cfg, double cap)
{
  if (!(cap > 0.0)) { throw ArgumentError("simulate_until_hit: cap must be positive"); }
  auto bounded = simulate_until_hit_within(p, cost, x0, radius, t_min, cfg, cap);
  if (!bounded.hit_time) {
    throw TimeoutError("simulate_until_hit: no visit to the ball within " + std::to_string(cap) + " time units");
  }
  return {std::move(bounded.path), *bounded.hit_time};
}

} // namespace reflectopt
