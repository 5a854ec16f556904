#include "reflectopt/objective.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace reflectopt {

double pairwise_sum(double const *values, size_t n)
{
  if (n == 0) { return 0.0; }
  if (n == 1) { return values[0]; }
  size_t const half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

void parallel_for(Index n, int threads, std::function<void(Index)> const &fn)
{
  if (threads <= 1 || n <= 1) {
    for (Index k = 0; k < n; ++k) { fn(k); }
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (Index k = next++; k < n; k = next++) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) { failure = std::current_exception(); }
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  int const count = static_cast<int>(std::min<Index>(threads, n));
  pool.reserve(static_cast<size_t>(count));
  for (int w = 0; w < count; ++w) { pool.emplace_back(worker); }
  for (auto &t : pool) { t.join(); }
  if (failure) { std::rethrow_exception(failure); }
}

namespace {

ObjectiveValue assemble(std::vector<double> const &bulk, std::vector<double> const &boundary,
                        std::vector<double> const &mass, double kappa)
{
  ObjectiveValue v;
  v.bulk = pairwise_sum(bulk.data(), bulk.size());
  v.boundary = kappa * pairwise_sum(boundary.data(), boundary.size());
  v.mass = pairwise_sum(mass.data(), mass.size());
  if (!(v.mass > 0.0) || !std::isfinite(v.bulk) || !std::isfinite(v.boundary)) {
    throw NumericError("objective: nonpositive or non-finite density mass");
  }
  v.J = (v.bulk + v.boundary) / v.mass;
  return v;
}

void check_model(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost)
{
  require_dimension(poly.dimension(), density.dimension, "objective (density)");
  require_dimension(poly.dimension(), cost.dimension(), "objective (cost)");
  if (!density.value) { throw ArgumentError("objective: density has no value function"); }
}

void check_planar(StarPolytope const &poly)
{
  if (poly.dimension() != 2 || !is_equiangular_2d(poly.directions(), 1e-12)) {
    throw CapabilityError("2D fast path requires equiangular planar directions");
  }
}

} // namespace

ObjectiveValue evaluate(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                        CubatureRule const &rule, int threads)
{
  check_model(poly, density, cost);
  Index const F = poly.facet_count();
  std::vector<double> bulk(static_cast<size_t>(F)), boundary(static_cast<size_t>(F)), mass(static_cast<size_t>(F));
  auto const bulk_and_mass = [&](Vector const &x) {
    double const rho = density.value(x);
    return Eigen::Vector2d(cost(x) * rho, rho);
  };
  parallel_for(F, threads, [&](Index k) {
    auto const fr = frame(poly, k);
    Eigen::Vector2d const s = integrate_simplex(bulk_and_mass, fr, rule);
    auto const u = static_cast<size_t>(k);
    bulk[u] = s(0);
    mass[u] = s(1);
    boundary[u] = integrate_facet(density.value, fr, rule);
  });
  return assemble(bulk, boundary, mass, cost.kappa());
}

ObjectiveGradient gradient(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                           CubatureRule const &rule, int threads)
{
  check_model(poly, density, cost);
  if (!density.gradient) { throw ArgumentError("gradient: density has no gradient function"); }
  Index const F = poly.facet_count();
  Index const d = poly.dimension();
  std::vector<double> bulk(static_cast<size_t>(F)), boundary(static_cast<size_t>(F)), mass(static_cast<size_t>(F));
  // Per facet and slot: d bulk, d boundary (without kappa), d mass.
  std::vector<Matrix> slot_terms(static_cast<size_t>(F));
  auto const bulk_and_mass = [&](Vector const &x) {
    double const rho = density.value(x);
    return Eigen::Vector2d(cost(x) * rho, rho);
  };
  parallel_for(F, threads, [&](Index k) {
    auto const fr = frame(poly, k);
    auto const u = static_cast<size_t>(k);
    Eigen::Vector2d const s = integrate_simplex(bulk_and_mass, fr, rule);
    bulk[u] = s(0);
    mass[u] = s(1);
    boundary[u] = integrate_facet(density.value, fr, rule);
    Matrix terms(3, d);
    for (Index j = 0; j < d; ++j) {
      Eigen::Vector2d const ds = d_integrate_simplex(bulk_and_mass, fr, j, rule);
      terms(0, j) = ds(0);
      terms(1, j) = d_integrate_facet(density.value, density.gradient, fr, j, rule);
      terms(2, j) = ds(1);
    }
    slot_terms[u] = std::move(terms);
  });

  ObjectiveGradient out;
  out.value = assemble(bulk, boundary, mass, cost.kappa());
  double const J = out.value.J;
  double const kappa = cost.kappa();
  out.partials = Vector::Zero(poly.vertex_count());
  for (Index i = 0; i < poly.vertex_count(); ++i) {
    double acc = 0.0;
    for (auto const &[facet, slot] : poly.fan()->incident(i)) {
      auto const &t = slot_terms[static_cast<size_t>(facet)];
      acc += t(0, slot) + kappa * t(1, slot) - J * t(2, slot);
    }
    out.partials(i) = acc / out.value.mass;
  }
  return out;
}

ObjectiveValue evaluate_2d(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                           CubatureRule const &rule)
{
  check_model(poly, density, cost);
  check_planar(poly);
  Index const N = poly.vertex_count();
  double const s = std::sin(2.0 * std::numbers::pi / static_cast<double>(N));
  Vector const &r = poly.radii();
  Index const n = rule.points_per_axis();
  std::vector<double> bulk(static_cast<size_t>(N)), boundary(static_cast<size_t>(N)), mass(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) {
    Index const j = (i + 1) % N;
    Vector const pi = poly.vertex(i), pj = poly.vertex(j);
    double b = 0.0, m = 0.0, e = 0.0;
    for (Index a = 0; a < n; ++a) {
      double const t = rule.nodes(a);
      Vector const eta = (1.0 - t) * pi + t * pj;
      e += rule.weights(a) * density.value(eta);
      for (Index c = 0; c < n; ++c) {
        double const rad = rule.nodes(c);
        Vector const x = rad * eta;
        double const rho = density.value(x);
        double const w = rule.weights(a) * rule.weights(c) * rad;
        b += w * cost(x) * rho;
        m += w * rho;
      }
    }
    double const area_factor = s * r(i) * r(j);
    auto const u = static_cast<size_t>(i);
    bulk[u] = area_factor * b;
    mass[u] = area_factor * m;
    boundary[u] = (pj - pi).norm() * e;
  }
  return assemble(bulk, boundary, mass, cost.kappa());
}

ObjectiveGradient gradient_2d(StarPolytope const &poly, UnnormalizedDensity const &density, CostModel const &cost,
                              CubatureRule const &rule)
{
  if (!density.gradient) { throw ArgumentError("gradient_2d: density has no gradient function"); }
  ObjectiveGradient out;
  out.value = evaluate_2d(poly, density, cost, rule);
  Index const N = poly.vertex_count();
  double const angle = 2.0 * std::numbers::pi / static_cast<double>(N);
  double const s = std::sin(angle), c = std::cos(angle);
  double const J = out.value.J;
  double const kappa = cost.kappa();
  Vector const &r = poly.radii();
  out.partials.resize(N);
  for (Index i = 0; i < N; ++i) {
    Vector const pi = poly.vertex(i);
    Vector const qi = poly.directions()[i];
    double acc = 0.0;
    for (Index nb : {(i + 1) % N, (i + N - 1) % N}) {
      Vector const pn = poly.vertex(nb);
      double const edge = (pn - pi).norm();
      double const edge_slope = kappa * (r(i) - c * r(nb)) / edge;
      for (Index a = 0; a < rule.points_per_axis(); ++a) {
        double const t = rule.nodes(a);
        Vector const eta = (1.0 - t) * pi + t * pn;
        double const rho = density.value(eta);
        // -<grad V, q> rho equals <grad rho, q>, which also covers estimated densities.
        double const weighted = (s * r(nb) * (cost(eta) - J) * rho + kappa * edge * density.gradient(eta).dot(qi)) *
                                  (1.0 - t) +
                                edge_slope * rho;
        acc += rule.weights(a) * weighted;
      }
    }
    out.partials(i) = acc / out.value.mass;
  }
  return out;
}

} // namespace reflectopt
