#include "reflectopt/optimizer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace reflectopt {

void OptimizerConfig::validate(Index vertex_count) const
{
  if (max_iters < 0) { throw ArgumentError("OptimizerConfig: max_iters must be nonnegative"); }
  if (!(grad_tol > 0.0)) { throw ArgumentError("OptimizerConfig: grad_tol must be positive"); }
  if (!(lower > 0.0) || !(upper >= lower)) { throw ArgumentError("OptimizerConfig: need 0 < lower <= upper"); }
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) { throw ArgumentError("OptimizerConfig: armijo_c must lie in (0, 1)"); }
  if (initial_radii.size() != 0) {
    if (initial_radii.size() != vertex_count) { throw ArgumentError("OptimizerConfig: one initial radius per direction"); }
    if ((initial_radii.array() < lower).any() || (initial_radii.array() > upper).any()) {
      throw ArgumentError("OptimizerConfig: initial radii must lie inside the box");
    }
  } else if (lower > 1.0 || upper < 1.0) {
    throw ArgumentError("OptimizerConfig: default initial radii (all ones) lie outside the box");
  }
}

void OptimizationTrace::write_csv(std::ostream &os) const
{
  os << "iter,J,grad_inf,step\n";
  auto const old = os.precision(17);
  for (auto const &row : rows) { os << row.iter << ',' << row.J << ',' << row.grad_inf << ',' << row.step << '\n'; }
  os.precision(old);
}

namespace {

std::string radii_text(Vector const &r)
{
  std::ostringstream os;
  os.precision(17);
  for (Index i = 0; i < r.size(); ++i) { os << (i ? " " : "") << r(i); }
  return os.str();
}

class Problem
{
public:
  Problem(UnnormalizedDensity const &density, CostModel const &cost, std::shared_ptr<Fan const> fan,
          OptimizerConfig const &cfg)
    : density_(density)
    , cost_(cost)
    , fan_(std::move(fan))
    , cfg_(cfg)
    , fast_(cfg.allow_fast_path && fan_->dimension() == 2 && is_equiangular_2d(fan_->directions()))
  {
  }

  ObjectiveValue value(Vector const &r) const
  {
    StarPolytope const poly(fan_, r);
    ObjectiveValue v;
    try {
      v = fast_ ? evaluate_2d(poly, density_, cost_, cfg_.rule) : evaluate(poly, density_, cost_, cfg_.rule, cfg_.threads);
    } catch (NumericError const &e) {
      throw ObjectiveError(std::string(e.what()) + " at radii " + radii_text(r), r);
    }
    if (!std::isfinite(v.J)) { throw ObjectiveError("minimize: non-finite objective at radii " + radii_text(r), r); }
    return v;
  }

  ObjectiveGradient gradient(Vector const &r) const
  {
    StarPolytope const poly(fan_, r);
    ObjectiveGradient g;
    try {
      g = fast_ ? gradient_2d(poly, density_, cost_, cfg_.rule)
                : reflectopt::gradient(poly, density_, cost_, cfg_.rule, cfg_.threads);
    } catch (NumericError const &e) {
      throw ObjectiveError(std::string(e.what()) + " at radii " + radii_text(r), r);
    }
    if (!std::isfinite(g.value.J) || !g.partials.allFinite()) {
      throw ObjectiveError("minimize: non-finite objective or gradient at radii " + radii_text(r), r);
    }
    return g;
  }

  Vector clamp(Vector const &r) const { return r.cwiseMax(cfg_.lower).cwiseMin(cfg_.upper); }

  double stationarity(Vector const &r, Vector const &g) const { return (r - clamp(r - g)).cwiseAbs().maxCoeff(); }

private:
  UnnormalizedDensity const &density_;
  CostModel const &cost_;
  std::shared_ptr<Fan const> fan_;
  OptimizerConfig const &cfg_;
  bool fast_;
};

// Coordinates pinned at a bound with the gradient pushing outward.
std::vector<bool> active_set(Vector const &r, Vector const &g, double lower, double upper)
{
  std::vector<bool> active(static_cast<size_t>(r.size()), false);
  double const eps = 1e-12 * upper;
  for (Index i = 0; i < r.size(); ++i) {
    active[static_cast<size_t>(i)] = (r(i) <= lower + eps && g(i) > 0.0) || (r(i) >= upper - eps && g(i) < 0.0);
  }
  return active;
}

} // namespace

OptimizationResult minimize(UnnormalizedDensity const &density, CostModel const &cost,
                            std::shared_ptr<Fan const> const &fan, OptimizerConfig const &cfg)
{
  if (!fan) { throw ArgumentError("minimize: null fan"); }
  Index const N = fan->vertex_count();
  cfg.validate(N);
  Problem const problem(density, cost, fan, cfg);

  Vector x = cfg.initial_radii.size() ? cfg.initial_radii : Vector::Ones(N);
  ObjectiveGradient current = problem.gradient(x);
  OptimizationTrace trace;
  auto record = [&](int iter, double step) {
    trace.rows.push_back({iter, current.value.J, problem.stationarity(x, current.partials), step});
    if (cfg.snapshot_every > 0 && iter % cfg.snapshot_every == 0) { trace.snapshots.emplace_back(iter, x); }
  };
  record(0, 0.0);

  double const g_inf0 = current.partials.cwiseAbs().maxCoeff();
  double scale = g_inf0 > 0.0 ? 0.1 * x.mean() / g_inf0 : 1.0;
  Matrix H = scale * Matrix::Identity(N, N);
  bool converged = trace.rows.back().grad_inf < cfg.grad_tol;
  int iter = 0;

  while (!converged && iter < cfg.max_iters) {
    Vector const &g = current.partials;
    Vector direction;
    if (cfg.step_rule == StepRule::ProjectedBFGS) {
      auto const active = active_set(x, g, cfg.lower, cfg.upper);
      Matrix Hm = H;
      for (Index i = 0; i < N; ++i) {
        if (active[static_cast<size_t>(i)]) {
          Hm.row(i).setZero();
          Hm.col(i).setZero();
        }
      }
      direction = -(Hm * g);
      if (!(g.dot(direction) < 0.0)) {
        H = scale * Matrix::Identity(N, N);
        direction = -scale * g;
      }
    } else {
      direction = -scale * g;
    }

    // Backtracking on the projection arc x(a) = clamp(x + a d).
    double alpha = 1.0;
    bool accepted = false;
    Vector x_new;
    ObjectiveValue v_new;
    for (int k = 0; k < 60; ++k) {
      x_new = problem.clamp(x + alpha * direction);
      double const decrease = g.dot(x_new - x);
      if (decrease >= 0.0 && (x_new - x).cwiseAbs().maxCoeff() == 0.0) { break; }
      v_new = problem.value(x_new);
      if (v_new.J <= current.value.J + cfg.armijo_c * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) { break; }

    ++iter;
    Vector const s = x_new - x;
    ObjectiveGradient next = problem.gradient(x_new);
    Vector const y = next.partials - g;
    double const sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (cfg.step_rule == StepRule::ProjectedBFGS) {
        double const rho = 1.0 / sy;
        Matrix const V = Matrix::Identity(N, N) - rho * y * s.transpose();
        H = V.transpose() * H * V + rho * s * s.transpose();
      }
      scale = s.squaredNorm() / sy; // Barzilai-Borwein
    } else {
      scale *= 2.0;
    }
    x = x_new;
    current = std::move(next);
    record(iter, s.cwiseAbs().maxCoeff());
    converged = trace.rows.back().grad_inf < cfg.grad_tol;
  }

  OptimizationResult result{StarPolytope(fan, x), current.value, std::move(trace), converged, iter};
  if (cfg.snapshot_every > 0 && (result.trace.snapshots.empty() || result.trace.snapshots.back().first != iter)) {
    result.trace.snapshots.emplace_back(iter, x);
  }
  return result;
}

OptimizationResult minimize(UnnormalizedDensity const &density, CostModel const &cost, SphereDirections const &dirs,
                            OptimizerConfig const &cfg)
{
  return minimize(density, cost, std::make_shared<Fan const>(dirs), cfg);
}

OptimizationResult minimize(Potential const &potential, CostModel const &cost, SphereDirections const &dirs,
                            OptimizerConfig const &cfg)
{
  return minimize(UnnormalizedDensity::analytic(potential), cost, dirs, cfg);
}

double ball_objective(Potential const &potential, CostModel const &cost, double r, Index points)
{
  if (!potential.radially_symmetric() || !cost.radially_symmetric()) {
    throw ArgumentError("ball_objective: potential and cost must be radially symmetric");
  }
  require_dimension(potential.dimension(), cost.dimension(), "ball_objective");
  if (!(r > 0.0)) { throw ArgumentError("ball_objective: radius must be positive"); }
  Index const d = potential.dimension();
  auto const rule = gauss_legendre(points);
  auto along_axis = [d](double s) {
    Vector x = Vector::Zero(d);
    x(0) = s;
    return x;
  };
  // Sphere surface constants cancel in the quotient.
  double bulk = 0.0, mass = 0.0;
  for (Index k = 0; k < rule.points_per_axis(); ++k) {
    double const s = r * rule.nodes(k);
    Vector const x = along_axis(s);
    double const w = r * rule.weights(k) * std::pow(s, static_cast<double>(d - 1)) * std::exp(-potential.value(x));
    bulk += w * cost(x);
    mass += w;
  }
  double const boundary =
    cost.kappa() * std::pow(r, static_cast<double>(d - 1)) * std::exp(-potential.value(along_axis(r)));
  return (bulk + boundary) / mass;
}

double minimize_ball_radius(Potential const &potential, CostModel const &cost, OptimizerConfig const &cfg, double tol)
{
  if (!(cfg.lower > 0.0) || !(cfg.upper >= cfg.lower)) { throw ArgumentError("minimize_ball_radius: invalid box"); }
  auto J = [&](double r) { return ball_objective(potential, cost, r); };
  double best_r = cfg.lower, best_J = J(cfg.lower);
  auto consider = [&](double r, double value) {
    if (value < best_J) {
      best_J = value;
      best_r = r;
    }
  };
  consider(cfg.upper, J(cfg.upper));

  double const invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = cfg.lower, b = cfg.upper;
  double c = b - invphi * (b - a), e = a + invphi * (b - a);
  double Jc = J(c), Je = J(e);
  consider(c, Jc);
  consider(e, Je);
  while (b - a > tol) {
    if (Jc < Je) {
      b = e;
      e = c;
      Je = Jc;
      c = b - invphi * (b - a);
      Jc = J(c);
      consider(c, Jc);
    } else {
      a = c;
      c = e;
      Jc = Je;
      e = a + invphi * (b - a);
      Je = J(e);
      consider(e, Je);
    }
  }
  return best_r;
}

double roundness(StarPolytope const &poly)
{
  Vector const &r = poly.radii();
  return (r.maxCoeff() - r.minCoeff()) / r.mean();
}

} // namespace reflectopt
