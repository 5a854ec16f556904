#pragma once

#include "potentials.hpp"
#include "sde.hpp"

#include <iosfwd>
#include <memory>
#include <optional>

namespace reflectopt {

// Symmetric polynomial kernel supported on [-1/2, 1/2] with unit mass.
class KernelSpec
{
public:
  enum class Family
  {
    Biweight,   // (15/8)(1 - 4u^2)^2
    FourthOrder // biweight-based kernel whose second moment also vanishes
  };

  static KernelSpec biweight() { return KernelSpec(Family::Biweight); }
  static KernelSpec fourth_order() { return KernelSpec(Family::FourthOrder); }

  Family family() const { return family_; }
  char const *name() const;

  double operator()(double u) const;
  double derivative(double u) const;

  // Number of vanishing moments: int u^m K(u) du = 0 for m = 1..order().
  int order() const { return family_ == Family::Biweight ? 1 : 3; }
  double l1_norm() const { return l1_norm_; }
  double sup_norm() const;

  // (K_h * K_eta)(u) with K_h(u) = K(u/h)/h. Exact up to rounding, since the
  // integrand is polynomial on the overlap of the two supports.
  double convolved(double u, double h, double eta) const;

private:
  explicit KernelSpec(Family family);

  Family family_;
  double l1_norm_ = 1.0;
};

// Trajectory points with Riemann time weights; horizon is the weight total.
struct Sample
{
  Matrix points; // d x n
  Vector weights;

  Index dimension() const { return points.rows(); }
  Index size() const { return points.cols(); }
  double horizon() const { return weights.sum(); }

  // Recorded states with t in [t_begin, t_end); each carries the time until
  // the next recorded state (clipped at t_end).
  static Sample from_path(PathRecord const &path, double t_begin, double t_end);
  static Sample from_path(PathRecord const &path) { return from_path(path, path.start_time, path.end_time); }
  // Equal weights, e.g. for synthetic clouds; horizon = n * weight.
  static Sample from_points(Matrix points, double weight = 1.0);
};

// Product-kernel estimate (1/T) sum_s w_s prod_i K_{h_i}(x_i - X_s,i) with an
// optional clamp to [low/2, 2 high].
class DensityEstimate
{
public:
  DensityEstimate(Sample sample, Vector bandwidth, KernelSpec kernel = KernelSpec::biweight());

  Index dimension() const { return bandwidth_.size(); }
  Sample const &sample() const;
  Vector const &bandwidth() const { return bandwidth_; }
  KernelSpec const &kernel() const { return kernel_; }

  // Untruncated estimator and its gradient.
  double raw_value(Vector const &x) const;
  Vector raw_gradient(Vector const &x) const;

  // Truncated when bounds are set, raw otherwise.
  double value(Vector const &x) const;
  Vector gradient(Vector const &x) const;

  std::optional<std::pair<double, double>> const &bounds() const { return bounds_; }
  DensityEstimate truncated(double low, double high) const;

  // Plug-in density for the objective and the optimizer.
  UnnormalizedDensity as_density() const;

  // Rows x_1..x_d,value on a tensor lattice over [lower, upper].
  void write_lattice_csv(std::ostream &os, Vector const &lower, Vector const &upper, Index points_per_axis,
                         int threads = 1) const;

private:
  struct Grid;

  template <typename Visit> void for_each_neighbor(Vector const &x, Visit &&visit) const;

  std::shared_ptr<Grid const> grid_;
  Vector bandwidth_;
  KernelSpec kernel_;
  std::optional<std::pair<double, double>> bounds_;
};

double kde(DensityEstimate const &est, Vector const &x);
Vector kde_gradient(DensityEstimate const &est, Vector const &x);

// (rho_hat ^ 2 high) v low/2; gradient zeroed where a clamp is active.
DensityEstimate truncate(DensityEstimate const &est, double low, double high);

// c * T^{-1/2} in both coordinates, clipped to at most 1.
Vector bandwidth_2d(double horizon, double c = 1.0);

struct LepskiConfig
{
  double Lambda = 1.0; // stand-in for the external constant of the selection rule
  int q = 2;
  int depth = 2;           // dyadic candidates 2^0 .. 2^-depth per coordinate
  bool isotropic = false;  // restrict candidates to h * (1, ..., 1)
  Vector eval_lower;       // evaluation box; empty means the sample bounding box
  Vector eval_upper;
  double max_lattice_points = 4e6;
  double max_work = 4e10; // bound on kernel evaluations across all candidate pairs
  KernelSpec kernel = KernelSpec::biweight();
  int threads = 1;

  void validate(Index dimension) const;
};

struct LepskiCandidate
{
  Vector bandwidth;
  double majorant = 0.0;        // A_T(h)
  double lambda_majorant = 0.0; // lambda * A_T(h)
  double deviation = 0.0;       // Delta_T(h)

  double criterion() const { return deviation + lambda_majorant; }
};

struct LepskiResult
{
  Vector bandwidth;
  Index selected = 0;
  std::vector<LepskiCandidate> candidates;
  Matrix pair_sup; // sup over the lattice of |rho_{h,eta} - rho_eta|; rows h, columns eta
  double varsigma = 0.0;
  double lambda = 0.0;
  Vector lattice_lower;
  Vector lattice_upper;
  std::vector<Index> lattice_counts;
};

// Dyadic candidates inside the admissible set; throws ConfigError when empty.
std::vector<Vector> lepski_candidates(Index dimension, double horizon, LepskiConfig const &cfg);

LepskiResult lepski_select(Sample const &sample, LepskiConfig const &cfg);
LepskiResult lepski_select(Sample const &sample, std::vector<Vector> const &candidates, LepskiConfig const &cfg);
Vector bandwidth_lepski(Sample const &sample, LepskiConfig const &cfg);

} // namespace reflectopt
