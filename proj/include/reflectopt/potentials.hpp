#pragma once

#include "types.hpp"

#include <functional>
#include <memory>

namespace reflectopt {

// Potential V of the Langevin diffusion dX = -grad V(X) dt + sqrt(2) dW.
class Potential
{
public:
  enum class Kind
  {
    Zero,
    Quadratic,
    Custom
  };

  using ValueFn = std::function<double(Vector const &)>;
  using GradientFn = std::function<Vector(Vector const &)>;

  static Potential zero(Index dimension);
  // V(x) = scale * x^T A x / 2. A is symmetrized on construction.
  static Potential quadratic(Matrix const &A, double scale = 1.0);
  // User-supplied (V, grad V) pair.
  static Potential custom(Index dimension, ValueFn value, GradientFn gradient);

  Kind kind() const { return kind_; }
  Index dimension() const { return dimension_; }
  Matrix const &matrix() const { return A_; }
  double scale() const { return scale_; }

  double value(Vector const &x) const;
  Vector gradient(Vector const &x) const;
  // Writes -grad V(x) into out (resized if needed).
  void drift(Vector const &x, Vector &out) const;

  // True when V(x) only depends on |x|.
  bool radially_symmetric() const;

private:
  Potential() = default;

  Kind kind_ = Kind::Zero;
  Index dimension_ = 0;
  Matrix A_;
  double scale_ = 1.0;
  std::shared_ptr<ValueFn const> custom_value_;
  std::shared_ptr<GradientFn const> custom_gradient_;
};

double eval_potential(Potential const &p, Vector const &x);
Vector eval_drift(Potential const &p, Vector const &x);

// Running cost f and reflection price kappa.
class CostModel
{
public:
  enum class Kind
  {
    Zero,
    WeightedNorm
  };

  // f(x) = sqrt(sum_i w_i x_i^2)
  static CostModel weighted_norm(Vector weights, double kappa);
  static CostModel norm(Index dimension, double kappa);
  static CostModel zero(Index dimension, double kappa);

  Kind kind() const { return kind_; }
  Index dimension() const { return weights_.size(); }
  Vector const &weights() const { return weights_; }
  double kappa() const { return kappa_; }

  double operator()(Vector const &x) const;
  bool radially_symmetric() const;

  CostModel with_kappa(double kappa) const;

private:
  CostModel() = default;

  Kind kind_ = Kind::Zero;
  Vector weights_;
  double kappa_ = 0.0;
};

double eval_cost(CostModel const &c, Vector const &x);

// Unnormalized density (value, gradient). Either exp(-V) for a known potential
// or a plug-in kernel estimate.
struct UnnormalizedDensity
{
  enum class Provenance
  {
    Analytic,
    Estimated
  };

  std::function<double(Vector const &)> value;
  std::function<Vector(Vector const &)> gradient;
  Provenance provenance = Provenance::Analytic;
  Index dimension = 0;

  static UnnormalizedDensity analytic(Potential const &p);
  // Pointwise c * rho for c > 0.
  UnnormalizedDensity scaled(double c) const;
};

} // namespace reflectopt
