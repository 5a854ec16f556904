#include "reflectopt/potentials.hpp"

#include <cmath>

namespace reflectopt {

Potential Potential::zero(Index dimension)
{
  if (dimension < 1) { throw ArgumentError("Potential::zero: dimension must be positive"); }
  Potential p;
  p.kind_ = Kind::Zero;
  p.dimension_ = dimension;
  return p;
}

Potential Potential::quadratic(Matrix const &A, double scale)
{
  if (A.rows() != A.cols() || A.rows() < 1) { throw ArgumentError("Potential::quadratic: matrix must be square"); }
  if (!(scale > 0.0)) { throw ArgumentError("Potential::quadratic: scale must be positive"); }
  Potential p;
  p.kind_ = Kind::Quadratic;
  p.dimension_ = A.rows();
  p.A_ = 0.5 * (A + A.transpose());
  p.scale_ = scale;
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.A_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff())) {
    throw ArgumentError("Potential::quadratic: matrix must be positive semidefinite");
  }
  return p;
}

Potential Potential::custom(Index dimension, ValueFn value, GradientFn gradient)
{
  if (!value || !gradient) { throw ArgumentError("Potential::custom: both V and grad V are required"); }
  Potential p;
  p.kind_ = Kind::Custom;
  p.dimension_ = dimension;
  p.custom_value_ = std::make_shared<ValueFn const>(std::move(value));
  p.custom_gradient_ = std::make_shared<GradientFn const>(std::move(gradient));
  return p;
}

double Potential::value(Vector const &x) const
{
  require_dimension(dimension_, x.size(), "eval_potential");
  switch (kind_) {
  case Kind::Zero: return 0.0;
  case Kind::Quadratic: return 0.5 * scale_ * x.dot(A_ * x);
  case Kind::Custom: return (*custom_value_)(x);
  }
  return 0.0;
}

Vector Potential::gradient(Vector const &x) const
{
  require_dimension(dimension_, x.size(), "eval_drift");
  switch (kind_) {
  case Kind::Zero: return Vector::Zero(dimension_);
  case Kind::Quadratic: return scale_ * (A_ * x);
  case Kind::Custom: return (*custom_gradient_)(x);
  }
  return Vector::Zero(dimension_);
}

void Potential::drift(Vector const &x, Vector &out) const
{
  out.resize(dimension_);
  switch (kind_) {
  case Kind::Zero: out.setZero(); return;
  case Kind::Quadratic: out.noalias() = -scale_ * (A_ * x); return;
  case Kind::Custom: out = -(*custom_gradient_)(x); return;
  }
}

bool Potential::radially_symmetric() const
{
  switch (kind_) {
  case Kind::Zero: return true;
  case Kind::Quadratic: {
    double const diag = A_(0, 0);
    return (A_ - diag * Matrix::Identity(dimension_, dimension_)).cwiseAbs().maxCoeff() <= 1e-14 * std::abs(diag);
  }
  case Kind::Custom: return false;
  }
  return false;
}

double eval_potential(Potential const &p, Vector const &x) { return p.value(x); }

Vector eval_drift(Potential const &p, Vector const &x) { return -p.gradient(x); }

CostModel CostModel::weighted_norm(Vector weights, double kappa)
{
  if (weights.size() < 1) { throw ArgumentError("CostModel: weights must be nonempty"); }
  if ((weights.array() <= 0.0).any()) { throw ArgumentError("CostModel: weights must be positive"); }
  if (!(kappa >= 0.0)) { throw ArgumentError("CostModel: kappa must be nonnegative"); }
  CostModel c;
  c.kind_ = Kind::WeightedNorm;
  c.weights_ = std::move(weights);
  c.kappa_ = kappa;
  return c;
}

CostModel CostModel::norm(Index dimension, double kappa) { return weighted_norm(Vector::Ones(dimension), kappa); }

CostModel CostModel::zero(Index dimension, double kappa)
{
  if (!(kappa >= 0.0)) { throw ArgumentError("CostModel: kappa must be nonnegative"); }
  CostModel c;
  c.kind_ = Kind::Zero;
  c.weights_ = Vector::Zero(dimension);
  c.kappa_ = kappa;
  return c;
}

double CostModel::operator()(Vector const &x) const
{
  require_dimension(weights_.size(), x.size(), "eval_cost");
  if (kind_ == Kind::Zero) { return 0.0; }
  return std::sqrt((weights_.array() * x.array().square()).sum());
}

bool CostModel::radially_symmetric() const
{
  return kind_ == Kind::Zero || (weights_.array() == weights_(0)).all();
}

CostModel CostModel::with_kappa(double kappa) const
{
  if (!(kappa >= 0.0)) { throw ArgumentError("CostModel: kappa must be nonnegative"); }
  CostModel c = *this;
  c.kappa_ = kappa;
  return c;
}

double eval_cost(CostModel const &c, Vector const &x) { return c(x); }

UnnormalizedDensity UnnormalizedDensity::analytic(Potential const &p)
{
  UnnormalizedDensity d;
  d.provenance = Provenance::Analytic;
  d.dimension = p.dimension();
  d.value = [p](Vector const &x) { return std::exp(-p.value(x)); };
  d.gradient = [p](Vector const &x) -> Vector { return -std::exp(-p.value(x)) * p.gradient(x); };
  return d;
}

UnnormalizedDensity UnnormalizedDensity::scaled(double c) const
{
  if (!(c > 0.0)) { throw ArgumentError("UnnormalizedDensity::scaled: factor must be positive"); }
  UnnormalizedDensity d = *this;
  auto v = value;
  auto g = gradient;
  d.value = [v, c](Vector const &x) { return c * v(x); };
  d.gradient = [g, c](Vector const &x) -> Vector { return c * g(x); };
  return d;
}

} // namespace reflectopt
