#pragma once

#include "types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace reflectopt {

// N unit vectors on S^{d-1}, stored as the columns of a d x N matrix.
struct SphereDirections
{
  Matrix points;

  Index dimension() const { return points.rows(); }
  Index size() const { return points.cols(); }
  auto operator[](Index i) const { return points.col(i); }
};

// d = 2: q_i = (cos 2i pi/N, sin 2i pi/N), i = 1..N (column i-1).
// d = 3: Fibonacci lattice.
SphereDirections make_directions(Index d, Index N);
// Normalizes the columns of `points`.
SphereDirections directions_from_points(Matrix points);
// True when the directions are the equiangular 2D placement above.
bool is_equiangular_2d(SphereDirections const &dirs, double tol = 1e-12);

// Facet index family: one column per facet, d rows of vertex indices.
using FacetFamily = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

// Simplicial fan over the directions. Columns are ascending within each facet.
// d = 2: consecutive pairs. d = 3: convex hull facets of the directions.
FacetFamily triangulate(SphereDirections const &dirs);

// Directions plus an oriented facet family and vertex incidence. Shared by all
// polytopes over the same directions; only the radii change during optimization.
class Fan
{
public:
  explicit Fan(SphereDirections dirs);

  SphereDirections const &directions() const { return dirs_; }
  Index dimension() const { return dirs_.dimension(); }
  Index vertex_count() const { return dirs_.size(); }
  Index facet_count() const { return facets_.cols(); }
  // Slot order within each facet: ascending, with one swap where needed so
  // that every det P carries the same (positive) sign.
  FacetFamily const &facets() const { return facets_; }
  // Facets containing vertex i, as (facet, slot) pairs.
  std::vector<std::pair<Index, Index>> const &incident(Index i) const { return incident_[static_cast<size_t>(i)]; }

private:
  SphereDirections dirs_;
  FacetFamily facets_;
  std::vector<std::vector<std::pair<Index, Index>>> incident_;
};

class StarPolytope
{
public:
  StarPolytope(std::shared_ptr<Fan const> fan, Vector radii);
  StarPolytope(SphereDirections dirs, Vector radii);

  Index dimension() const { return fan_->dimension(); }
  Index vertex_count() const { return fan_->vertex_count(); }
  Index facet_count() const { return fan_->facet_count(); }
  Vector const &radii() const { return radii_; }
  SphereDirections const &directions() const { return fan_->directions(); }
  FacetFamily const &facets() const { return fan_->facets(); }
  std::shared_ptr<Fan const> const &fan() const { return fan_; }

  Vector vertex(Index i) const { return radii_(i) * fan_->directions()[i]; }
  Matrix vertices() const;

  // Same fan, new radii.
  StarPolytope with_radii(Vector radii) const { return StarPolytope(fan_, std::move(radii)); }

  double volume() const;
  double boundary_measure() const;

private:
  std::shared_ptr<Fan const> fan_;
  Vector radii_;
};

// Per-simplex data for the origin-anchored simplex S_I and its outer facet F_I.
template <typename Scalar> struct SimplexFrame
{
  MatrixX<Scalar> P;        // d x d, column j = p_{i_j}
  MatrixX<Scalar> P_minus1; // d x (d-1), column j = p_{i_{j+1}} - p_{i_1}
  MatrixX<Scalar> gram;     // P_minus1^T P_minus1
  MatrixX<Scalar> Q;        // d x d, column j = q_{i_j}
  VectorX<Scalar> radii;    // r_{i_j}
  std::vector<Index> vertices;
  Scalar detP = Scalar(0);

  Index dimension() const { return P.rows(); }

  static SimplexFrame from_directions(MatrixX<Scalar> const &Q, VectorX<Scalar> const &radii,
                                      std::vector<Index> vertices = {})
  {
    Index const d = Q.rows();
    if (Q.cols() != d || radii.size() != d) { throw ArgumentError("SimplexFrame: need d directions and d radii"); }
    if ((radii.array() <= Scalar(0)).any()) { throw GeometryError("SimplexFrame: radii must be positive"); }
    SimplexFrame f;
    f.Q = Q;
    f.radii = radii;
    f.P = Q * radii.asDiagonal();
    f.P_minus1 = f.P.rightCols(d - 1).colwise() - f.P.col(0);
    f.gram = f.P_minus1.transpose() * f.P_minus1;
    f.detP = f.P.determinant();
    if (vertices.empty()) {
      for (Index j = 0; j < d; ++j) { vertices.push_back(j); }
    }
    f.vertices = std::move(vertices);
    using std::abs;
    using std::pow;
    Scalar const scale = f.P.colwise().norm().maxCoeff();
    if (abs(f.detP) < Scalar(1e-14) * pow(scale, Scalar(d))) { throw GeometryError("SimplexFrame: degenerate simplex"); }
    return f;
  }

  static SimplexFrame from_vertices(MatrixX<Scalar> const &P)
  {
    VectorX<Scalar> r = P.colwise().norm().transpose();
    MatrixX<Scalar> Q = P * r.cwiseInverse().asDiagonal();
    return from_directions(Q, r);
  }

  // |det P| / d!
  Scalar volume() const
  {
    using std::abs;
    return abs(detP) / factorial(dimension());
  }

  // sqrt(det gram) / (d-1)!
  Scalar facet_volume() const
  {
    using std::sqrt;
    return sqrt(gram.determinant()) / factorial(dimension() - 1);
  }

  static Scalar factorial(Index n)
  {
    Scalar out(1);
    for (Index k = 2; k <= n; ++k) { out *= Scalar(k); }
    return out;
  }
};

SimplexFrame<double> frame(StarPolytope const &poly, Index facet);

// d = 2 only. r_i = r_fn(2 i pi / N).
StarPolytope radial_function_sample(std::function<double(double)> const &r_fn, Index N);

// Signed distance from the origin to each facet hyperplane (positive inside).
Vector facet_offsets(StarPolytope const &poly);

} // namespace reflectopt
