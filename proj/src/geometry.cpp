#include "reflectopt/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

namespace reflectopt {

namespace {

FacetFamily triangulate_2d(SphereDirections const &dirs)
{
  Index const N = dirs.size();
  // Consecutive pairs only make a fan if the directions wind once around the circle.
  double total = 0.0;
  for (Index k = 0; k < N; ++k) {
    auto const a = dirs[k];
    auto const b = dirs[(k + 1) % N];
    double const turn = std::atan2(a(0) * b(1) - a(1) * b(0), a.dot(b));
    if (!(turn > 0.0)) { throw GeometryError("triangulate: 2D directions must be in strictly counterclockwise order"); }
    total += turn;
  }
  if (std::abs(total - 2.0 * std::numbers::pi) > 1e-9) {
    throw GeometryError("triangulate: 2D directions must wind exactly once around the origin");
  }
  FacetFamily I(2, N);
  for (Index k = 0; k < N; ++k) {
    Index const a = k;
    Index const b = (k + 1) % N;
    I(0, k) = std::min(a, b);
    I(1, k) = std::max(a, b);
  }
  return I;
}

// Incremental convex hull of points on S^2. Faces are kept with outward orientation.
FacetFamily triangulate_3d(SphereDirections const &dirs)
{
  Index const N = dirs.size();
  Matrix const &X = dirs.points;
  double const eps = 1e-10;

  struct Face
  {
    std::array<Index, 3> v;
    Eigen::Vector3d n;
    double offset;
    bool alive;
  };
  std::vector<Face> faces;

  auto make_face = [&](Index a, Index b, Index c) {
    Eigen::Vector3d const pa = X.col(a), pb = X.col(b), pc = X.col(c);
    Eigen::Vector3d n = (pb - pa).cross(pc - pa);
    double const len = n.norm();
    if (len < eps) { throw GeometryError("triangulate: degenerate hull face (collinear directions)"); }
    n /= len;
    return Face{{a, b, c}, n, n.dot(pa), true};
  };

  // Initial tetrahedron.
  Index i0 = 0, i1 = -1, i2 = -1, i3 = -1;
  for (Index k = 1; k < N && i1 < 0; ++k) {
    if ((X.col(k) - X.col(i0)).norm() > eps) { i1 = k; }
  }
  for (Index k = 1; k < N && i2 < 0 && i1 >= 0; ++k) {
    Eigen::Vector3d const a = X.col(i1) - X.col(i0), b = X.col(k) - X.col(i0);
    if (a.cross(b).norm() > eps) { i2 = k; }
  }
  for (Index k = 1; k < N && i3 < 0 && i2 >= 0; ++k) {
    Eigen::Vector3d const a = X.col(i1) - X.col(i0), b = X.col(i2) - X.col(i0), c = X.col(k) - X.col(i0);
    if (std::abs(a.cross(b).dot(c)) > eps) { i3 = k; }
  }
  if (i3 < 0) { throw GeometryError("triangulate: directions are coplanar"); }

  Eigen::Vector3d const interior = 0.25 * (X.col(i0) + X.col(i1) + X.col(i2) + X.col(i3));
  auto add_oriented = [&](Index a, Index b, Index c) {
    Face f = make_face(a, b, c);
    if (f.n.dot(interior) - f.offset > 0.0) { f = make_face(a, c, b); }
    faces.push_back(f);
  };
  add_oriented(i0, i1, i2);
  add_oriented(i0, i1, i3);
  add_oriented(i0, i2, i3);
  add_oriented(i1, i2, i3);

  for (Index p = 0; p < N; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) { continue; }
    Eigen::Vector3d const x = X.col(p);
    std::vector<size_t> visible;
    for (size_t f = 0; f < faces.size(); ++f) {
      if (!faces[f].alive) { continue; }
      double const dist = faces[f].n.dot(x) - faces[f].offset;
      if (std::abs(dist) <= eps) { throw GeometryError("triangulate: degenerate hull (four or more coplanar directions)"); }
      if (dist > 0.0) { visible.push_back(f); }
    }
    if (visible.empty()) { throw GeometryError("triangulate: direction is not a hull vertex (duplicate direction?)"); }
    // Horizon: directed edges of visible faces whose reverse is not visible.
    std::map<std::pair<Index, Index>, int> edges;
    for (size_t f : visible) {
      faces[f].alive = false;
      auto const &v = faces[f].v;
      for (int e = 0; e < 3; ++e) { edges[{v[e], v[(e + 1) % 3]}] += 1; }
    }
    for (auto const &[edge, count] : edges) {
      if (edges.count({edge.second, edge.first}) == 0) {
        Face f = make_face(edge.first, edge.second, p);
        faces.push_back(f);
      }
    }
  }

  std::vector<std::array<Index, 3>> out;
  for (auto const &f : faces) {
    if (!f.alive) { continue; }
    std::array<Index, 3> v = f.v;
    std::sort(v.begin(), v.end());
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  FacetFamily I(3, static_cast<Index>(out.size()));
  for (size_t k = 0; k < out.size(); ++k) {
    for (int j = 0; j < 3; ++j) { I(j, static_cast<Index>(k)) = out[k][static_cast<size_t>(j)]; }
  }
  return I;
}

} // namespace

SphereDirections make_directions(Index d, Index N)
{
  if (d != 2 && d != 3) { throw CapabilityError("make_directions: only d = 2 and d = 3 are supported"); }
  if (N < d + 1) { throw ArgumentError("make_directions: need N >= d + 1"); }
  SphereDirections dirs;
  dirs.points.resize(d, N);
  if (d == 2) {
    for (Index k = 0; k < N; ++k) {
      double const theta = 2.0 * std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(N);
      dirs.points.col(k) << std::cos(theta), std::sin(theta);
    }
  } else {
    double const golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (Index k = 0; k < N; ++k) {
      double const z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(N);
      double const rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      double const phi = golden * static_cast<double>(k);
      dirs.points.col(k) << rho * std::cos(phi), rho * std::sin(phi), z;
      dirs.points.col(k).normalize();
    }
  }
  return dirs;
}

SphereDirections directions_from_points(Matrix points)
{
  if (points.rows() < 2) { throw ArgumentError("directions_from_points: dimension must be at least 2"); }
  for (Index k = 0; k < points.cols(); ++k) {
    double const n = points.col(k).norm();
    if (!(n > 0.0)) { throw ArgumentError("directions_from_points: zero direction"); }
    points.col(k) /= n;
  }
  return SphereDirections{std::move(points)};
}

bool is_equiangular_2d(SphereDirections const &dirs, double tol)
{
  if (dirs.dimension() != 2) { return false; }
  SphereDirections const ref = make_directions(2, std::max<Index>(dirs.size(), 3));
  if (ref.size() != dirs.size()) { return false; }
  return (ref.points - dirs.points).cwiseAbs().maxCoeff() <= tol;
}

FacetFamily triangulate(SphereDirections const &dirs)
{
  if (dirs.size() < dirs.dimension() + 1) { throw ArgumentError("triangulate: need at least d + 1 directions"); }
  switch (dirs.dimension()) {
  case 2: return triangulate_2d(dirs);
  case 3: return triangulate_3d(dirs);
  default: throw CapabilityError("triangulate: only d = 2 and d = 3 are supported");
  }
}

Fan::Fan(SphereDirections dirs)
  : dirs_(std::move(dirs))
  , facets_(triangulate(dirs_))
  , incident_(static_cast<size_t>(dirs_.size()))
{
  Index const d = dirs_.dimension();
  for (Index f = 0; f < facets_.cols(); ++f) {
    Matrix Q(d, d);
    for (Index j = 0; j < d; ++j) { Q.col(j) = dirs_[facets_(j, f)]; }
    if (Q.determinant() < 0.0) { std::swap(facets_(0, f), facets_(1, f)); }
    for (Index j = 0; j < d; ++j) { incident_[static_cast<size_t>(facets_(j, f))].emplace_back(f, j); }
  }
}

StarPolytope::StarPolytope(std::shared_ptr<Fan const> fan, Vector radii)
  : fan_(std::move(fan))
  , radii_(std::move(radii))
{
  if (!fan_) { throw ArgumentError("StarPolytope: null fan"); }
  if (radii_.size() != fan_->vertex_count()) { throw ArgumentError("StarPolytope: one radius per direction required"); }
  if (!radii_.allFinite() || (radii_.array() <= 0.0).any()) { throw GeometryError("StarPolytope: radii must be positive"); }
  for (Index f = 0; f < facet_count(); ++f) { (void)frame(*this, f); }
}

StarPolytope::StarPolytope(SphereDirections dirs, Vector radii)
  : StarPolytope(std::make_shared<Fan const>(std::move(dirs)), std::move(radii))
{
}

Matrix StarPolytope::vertices() const { return fan_->directions().points * radii_.asDiagonal(); }

double StarPolytope::volume() const
{
  double v = 0.0;
  for (Index f = 0; f < facet_count(); ++f) { v += frame(*this, f).volume(); }
  return v;
}

double StarPolytope::boundary_measure() const
{
  double s = 0.0;
  for (Index f = 0; f < facet_count(); ++f) { s += frame(*this, f).facet_volume(); }
  return s;
}

SimplexFrame<double> frame(StarPolytope const &poly, Index facet)
{
  if (facet < 0 || facet >= poly.facet_count()) { throw ArgumentError("frame: facet index out of range"); }
  Index const d = poly.dimension();
  Matrix Q(d, d);
  Vector r(d);
  std::vector<Index> vertices(static_cast<size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Index const v = poly.facets()(j, facet);
    vertices[static_cast<size_t>(j)] = v;
    Q.col(j) = poly.directions()[v];
    r(j) = poly.radii()(v);
  }
  return SimplexFrame<double>::from_directions(Q, r, std::move(vertices));
}

StarPolytope radial_function_sample(std::function<double(double)> const &r_fn, Index N)
{
  SphereDirections dirs = make_directions(2, N);
  Vector r(N);
  for (Index k = 0; k < N; ++k) {
    double const theta = 2.0 * std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(N);
    r(k) = r_fn(theta);
    if (!(r(k) > 0.0)) { throw ArgumentError("radial_function_sample: nonpositive radius sample"); }
  }
  return StarPolytope(std::move(dirs), std::move(r));
}

Vector facet_offsets(StarPolytope const &poly)
{
  Vector out(poly.facet_count());
  for (Index f = 0; f < poly.facet_count(); ++f) {
    auto const fr = frame(poly, f);
    // Hyperplane through the facet vertices is {x : n.x = 1}, n = P^{-T} 1.
    Vector const n = fr.P.transpose().fullPivLu().solve(Vector::Ones(poly.dimension()));
    out(f) = 1.0 / n.norm();
  }
  return out;
}

} // namespace reflectopt
