#pragma once

#include "geometry.hpp"

#include <cmath>
#include <optional>
#include <type_traits>
#include <vector>

namespace reflectopt {

// Tensor-product Gauss-Legendre rule on the unit cube. The one-dimensional
// rule on (0,1) is stored; nodes are strictly interior.
struct CubatureRule
{
  Vector nodes;   // in (0,1)
  Vector weights; // sum to 1

  Index points_per_axis() const { return nodes.size(); }
  // Highest total degree of a polynomial g for which the simplex and facet
  // integrals of g are exact in dimension d.
  Index order(Index d) const { return 2 * points_per_axis() - d; }
};

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix.
inline CubatureRule gauss_legendre(Index n)
{
  if (n < 1) { throw ArgumentError("gauss_legendre: need at least one node"); }
  Matrix J = Matrix::Zero(n, n);
  for (Index k = 1; k < n; ++k) {
    double const b = static_cast<double>(k) / std::sqrt(4.0 * static_cast<double>(k * k) - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  CubatureRule rule;
  rule.nodes = 0.5 * (es.eigenvalues().array() + 1.0);
  rule.weights = es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

inline CubatureRule const &default_rule()
{
  static CubatureRule const rule = gauss_legendre(8);
  return rule;
}

namespace detail {

// Visits every node of the (d-1)-fold tensor rule: fn(t, weight).
template <typename Scalar, typename Fn> void for_each_cube_node(CubatureRule const &rule, Index dims, Fn &&fn)
{
  Index const n = rule.points_per_axis();
  std::vector<Index> idx(static_cast<size_t>(dims), 0);
  VectorX<Scalar> t(dims);
  while (true) {
    Scalar w(1);
    for (Index k = 0; k < dims; ++k) {
      t(k) = Scalar(rule.nodes(idx[static_cast<size_t>(k)]));
      w *= Scalar(rule.weights(idx[static_cast<size_t>(k)]));
    }
    fn(t, w);
    Index k = 0;
    for (; k < dims; ++k) {
      if (++idx[static_cast<size_t>(k)] < n) { break; }
      idx[static_cast<size_t>(k)] = 0;
    }
    if (k == dims) { return; }
  }
}

template <typename R> struct Accumulator
{
  std::optional<R> sum;
  template <typename Scalar> void add(Scalar w, R const &value)
  {
    if (sum) {
      *sum += w * value;
    } else {
      sum = R(w * value);
    }
  }
  R get() const { return *sum; }
};

} // namespace detail

// Interpolation weights (1-t_1), t_1(1-t_2), ..., t_1...t_{d-1}.
template <typename Scalar> VectorX<Scalar> eta_coefficients(VectorX<Scalar> const &t)
{
  Index const m = t.size();
  VectorX<Scalar> c(m + 1);
  Scalar prod(1);
  for (Index k = 0; k < m; ++k) {
    c(k) = prod * (Scalar(1) - t(k));
    prod *= t(k);
  }
  c(m) = prod;
  return c;
}

// psi(t) = prod_{i=1}^{d-2} t_i^{d-1-i}; t has d-1 entries.
template <typename Scalar> Scalar psi(VectorX<Scalar> const &t)
{
  Index const d = t.size() + 1;
  Scalar out(1);
  for (Index i = 1; i <= d - 2; ++i) {
    for (Index e = 0; e < d - 1 - i; ++e) { out *= t(i - 1); }
  }
  return out;
}

template <typename Scalar> Scalar psi_hat(VectorX<Scalar> const &t) { return (Scalar(1) - t(0)) * psi(t); }

// eta(t) over the frame's vertices, with slot 0 and `swap_slot` exchanged
// (eta_i in the derivative formulas; swap_slot = 0 gives plain eta).
template <typename Scalar>
VectorX<Scalar> eta(SimplexFrame<Scalar> const &frame, VectorX<Scalar> const &t, Index swap_slot = 0)
{
  VectorX<Scalar> const c = eta_coefficients(t);
  VectorX<Scalar> x = VectorX<Scalar>::Zero(frame.dimension());
  for (Index j = 0; j < c.size(); ++j) {
    Index col = j;
    if (j == 0) {
      col = swap_slot;
    } else if (j == swap_slot) {
      col = 0;
    }
    x += c(j) * frame.P.col(col);
  }
  return x;
}

// Integral of g over the origin-anchored simplex S:
// |P| int_0^1 int_{(0,1)^{d-1}} g(r eta(t)) psi(t) r^{d-1} dt dr.
template <typename Scalar, typename G>
auto integrate_simplex(G &&g, SimplexFrame<Scalar> const &frame, CubatureRule const &rule = default_rule())
{
  using R = std::decay_t<std::invoke_result_t<G &, VectorX<Scalar> const &>>;
  using std::abs;
  Index const d = frame.dimension();
  detail::Accumulator<R> acc;
  detail::for_each_cube_node<Scalar>(rule, d - 1, [&](VectorX<Scalar> const &t, Scalar wt) {
    VectorX<Scalar> const e = eta(frame, t);
    Scalar const ps = psi(t);
    for (Index k = 0; k < rule.points_per_axis(); ++k) {
      Scalar const r(rule.nodes(k));
      Scalar rpow(1);
      for (Index e2 = 0; e2 < d - 1; ++e2) { rpow *= r; }
      VectorX<Scalar> const x = r * e;
      acc.add(wt * Scalar(rule.weights(k)) * ps * rpow, g(x));
    }
  });
  return R(abs(frame.detP) * acc.get());
}

// Integral of g over the outer facet F with respect to surface measure:
// sqrt(det(P_{-1}^T P_{-1})) int_{(0,1)^{d-1}} g(eta(t)) psi(t) dt.
template <typename Scalar, typename G>
auto integrate_facet(G &&g, SimplexFrame<Scalar> const &frame, CubatureRule const &rule = default_rule(),
                     Index swap_slot = 0)
{
  using R = std::decay_t<std::invoke_result_t<G &, VectorX<Scalar> const &>>;
  using std::sqrt;
  detail::Accumulator<R> acc;
  detail::for_each_cube_node<Scalar>(rule, frame.dimension() - 1, [&](VectorX<Scalar> const &t, Scalar wt) {
    acc.add(wt * psi(t), g(eta(frame, t, swap_slot)));
  });
  return R(sqrt(frame.gram.determinant()) * acc.get());
}

// d/dr_i of the simplex integral, i = frame slot:
// (1/r_i) |P| int g(eta_i(t)) psi_hat(t) dt.
template <typename Scalar, typename G>
auto d_integrate_simplex(G &&g, SimplexFrame<Scalar> const &frame, Index slot, CubatureRule const &rule = default_rule())
{
  using R = std::decay_t<std::invoke_result_t<G &, VectorX<Scalar> const &>>;
  using std::abs;
  if (slot < 0 || slot >= frame.dimension()) { throw ArgumentError("d_integrate_simplex: slot out of range"); }
  detail::Accumulator<R> acc;
  detail::for_each_cube_node<Scalar>(rule, frame.dimension() - 1, [&](VectorX<Scalar> const &t, Scalar wt) {
    acc.add(wt * psi_hat(t), g(eta(frame, t, slot)));
  });
  return R(abs(frame.detP) / frame.radii(slot) * acc.get());
}

// d/dr_i (P_{-1}^T P_{-1}). Column j of P_{-1} is p_{j+1} - p_0, so slot 0
// moves every column by -q_0 and slot k > 0 moves column k-1 by q_k.
template <typename Scalar> MatrixX<Scalar> d_gram(SimplexFrame<Scalar> const &frame, Index slot)
{
  Index const d = frame.dimension();
  MatrixX<Scalar> dP = MatrixX<Scalar>::Zero(d, d - 1);
  if (slot == 0) {
    dP.colwise() = -frame.Q.col(0);
  } else {
    dP.col(slot - 1) = frame.Q.col(slot);
  }
  MatrixX<Scalar> const cross = dP.transpose() * frame.P_minus1;
  return cross + cross.transpose();
}

// d/dr_i of the facet integral (g must be C^1; grad_g returns its gradient):
// sqrt(det G) (1/2 tr(G^{-1} dG/dr_i) int g(eta) psi + int <grad g(eta_i), q_i> psi_hat),
// where d sqrt(det G) = 1/2 sqrt(det G) tr(G^{-1} dG) by Jacobi's formula.
template <typename Scalar, typename G, typename DG>
Scalar d_integrate_facet(G &&g, DG &&grad_g, SimplexFrame<Scalar> const &frame, Index slot,
                         CubatureRule const &rule = default_rule())
{
  using std::sqrt;
  if (slot < 0 || slot >= frame.dimension()) { throw ArgumentError("d_integrate_facet: slot out of range"); }
  Eigen::LDLT<MatrixX<Scalar>> ldlt(frame.gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > Scalar(0))) {
    throw GeometryError("d_integrate_facet: singular facet Gram matrix");
  }
  Scalar const trace_term = Scalar(0.5) * ldlt.solve(d_gram(frame, slot)).trace();
  Scalar plain(0);
  Scalar directional(0);
  auto const q = frame.Q.col(slot);
  detail::for_each_cube_node<Scalar>(rule, frame.dimension() - 1, [&](VectorX<Scalar> const &t, Scalar wt) {
    plain += wt * psi(t) * Scalar(g(eta(frame, t)));
    VectorX<Scalar> const grad = grad_g(eta(frame, t, slot));
    directional += wt * psi_hat(t) * grad.dot(q);
  });
  return sqrt(frame.gram.determinant()) * (trace_term * plain + directional);
}

} // namespace reflectopt
