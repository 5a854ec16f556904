#include "reflectopt/density.hpp"
#include "reflectopt/objective.hpp"
#include "reflectopt/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace reflectopt {

namespace {

double biweight_value(double u)
{
  double const s = 1.0 - 4.0 * u * u;
  return 1.875 * s * s;
}

double biweight_slope(double u) { return -30.0 * u * (1.0 - 4.0 * u * u); }

// 2 K4(2u) with K4(x) = (105/64)(1 - x^2)^2 (1 - 3x^2) on [-1, 1].
double fourth_value(double u)
{
  double const x2 = 4.0 * u * u;
  double const s = 1.0 - x2;
  return 2.0 * (105.0 / 64.0) * s * s * (1.0 - 3.0 * x2);
}

double fourth_slope(double u)
{
  double const x = 2.0 * u;
  double const x2 = x * x;
  return -4.0 * (105.0 / 64.0) * x * (1.0 - x2) * (10.0 - 18.0 * x2);
}

CubatureRule const &exact_rule()
{
  static CubatureRule const rule = gauss_legendre(8);
  return rule;
}

} // namespace

KernelSpec::KernelSpec(Family family)
  : family_(family)
{
  if (family_ == Family::FourthOrder) {
    // Sign change at |u| = 1/(2 sqrt 3); each piece is a polynomial.
    double const root = 0.5 / std::sqrt(3.0);
    auto const &rule = exact_rule();
    double l1 = 0.0;
    for (Index k = 0; k < rule.points_per_axis(); ++k) {
      double const inner = root * rule.nodes(k);
      double const outer = root + (0.5 - root) * rule.nodes(k);
      l1 += rule.weights(k) * (root * std::abs(fourth_value(inner)) + (0.5 - root) * std::abs(fourth_value(outer)));
    }
    l1_norm_ = 2.0 * l1;
  }
}

char const *KernelSpec::name() const { return family_ == Family::Biweight ? "biweight" : "fourth_order"; }

double KernelSpec::operator()(double u) const
{
  if (!(std::abs(u) < 0.5)) { return 0.0; }
  return family_ == Family::Biweight ? biweight_value(u) : fourth_value(u);
}

double KernelSpec::derivative(double u) const
{
  if (!(std::abs(u) < 0.5)) { return 0.0; }
  return family_ == Family::Biweight ? biweight_slope(u) : fourth_slope(u);
}

double KernelSpec::sup_norm() const { return family_ == Family::Biweight ? 1.875 : 2.0 * 105.0 / 64.0; }

double KernelSpec::convolved(double u, double h, double eta) const
{
  double const a = std::max(-0.5 * eta, u - 0.5 * h);
  double const b = std::min(0.5 * eta, u + 0.5 * h);
  if (!(b > a)) { return 0.0; }
  auto const &rule = exact_rule();
  double sum = 0.0;
  for (Index k = 0; k < rule.points_per_axis(); ++k) {
    double const v = a + (b - a) * rule.nodes(k);
    sum += rule.weights(k) * (*this)((u - v) / h) * (*this)(v / eta);
  }
  return (b - a) * sum / (h * eta);
}

Sample Sample::from_path(PathRecord const &path, double t_begin, double t_end)
{
  if (!(t_end > t_begin)) { throw ArgumentError("Sample::from_path: empty time window"); }
  std::vector<Index> keep;
  std::vector<double> w;
  for (size_t k = 0; k < path.times.size(); ++k) {
    double const t = path.times[k];
    if (t < t_begin || t >= t_end) { continue; }
    double const next = k + 1 < path.times.size() ? std::min(path.times[k + 1], t_end) : t_end;
    if (next > t) {
      keep.push_back(static_cast<Index>(k));
      w.push_back(next - t);
    }
  }
  if (keep.empty()) { throw ArgumentError("Sample::from_path: no recorded states in the window"); }
  Sample s;
  s.points.resize(path.dimension, static_cast<Index>(keep.size()));
  s.weights.resize(static_cast<Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    s.points.col(static_cast<Index>(k)) = path.states[static_cast<size_t>(keep[k])];
    s.weights(static_cast<Index>(k)) = w[k];
  }
  return s;
}

Sample Sample::from_points(Matrix points, double weight)
{
  if (!(weight > 0.0)) { throw ArgumentError("Sample::from_points: weight must be positive"); }
  Sample s;
  s.weights = Vector::Constant(points.cols(), weight);
  s.points = std::move(points);
  return s;
}

// Uniform cell grid over the sample with CSR storage. Points are kept in cell
// order so that a run of cells along the first axis is one contiguous block.
struct DensityEstimate::Grid
{
  Sample sample;
  double horizon = 0.0;
  Vector origin;
  Vector cell;
  std::vector<Index> counts;
  std::vector<Index> offsets;

  static constexpr double max_cells = 4e6;

  Grid(Sample s, Vector const &h)
  {
    Index const d = s.dimension();
    Index const n = s.size();
    origin = s.points.rowwise().minCoeff();
    Vector const extent = s.points.rowwise().maxCoeff() - origin;
    double scale = 1.0;
    counts.assign(static_cast<size_t>(d), 1);
    while (true) {
      double total = 1.0;
      for (Index j = 0; j < d; ++j) {
        counts[static_cast<size_t>(j)] = static_cast<Index>(std::floor(extent(j) / (scale * h(j)))) + 1;
        total *= static_cast<double>(counts[static_cast<size_t>(j)]);
      }
      if (total <= max_cells) { break; }
      scale *= 2.0;
    }
    cell = scale * h;

    std::vector<Index> id(static_cast<size_t>(n));
    for (Index k = 0; k < n; ++k) { id[static_cast<size_t>(k)] = cell_of(s.points.col(k)); }
    Index total = 1;
    for (Index c : counts) { total *= c; }
    offsets.assign(static_cast<size_t>(total) + 1, 0);
    for (Index c : id) { ++offsets[static_cast<size_t>(c) + 1]; }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());

    std::vector<Index> fill(offsets.begin(), offsets.end() - 1);
    sample.points.resize(d, n);
    sample.weights.resize(n);
    for (Index k = 0; k < n; ++k) {
      Index const slot = fill[static_cast<size_t>(id[static_cast<size_t>(k)])]++;
      sample.points.col(slot) = s.points.col(k);
      sample.weights(slot) = s.weights(k);
    }
    horizon = sample.horizon();
  }

  Index cell_of(Eigen::Ref<Vector const> const &x) const
  {
    Index id = 0, stride = 1;
    for (Index j = 0; j < x.size(); ++j) {
      Index const c = std::clamp<Index>(static_cast<Index>(std::floor((x(j) - origin(j)) / cell(j))), 0,
                                        counts[static_cast<size_t>(j)] - 1);
      id += c * stride;
      stride *= counts[static_cast<size_t>(j)];
    }
    return id;
  }
};

DensityEstimate::DensityEstimate(Sample sample, Vector bandwidth, KernelSpec kernel)
  : bandwidth_(std::move(bandwidth))
  , kernel_(kernel)
{
  if (sample.size() == 0) { throw ArgumentError("DensityEstimate: empty sample"); }
  require_dimension(sample.dimension(), bandwidth_.size(), "DensityEstimate (bandwidth)");
  if (sample.weights.size() != sample.size()) { throw ArgumentError("DensityEstimate: one weight per point"); }
  if ((bandwidth_.array() <= 0.0).any() || (bandwidth_.array() > 1.0).any()) {
    throw ArgumentError("DensityEstimate: bandwidth components must lie in (0, 1]");
  }
  if (!(sample.weights.array() > 0.0).all() || !sample.points.allFinite()) {
    throw ArgumentError("DensityEstimate: weights must be positive and points finite");
  }
  grid_ = std::make_shared<Grid const>(std::move(sample), bandwidth_);
}

Sample const &DensityEstimate::sample() const { return grid_->sample; }

template <typename Visit> void DensityEstimate::for_each_neighbor(Vector const &x, Visit &&visit) const
{
  require_dimension(dimension(), x.size(), "kde");
  Grid const &g = *grid_;
  Index const d = dimension();
  std::vector<Index> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
  for (Index j = 0; j < d; ++j) {
    auto const u = static_cast<size_t>(j);
    double const a = std::floor((x(j) - 0.5 * bandwidth_(j) - g.origin(j)) / g.cell(j));
    double const b = std::floor((x(j) + 0.5 * bandwidth_(j) - g.origin(j)) / g.cell(j));
    double const last = static_cast<double>(g.counts[u] - 1);
    if (b < 0.0 || a > last) { return; }
    lo[u] = static_cast<Index>(std::max(a, 0.0));
    hi[u] = static_cast<Index>(std::min(b, last));
  }
  std::vector<Index> idx(lo.begin() + 1, lo.end());
  while (true) {
    Index base = 0, stride = g.counts[0];
    for (Index j = 1; j < d; ++j) {
      base += idx[static_cast<size_t>(j - 1)] * stride;
      stride *= g.counts[static_cast<size_t>(j)];
    }
    Index const first = g.offsets[static_cast<size_t>(base + lo[0])];
    Index const end = g.offsets[static_cast<size_t>(base + hi[0] + 1)];
    for (Index k = first; k < end; ++k) { visit(k); }

    Index j = 1;
    for (; j < d; ++j) {
      auto const u = static_cast<size_t>(j - 1);
      if (++idx[u] <= hi[static_cast<size_t>(j)]) { break; }
      idx[u] = lo[static_cast<size_t>(j)];
    }
    if (j == d) { return; }
  }
}

double DensityEstimate::raw_value(Vector const &x) const
{
  Matrix const &pts = grid_->sample.points;
  Vector const &w = grid_->sample.weights;
  Index const d = dimension();
  double sum = 0.0;
  for_each_neighbor(x, [&](Index k) {
    double prod = w(k);
    for (Index j = 0; j < d && prod != 0.0; ++j) { prod *= kernel_((x(j) - pts(j, k)) / bandwidth_(j)); }
    sum += prod;
  });
  return sum / (grid_->horizon * bandwidth_.prod());
}

Vector DensityEstimate::raw_gradient(Vector const &x) const
{
  Matrix const &pts = grid_->sample.points;
  Vector const &w = grid_->sample.weights;
  Index const d = dimension();
  Vector grad = Vector::Zero(d);
  Vector k(d), dk(d);
  for_each_neighbor(x, [&](Index s) {
    for (Index j = 0; j < d; ++j) {
      double const u = (x(j) - pts(j, s)) / bandwidth_(j);
      k(j) = kernel_(u);
      dk(j) = kernel_.derivative(u) / bandwidth_(j);
    }
    for (Index j = 0; j < d; ++j) {
      double prod = w(s) * dk(j);
      for (Index i = 0; i < d; ++i) {
        if (i != j) { prod *= k(i); }
      }
      grad(j) += prod;
    }
  });
  return grad / (grid_->horizon * bandwidth_.prod());
}

double DensityEstimate::value(Vector const &x) const
{
  double const raw = raw_value(x);
  if (!bounds_) { return raw; }
  return std::max(std::min(raw, 2.0 * bounds_->second), 0.5 * bounds_->first);
}

Vector DensityEstimate::gradient(Vector const &x) const
{
  if (bounds_) {
    double const raw = raw_value(x);
    if (raw <= 0.5 * bounds_->first || raw >= 2.0 * bounds_->second) { return Vector::Zero(dimension()); }
  }
  return raw_gradient(x);
}

DensityEstimate DensityEstimate::truncated(double low, double high) const
{
  if (!(low > 0.0) || !(high >= low) || !std::isfinite(high)) {
    throw ArgumentError("truncate: need 0 < low <= high");
  }
  DensityEstimate out = *this;
  out.bounds_ = std::make_pair(low, high);
  return out;
}

UnnormalizedDensity DensityEstimate::as_density() const
{
  auto const self = std::make_shared<DensityEstimate const>(*this);
  UnnormalizedDensity out;
  out.value = [self](Vector const &x) { return self->value(x); };
  out.gradient = [self](Vector const &x) { return self->gradient(x); };
  out.provenance = UnnormalizedDensity::Provenance::Estimated;
  out.dimension = dimension();
  return out;
}

void DensityEstimate::write_lattice_csv(std::ostream &os, Vector const &lower, Vector const &upper,
                                        Index points_per_axis, int threads) const
{
  Index const d = dimension();
  require_dimension(d, lower.size(), "write_lattice_csv (lower)");
  require_dimension(d, upper.size(), "write_lattice_csv (upper)");
  if (points_per_axis < 2) { throw ArgumentError("write_lattice_csv: need at least two points per axis"); }
  Index total = 1;
  for (Index j = 0; j < d; ++j) { total *= points_per_axis; }
  auto point = [&](Index id) {
    Vector x(d);
    for (Index j = 0; j < d; ++j) {
      double const t = static_cast<double>(id % points_per_axis) / static_cast<double>(points_per_axis - 1);
      x(j) = lower(j) + t * (upper(j) - lower(j));
      id /= points_per_axis;
    }
    return x;
  };
  std::vector<double> values(static_cast<size_t>(total));
  parallel_for(total, threads, [&](Index id) { values[static_cast<size_t>(id)] = value(point(id)); });

  for (Index j = 0; j < d; ++j) { os << "x_" << (j + 1) << ','; }
  os << "value\n";
  auto const old = os.precision(17);
  for (Index id = 0; id < total; ++id) {
    Vector const x = point(id);
    for (Index j = 0; j < d; ++j) { os << x(j) << ','; }
    os << values[static_cast<size_t>(id)] << '\n';
  }
  os.precision(old);
}

double kde(DensityEstimate const &est, Vector const &x) { return est.raw_value(x); }

Vector kde_gradient(DensityEstimate const &est, Vector const &x) { return est.raw_gradient(x); }

DensityEstimate truncate(DensityEstimate const &est, double low, double high) { return est.truncated(low, high); }

Vector bandwidth_2d(double horizon, double c)
{
  if (!(horizon > 1.0)) { throw ArgumentError("bandwidth_2d: horizon must exceed 1"); }
  if (!(c > 0.0)) { throw ArgumentError("bandwidth_2d: scale must be positive"); }
  return Vector::Constant(2, std::min(1.0, c / std::sqrt(horizon)));
}

// ---------------------------------------------------------------------------
// Lepski selection

void LepskiConfig::validate(Index dimension) const
{
  if (dimension < 3) { throw ArgumentError("bandwidth_lepski: needs dimension >= 3"); }
  if (!(Lambda > 0.0)) { throw ConfigError("lepski: Lambda must be positive"); }
  if (q < 1) { throw ConfigError("lepski: q must be at least 1"); }
  if (depth < 0 || depth > 30) { throw ConfigError("lepski: depth must lie in [0, 30]"); }
  if (eval_lower.size() != eval_upper.size()) { throw ConfigError("lepski: eval_lower and eval_upper differ in size"); }
  if (eval_lower.size() != 0) {
    require_dimension(dimension, eval_lower.size(), "lepski (evaluation box)");
    if ((eval_upper.array() < eval_lower.array()).any()) { throw ConfigError("lepski: inverted evaluation box"); }
  }
  if (!(max_lattice_points >= 1.0) || !(max_work > 0.0)) { throw ConfigError("lepski: work caps must be positive"); }
}

std::vector<Vector> lepski_candidates(Index dimension, double horizon, LepskiConfig const &cfg)
{
  cfg.validate(dimension);
  double const a0 = 1.0 / std::pow(2.0 * cfg.Lambda, 2.0);
  double const exponent = 2.0 / static_cast<double>(dimension) - 1.0;
  double const log_T = std::log(horizon);
  auto admissible = [&](Vector const &h) {
    double prod = 1.0;
    for (Index j = 0; j < h.size(); ++j) { prod *= std::pow(h(j), exponent); }
    return horizon * a0 * a0 >= prod * log_T;
  };

  std::vector<Vector> out;
  if (cfg.isotropic) {
    for (int k = 0; k <= cfg.depth; ++k) {
      Vector const h = Vector::Constant(dimension, std::ldexp(1.0, -k));
      if (admissible(h)) { out.push_back(h); }
    }
  } else {
    std::vector<int> e(static_cast<size_t>(dimension), 0);
    while (true) {
      Vector h(dimension);
      for (Index j = 0; j < dimension; ++j) { h(j) = std::ldexp(1.0, -e[static_cast<size_t>(j)]); }
      if (admissible(h)) { out.push_back(h); }
      Index j = 0;
      for (; j < dimension; ++j) {
        if (++e[static_cast<size_t>(j)] <= cfg.depth) { break; }
        e[static_cast<size_t>(j)] = 0;
      }
      if (j == dimension) { break; }
    }
  }
  if (out.empty()) {
    std::ostringstream os;
    os << "lepski: no dyadic bandwidth satisfies T a0^2 >= prod h_j^(2/d - 1) log T (T = " << horizon
       << ", a0 = " << a0 << "); increase the horizon or decrease Lambda";
    throw ConfigError(os.str());
  }
  return out;
}

namespace {

struct Lattice
{
  Vector lower;
  Vector pitch;
  std::vector<Index> counts;
  Index total = 1;

  Index dimension() const { return lower.size(); }
};

Lattice make_lattice(Sample const &sample, std::vector<Vector> const &candidates, LepskiConfig const &cfg)
{
  Index const d = sample.dimension();
  Lattice L;
  Vector lower = cfg.eval_lower.size() ? cfg.eval_lower : Vector(sample.points.rowwise().minCoeff());
  Vector upper = cfg.eval_upper.size() ? cfg.eval_upper : Vector(sample.points.rowwise().maxCoeff());
  L.lower = lower;
  L.pitch.resize(d);
  L.counts.resize(static_cast<size_t>(d));
  double total = 1.0;
  for (Index j = 0; j < d; ++j) {
    double min_h = 1.0;
    for (auto const &h : candidates) { min_h = std::min(min_h, h(j)); }
    double const width = upper(j) - lower(j);
    Index const n = width > 0.0 ? static_cast<Index>(std::ceil(width / (0.25 * min_h))) + 1 : 1;
    L.counts[static_cast<size_t>(j)] = n;
    L.pitch(j) = n > 1 ? width / static_cast<double>(n - 1) : 0.0;
    total *= static_cast<double>(n);
  }
  if (total > cfg.max_lattice_points) {
    std::ostringstream os;
    os << "lepski: evaluation lattice would have " << total << " points (max_lattice_points = "
       << cfg.max_lattice_points << "); narrow the evaluation box or reduce depth";
    throw ConfigError(os.str());
  }
  L.total = static_cast<Index>(total);
  return L;
}

// Adds the separable field sum_s w_s prod_j k_j(x_j - X_s,j) on the lattice,
// where k_j has support radius radius(j). The last axis is split into slabs
// so that workers write disjoint parts of the field.
template <typename Kernel1d>
void scatter(Lattice const &L, Sample const &sample, Vector const &radius, Kernel1d const &kernel1d,
             std::vector<double> &field, int threads)
{
  Index const d = L.dimension();
  std::fill(field.begin(), field.end(), 0.0);
  Index const last = d - 1;
  Index const slabs = std::max<Index>(1, std::min<Index>(threads, L.counts[static_cast<size_t>(last)]));
  Index const per_slab = (L.counts[static_cast<size_t>(last)] + slabs - 1) / slabs;

  parallel_for(slabs, threads, [&](Index slab) {
    Index const slab_lo = slab * per_slab;
    Index const slab_hi = std::min(L.counts[static_cast<size_t>(last)], slab_lo + per_slab) - 1;
    std::vector<Index> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
    std::vector<std::vector<double>> values(static_cast<size_t>(d));
    std::vector<Index> idx(static_cast<size_t>(d));
    std::vector<double> partial(static_cast<size_t>(d) + 1);
    for (Index s = 0; s < sample.size(); ++s) {
      bool empty = false;
      for (Index j = 0; j < d && !empty; ++j) {
        auto const u = static_cast<size_t>(j);
        double const x = sample.points(j, s);
        Index a = 0, b = L.counts[u] - 1;
        if (L.pitch(j) > 0.0) {
          a = static_cast<Index>(std::ceil((x - radius(j) - L.lower(j)) / L.pitch(j)));
          b = static_cast<Index>(std::floor((x + radius(j) - L.lower(j)) / L.pitch(j)));
          a = std::max<Index>(a, 0);
          b = std::min<Index>(b, L.counts[u] - 1);
        }
        if (j == last) {
          a = std::max(a, slab_lo);
          b = std::min(b, slab_hi);
        }
        if (a > b) {
          empty = true;
          break;
        }
        lo[u] = a;
        hi[u] = b;
        values[u].resize(static_cast<size_t>(b - a + 1));
        for (Index i = a; i <= b; ++i) {
          values[u][static_cast<size_t>(i - a)] = kernel1d(j, L.lower(j) + static_cast<double>(i) * L.pitch(j) - x);
        }
      }
      if (empty) { continue; }

      // Odometer over axes 1..d-1, contiguous run along axis 0.
      for (Index j = 0; j < d; ++j) { idx[static_cast<size_t>(j)] = lo[static_cast<size_t>(j)]; }
      double const w = sample.weights(s);
      while (true) {
        double outer = w;
        Index base = 0, stride = 1;
        for (Index j = 1; j < d; ++j) {
          auto const u = static_cast<size_t>(j);
          stride *= L.counts[u - 1];
          base += idx[u] * stride;
          outer *= values[u][static_cast<size_t>(idx[u] - lo[u])];
        }
        if (outer != 0.0) {
          auto const &v0 = values[0];
          double *row = field.data() + base + lo[0];
          for (size_t i = 0; i < v0.size(); ++i) { row[i] += outer * v0[i]; }
        }
        Index j = 1;
        for (; j < d; ++j) {
          auto const u = static_cast<size_t>(j);
          if (++idx[u] <= hi[u]) { break; }
          idx[u] = lo[u];
        }
        if (j == d) { break; }
      }
    }
  });
}

double work_estimate(Lattice const &L, Sample const &sample, std::vector<Vector> const &candidates)
{
  auto support_points = [&](Vector const &radius) {
    double prod = 1.0;
    for (Index j = 0; j < L.dimension(); ++j) {
      double const n = L.pitch(j) > 0.0 ? std::floor(2.0 * radius(j) / L.pitch(j)) + 1.0 : 1.0;
      prod *= std::min(n, static_cast<double>(L.counts[static_cast<size_t>(j)]));
    }
    return prod;
  };
  double work = 0.0;
  for (auto const &eta : candidates) {
    work += 2.0 * support_points(0.5 * eta);
    for (auto const &h : candidates) { work += support_points(0.5 * (h + eta)); }
  }
  // Only samples within kernel reach of the lattice contribute.
  Index near = 0;
  for (Index s = 0; s < sample.size(); ++s) {
    bool inside = true;
    for (Index j = 0; j < L.dimension() && inside; ++j) {
      double const hi = L.lower(j) + L.pitch(j) * static_cast<double>(L.counts[static_cast<size_t>(j)] - 1);
      inside = sample.points(j, s) > L.lower(j) - 1.0 && sample.points(j, s) < hi + 1.0;
    }
    near += inside ? 1 : 0;
  }
  return work * static_cast<double>(near);
}

} // namespace

LepskiResult lepski_select(Sample const &sample, std::vector<Vector> const &candidates, LepskiConfig const &cfg)
{
  Index const d = sample.dimension();
  cfg.validate(d);
  if (sample.size() == 0) { throw ArgumentError("bandwidth_lepski: empty sample"); }
  if (candidates.empty()) { throw ConfigError("bandwidth_lepski: empty candidate set"); }
  for (auto const &h : candidates) {
    require_dimension(d, h.size(), "bandwidth_lepski (candidate)");
    if ((h.array() <= 0.0).any() || (h.array() > 1.0).any()) {
      throw ArgumentError("bandwidth_lepski: candidate components must lie in (0, 1]");
    }
  }
  double const T = sample.horizon();
  Lattice const L = make_lattice(sample, candidates, cfg);
  double const work = work_estimate(L, sample, candidates);
  if (work > cfg.max_work) {
    std::ostringstream os;
    os << "lepski: estimated " << work << " kernel evaluations exceed max_work = " << cfg.max_work
       << "; thin the sample, narrow the evaluation box or reduce depth";
    throw ConfigError(os.str());
  }

  KernelSpec const &K = cfg.kernel;
  Index const G = static_cast<Index>(candidates.size());
  LepskiResult out;
  out.pair_sup = Matrix::Zero(G, G);
  out.lattice_lower = L.lower;
  out.lattice_upper = L.lower;
  for (Index j = 0; j < d; ++j) {
    out.lattice_upper(j) += L.pitch(j) * static_cast<double>(L.counts[static_cast<size_t>(j)] - 1);
  }
  out.lattice_counts = L.counts;

  std::vector<double> plain(static_cast<size_t>(L.total)), other(static_cast<size_t>(L.total));
  double sup_abs = 0.0;
  for (Index e = 0; e < G; ++e) {
    Vector const &eta = candidates[static_cast<size_t>(e)];
    double const norm = 1.0 / (T * eta.prod());
    scatter(L, sample, 0.5 * eta, [&](Index j, double u) { return K(u / eta(j)); }, plain, cfg.threads);
    for (double &v : plain) { v *= norm; }
    if (K.family() == KernelSpec::Family::Biweight) {
      for (double v : plain) { sup_abs = std::max(sup_abs, std::abs(v)); }
    } else {
      scatter(L, sample, 0.5 * eta, [&](Index j, double u) { return std::abs(K(u / eta(j))); }, other, cfg.threads);
      for (double v : other) { sup_abs = std::max(sup_abs, norm * v); }
    }
    for (Index c = 0; c < G; ++c) {
      Vector const &h = candidates[static_cast<size_t>(c)];
      scatter(L, sample, 0.5 * (h + eta), [&](Index j, double u) { return K.convolved(u, h(j), eta(j)); }, other,
              cfg.threads);
      double sup = 0.0;
      for (size_t i = 0; i < plain.size(); ++i) { sup = std::max(sup, std::abs(other[i] / T - plain[i])); }
      out.pair_sup(c, e) = sup;
    }
  }

  out.varsigma = 2.0 * std::max(1.0, sup_abs);
  out.lambda = std::max(1.0, std::pow(K.l1_norm(), static_cast<double>(d))) * cfg.Lambda;
  double const noise = std::sqrt(out.varsigma * std::log(T) / T);
  out.candidates.resize(static_cast<size_t>(G));
  for (Index c = 0; c < G; ++c) {
    auto &cand = out.candidates[static_cast<size_t>(c)];
    cand.bandwidth = candidates[static_cast<size_t>(c)];
    double prod = 1.0;
    for (Index j = 0; j < d; ++j) { prod *= std::pow(cand.bandwidth(j), 1.0 / static_cast<double>(d) - 0.5); }
    cand.majorant = prod * noise;
    cand.lambda_majorant = out.lambda * cand.majorant;
  }
  for (Index c = 0; c < G; ++c) {
    double dev = 0.0;
    for (Index e = 0; e < G; ++e) {
      dev = std::max(dev, out.pair_sup(c, e) - out.candidates[static_cast<size_t>(e)].lambda_majorant);
    }
    out.candidates[static_cast<size_t>(c)].deviation = dev;
  }
  for (Index c = 1; c < G; ++c) {
    if (out.candidates[static_cast<size_t>(c)].criterion() <
        out.candidates[static_cast<size_t>(out.selected)].criterion()) {
      out.selected = c;
    }
  }
  out.bandwidth = out.candidates[static_cast<size_t>(out.selected)].bandwidth;
  return out;
}

LepskiResult lepski_select(Sample const &sample, LepskiConfig const &cfg)
{
  cfg.validate(sample.dimension());
  return lepski_select(sample, lepski_candidates(sample.dimension(), sample.horizon(), cfg), cfg);
}

Vector bandwidth_lepski(Sample const &sample, LepskiConfig const &cfg) { return lepski_select(sample, cfg).bandwidth; }

} // namespace reflectopt
