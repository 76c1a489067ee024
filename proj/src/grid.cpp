#include "gridfn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace gridfn {

namespace {

// Integer-valued double within a relative tolerance, or nullopt.
std::optional<std::int64_t> as_integer(double x) {
  double r = std::nearbyint(x);
  double tol = 1e-9 * std::max(1.0, std::fabs(x));
  if (std::fabs(x - r) <= tol) return static_cast<std::int64_t>(r);
  return std::nullopt;
}

}  // namespace

void CompensatedSum::add(double x) {
  double t = sum + x;
  if (std::fabs(sum) >= std::fabs(x)) {
    comp += (sum - t) + x;
  } else {
    comp += (x - t) + sum;
  }
  sum = t;
}

// --- GridLevel ---

GridLevel::GridLevel(std::int64_t n_cells, double window)
    : n_cells_(n_cells), window_(window) {
  if (n_cells <= 0) throw Error("GridLevel: n_cells must be positive");
  if (!(window > 0)) throw Error("GridLevel: window must be positive");
  auto wc = as_integer(window * static_cast<double>(n_cells));
  if (!wc || *wc <= 0) {
    throw AlignmentError("GridLevel: window " + std::to_string(window) +
                         " is not grid-aligned for N = " +
                         std::to_string(n_cells));
  }
  window_cells_ = *wc;
}

GridLevel GridLevel::make(int resolution_exponent, std::int64_t base,
                          double window) {
  if (base < 1) throw Error("GridLevel::make: base must be >= 1");
  if (resolution_exponent < 0)
    throw Error("GridLevel::make: exponent must be >= 0");
  if (resolution_exponent > 40)
    throw Error("GridLevel::make: exponent too large");
  return GridLevel(base << resolution_exponent, window);
}

// --- GridDomain ---

GridDomain::GridDomain(const GridLevel& level, int dim, Index lo, Index hi,
                       bool periodic)
    : level_(level), dim_(dim), periodic_(periodic), lo_(lo), hi_(hi) {
  if (dim < 1 || dim > kMaxDim) throw Error("GridDomain: dim must be 1..3");
  for (int a = 0; a < kMaxDim; ++a) extent_[a] = hi_[a] - lo_[a] + 1;
}

std::size_t GridDomain::box_offset(const Index& idx) const {
  std::size_t off = 0;
  for (int a = 0; a < dim_; ++a)
    off = off * static_cast<std::size_t>(extent_[a]) +
          static_cast<std::size_t>(idx[a] - lo_[a]);
  return off;
}

void GridDomain::finalize(const std::function<bool(const Index&)>& member) {
  std::size_t box = 1;
  for (int a = 0; a < dim_; ++a) box *= static_cast<std::size_t>(extent_[a]);
  ordinal_.assign(box, -1);

  Index idx = lo_;
  // Lexicographic walk of the bounding box; points() order is therefore
  // deterministic across runs.
  for (std::size_t off = 0; off < box; ++off) {
    if (member(idx)) {
      ordinal_[off] = static_cast<std::int64_t>(points_.size());
      points_.push_back(idx);
    }
    for (int a = dim_ - 1; a >= 0; --a) {
      if (++idx[a] <= hi_[a]) break;
      idx[a] = lo_[a];
    }
  }
}

GridDomain::Ptr GridDomain::discretize(const Membership& membership,
                                       const GridLevel& level, int dim) {
  std::int64_t w = level.window_cells();
  Index lo{}, hi{};
  for (int a = 0; a < dim; ++a) {
    lo[a] = -w;
    hi[a] = w;
  }
  auto d = std::shared_ptr<GridDomain>(
      new GridDomain(level, dim, lo, hi, /*periodic=*/false));
  d->finalize([&](const Index& idx) {
    RealPoint p{};
    for (int a = 0; a < dim; ++a) p[a] = level.coord(idx[a]);
    return membership(p);
  });
  if (d->points_.empty())
    throw EmptyDomainError("discretize: no grid point satisfies membership");
  return d;
}

GridDomain::Ptr GridDomain::full_box(const GridLevel& level, int dim) {
  return discretize([](const RealPoint&) { return true; }, level, dim);
}

GridDomain::Ptr GridDomain::periodic_box(const GridLevel& level, int dim) {
  std::int64_t w = level.window_cells();
  Index lo{}, hi{};
  for (int a = 0; a < dim; ++a) {
    lo[a] = -w;
    hi[a] = w - 1;
  }
  auto d = std::shared_ptr<GridDomain>(
      new GridDomain(level, dim, lo, hi, /*periodic=*/true));
  d->finalize([](const Index&) { return true; });
  return d;
}

Index GridDomain::wrap(Index idx) const {
  if (!periodic_) return idx;
  for (int a = 0; a < dim_; ++a) {
    std::int64_t span = extent_[a];
    std::int64_t r = (idx[a] - lo_[a]) % span;
    if (r < 0) r += span;
    idx[a] = lo_[a] + r;
  }
  return idx;
}

std::int64_t GridDomain::ordinal(const Index& idx) const {
  Index q = idx;
  if (periodic_) {
    q = wrap(q);
  } else {
    for (int a = 0; a < dim_; ++a)
      if (q[a] < lo_[a] || q[a] > hi_[a]) return -1;
  }
  for (int a = dim_; a < kMaxDim; ++a)
    if (q[a] != 0) return -1;
  return ordinal_[box_offset(q)];
}

RealPoint GridDomain::coord(const Index& idx) const {
  RealPoint p{};
  for (int a = 0; a < dim_; ++a) p[a] = level_.coord(idx[a]);
  return p;
}

GridDomain::Ptr GridDomain::restricted(
    const std::function<bool(const Index&)>& keep) const {
  auto d = std::shared_ptr<GridDomain>(
      new GridDomain(level_, dim_, lo_, hi_, periodic_));
  d->finalize([&](const Index& idx) { return contains(idx) && keep(idx); });
  return d;
}

// --- GridFunction ---

GridFunction::GridFunction(GridDomain::Ptr domain, double fill)
    : domain_(std::move(domain)), values_(domain_->size(), fill) {}

GridFunction::GridFunction(GridDomain::Ptr domain, std::vector<double> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  if (values_.size() != domain_->size())
    throw Error("GridFunction: value table does not cover the domain");
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

GridFunction GridFunction::map(const std::function<double(double)>& fn) const {
  GridFunction out(domain_);
  for (std::size_t i = 0; i < values_.size(); ++i) out[i] = fn(values_[i]);
  return out;
}

namespace {

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (!(a.level() == b.level()) || a.domain().dim() != b.domain().dim())
    throw LevelMismatchError("grid functions live on different levels");
}

GridFunction zip(const GridFunction& a, const GridFunction& b,
                 double (*op)(double, double)) {
  require_same_grid(a, b);
  if (a.domain_ptr() == b.domain_ptr()) {
    GridFunction out(a.domain_ptr());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
    return out;
  }
  GridFunction out(a.domain_ptr());
  const auto& pts = a.domain().points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    out[i] = op(a[i], b.value_at(pts[i]));
  return out;
}

}  // namespace

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
GridFunction operator*(const GridFunction& a, const GridFunction& b) {
  return zip(a, b, [](double x, double y) { return x * y; });
}
GridFunction operator*(double s, const GridFunction& a) {
  GridFunction out(a.domain_ptr());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

// --- operations ---

GridFunction sample(const std::function<double(const RealPoint&)>& fn,
                    GridDomain::Ptr domain) {
  GridFunction out(domain);
  const auto& pts = domain->points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = fn(domain->coord(pts[i]));
    if (!std::isfinite(v))
      throw SamplingError("sample: non-finite value at a grid point");
    out[i] = v;
  }
  return out;
}

GridFunction sample(const std::function<double(double)>& fn,
                    GridDomain::Ptr domain) {
  return sample(
      [&fn](const RealPoint& p) { return fn(p[0]); }, std::move(domain));
}

std::vector<Index> lambda_boundary(const GridDomain& d) {
  std::vector<Index> out;
  if (d.periodic()) return out;  // a torus has no boundary
  const int k = d.dim();
  for (const Index& x : d.points()) {
    bool boundary = false;
    // 3^k - 1 neighbours at sup-distance ε, plus the window edge.
    int total = 1;
    for (int a = 0; a < k; ++a) total *= 3;
    for (int code = 0; code < total && !boundary; ++code) {
      int c = code;
      Index y = x;
      bool self = true;
      for (int a = 0; a < k; ++a) {
        int s = c % 3 - 1;
        c /= 3;
        y[a] += s;
        if (s != 0) self = false;
      }
      if (self) continue;
      if (!d.contains(y)) boundary = true;
    }
    if (boundary) out.push_back(x);
  }
  return out;
}

GridDomain::Ptr shifted_interior(const GridDomain& d, const MultiIndex& alpha,
                                 Direction dir) {
  int sign = dir == Direction::forward ? 1 : -1;
  return d.restricted([&](const Index& x) {
    Index y = x;
    for (int a = 0; a < d.dim(); ++a) y[a] += sign * alpha[a];
    return d.contains(y);
  });
}

std::vector<Index> alpha_boundary(const GridDomain& d,
                                  const MultiIndex& alpha) {
  auto boundary = lambda_boundary(d);
  std::vector<std::int64_t> on_boundary(d.size(), 0);
  for (const Index& b : boundary) on_boundary[d.ordinal(b)] = 1;
  std::vector<Index> out;
  for (const Index& x : d.points()) {
    Index y = x;
    for (int a = 0; a < d.dim(); ++a) y[a] += alpha[a];
    auto ord = d.ordinal(y);
    if (ord >= 0 && on_boundary[ord]) out.push_back(x);
  }
  return out;
}

GridFunction diff(const GridFunction& f, int axis, Direction dir) {
  const auto& d = f.domain();
  double n = static_cast<double>(d.level().n_cells());
  auto sub = d.periodic() ? f.domain_ptr()
                          : shifted_interior(d, MultiIndex::unit(axis), dir);
  GridFunction out(sub);
  const auto& pts = sub->points();
  int sign = dir == Direction::forward ? 1 : -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Index y = pts[i];
    y[axis] += sign;
    double a = f.value_at(y);
    double b = f.value_at(pts[i]);
    out[i] = dir == Direction::forward ? (a - b) * n : (b - a) * n;
  }
  return out;
}

GridFunction alpha_diff(const GridFunction& f, const MultiIndex& alpha,
                        Direction dir) {
  GridFunction out = f;
  for (int a = 0; a < f.domain().dim(); ++a)
    for (int m = 0; m < alpha[a]; ++m) out = diff(out, a, dir);
  return out;
}

namespace {

double scale_factor(const GridDomain& d) {
  double nk = 1.0;
  for (int a = 0; a < d.dim(); ++a)
    nk *= static_cast<double>(d.level().n_cells());
  return nk;
}

}  // namespace

double grid_integral(const GridFunction& f) {
  CompensatedSum s;
  for (double v : f.values()) s.add(v);
  return s.value() / scale_factor(f.domain());
}

double grid_integral(const GridFunction& f, const std::vector<Index>& region) {
  CompensatedSum s;
  for (const Index& x : region) {
    if (f.domain().ordinal(x) < 0)
      throw Error("grid_integral: region point outside the domain");
    s.add(f.value_at(x));
  }
  return s.value() / scale_factor(f.domain());
}

double inner_product(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f, g);
  // Walk the smaller point set; both are lexicographically sorted, so the
  // summation order over the intersection does not depend on the choice.
  const GridFunction& small = f.size() <= g.size() ? f : g;
  const GridFunction& big = f.size() <= g.size() ? g : f;
  CompensatedSum s;
  const auto& pts = small.domain().points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    s.add(small[i] * big.value_at(pts[i]));
  return s.value() / scale_factor(f.domain());
}

double lp_norm(const GridFunction& f, double p) {
  if (p == kInfinity) return f.max_abs();
  if (!(p >= 1.0)) throw Error("lp_norm: p must be >= 1 or infinity");
  CompensatedSum s;
  if (p == 1.0) {
    for (double v : f.values()) s.add(std::fabs(v));
    return s.value() / scale_factor(f.domain());
  }
  if (p == 2.0) {
    for (double v : f.values()) s.add(v * v);
    return std::sqrt(s.value() / scale_factor(f.domain()));
  }
  for (double v : f.values()) s.add(std::pow(std::fabs(v), p));
  return std::pow(s.value() / scale_factor(f.domain()), 1.0 / p);
}

GridFunction shift(const GridFunction& f, std::int64_t steps, int axis) {
  GridFunction out(f.domain_ptr());
  const auto& pts = f.domain().points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Index y = pts[i];
    y[axis] += steps;
    out[i] = f.value_at(y);
  }
  return out;
}

GridFunction product_rule_residual(const GridFunction& f,
                                   const GridFunction& g, int form,
                                   Direction dir, int axis) {
  require_same_grid(f, g);
  GridFunction lhs = diff(f * g, axis, dir);
  GridFunction df = diff(f, axis, dir);
  GridFunction dg = diff(g, axis, dir);
  std::int64_t s = dir == Direction::forward ? 1 : -1;
  double n = static_cast<double>(f.level().n_cells());

  GridFunction out(lhs.domain_ptr());
  const auto& pts = lhs.domain().points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Index x = pts[i];
    Index xs = x;
    xs[axis] += s;
    double rhs;
    switch (form) {
      case 1:
        rhs = dir == Direction::forward
                  ? (f.value_at(xs) * g.value_at(xs) -
                     f.value_at(x) * g.value_at(x)) * n
                  : (f.value_at(x) * g.value_at(x) -
                     f.value_at(xs) * g.value_at(xs)) * n;
        break;
      case 2:
        rhs = f.value_at(xs) * dg.value_at(x) + g.value_at(x) * df.value_at(x);
        break;
      case 3:
        rhs = f.value_at(x) * dg.value_at(x) + g.value_at(xs) * df.value_at(x);
        break;
      default:
        throw Error("product_rule_residual: form must be 1, 2 or 3");
    }
    out[i] = lhs[i] - rhs;
  }
  return out;
}

ResidualWithScale summation_by_parts_residual(const GridFunction& f,
                                              const GridFunction& phi,
                                              int axis) {
  require_same_grid(f, phi);
  GridFunction df = diff(f, axis, Direction::forward);
  GridFunction dphi = diff(phi, axis, Direction::forward);
  GridFunction fs = shift(f, 1, axis);

  CompensatedSum s;
  CompensatedSum mag;
  const auto& pts = df.domain().points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double t = df[i] * phi.value_at(pts[i]);
    s.add(t);
    mag.add(std::fabs(t));
  }
  const auto& pts2 = dphi.domain().points();
  for (std::size_t i = 0; i < pts2.size(); ++i) {
    double t = fs.value_at(pts2[i]) * dphi[i];
    s.add(t);
    mag.add(std::fabs(t));
  }
  double nk = scale_factor(f.domain());
  return {s.value() / nk, mag.value() / nk};
}

double step_extension_eval(const GridFunction& f, const RealPoint& x) {
  const auto& d = f.domain();
  double n = static_cast<double>(d.level().n_cells());
  Index cell{};
  for (int a = 0; a < d.dim(); ++a) {
    double scaled = x[a] * n;
    double r = std::nearbyint(scaled);
    // Points that are on the grid up to rounding belong to their own cell.
    if (std::fabs(scaled - r) <= 4e-12 * std::max(1.0, std::fabs(scaled)))
      cell[a] = static_cast<std::int64_t>(r);
    else
      cell[a] = static_cast<std::int64_t>(std::floor(scaled));
  }
  return f.value_at(cell);
}

double step_extension_eval(const GridFunction& f, double x) {
  return step_extension_eval(f, RealPoint{x, 0.0, 0.0});
}

}  // namespace gridfn
