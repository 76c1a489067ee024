#include "gridfn/testfn.hpp"

#include <cmath>
#include <mutex>

namespace gridfn {

namespace {

constexpr int kMaxDerivativeOrder = 8;

using Poly = std::vector<double>;  // coefficients, ascending powers

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly poly_add(Poly a, const Poly& b) {
  if (b.size() > a.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

Poly poly_diff(const Poly& a) {
  if (a.size() <= 1) return {0.0};
  Poly out(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i)
    out[i - 1] = a[i] * static_cast<double>(i);
  return out;
}

double poly_eval(const Poly& a, double t) {
  double v = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) v = v * t + a[i];
  return v;
}

const std::vector<Poly>& derivative_polys() {
  static std::vector<Poly> table;
  static std::once_flag once;
  std::call_once(once, [] {
    const Poly one_minus_t2 = {1.0, 0.0, -1.0};
    const Poly sq = poly_mul(one_minus_t2, one_minus_t2);
    table.push_back({1.0});  // P_0
    for (int m = 0; m + 1 <= kMaxDerivativeOrder; ++m) {
      const Poly& pm = table.back();
      Poly next = poly_mul(sq, poly_diff(pm));
      Poly factor = poly_add(poly_mul({0.0, 4.0 * m}, one_minus_t2),
                             Poly{0.0, -2.0});
      next = poly_add(next, poly_mul(factor, pm));
      table.push_back(next);
    }
  });
  return table;
}

}  // namespace

TestFunction::TestFunction(RealPoint center, double radius, int dim)
    : center_(center), radius_(radius), dim_(dim) {
  if (!(radius > 0)) throw Error("TestFunction: radius must be positive");
  if (dim < 1 || dim > kMaxDim) throw Error("TestFunction: dim must be 1..3");
}

TestFunction::TestFunction(double center, double radius)
    : TestFunction(RealPoint{center, 0.0, 0.0}, radius, 1) {}

double TestFunction::axis_value(double t, int order) const {
  if (std::fabs(t) >= 1.0) return 0.0;
  double u = 1.0 - t * t;
  double bump = std::exp(-1.0 / u);
  if (order == 0) return bump;
  if (order > kMaxDerivativeOrder)
    throw Error("TestFunction: derivative order too large");
  const Poly& p = derivative_polys()[order];
  return poly_eval(p, t) / std::pow(u, 2 * order) * bump;
}

double TestFunction::operator()(const RealPoint& x) const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a)
    v *= axis_value((x[a] - center_[a]) / radius_, 0);
  return v;
}

double TestFunction::operator()(double x) const {
  return (*this)(RealPoint{x, 0.0, 0.0});
}

double TestFunction::derivative(const RealPoint& x,
                                const MultiIndex& alpha) const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) {
    double t = (x[a] - center_[a]) / radius_;
    v *= axis_value(t, alpha[a]) / std::pow(radius_, alpha[a]);
  }
  return v;
}

double TestFunction::derivative(double x, int order) const {
  MultiIndex alpha;
  alpha.entries[0] = order;
  return derivative(RealPoint{x, 0.0, 0.0}, alpha);
}

bool TestFunction::positive_at(const RealPoint& x) const {
  for (int a = 0; a < dim_; ++a)
    if (std::fabs(x[a] - center_[a]) >= radius_) return false;
  return true;
}

namespace {

// Van der Corput radical inverse; bases 2, 3, 5 across the axes.
double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv, v = 0.0;
  while (i > 0) {
    v += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return v;
}

}  // namespace

TestBattery TestBattery::make(double lo, double hi, int dim, const Config& cfg,
                              const std::vector<RealPoint>& required_points) {
  if (!(hi > lo)) throw Error("TestBattery: empty box");
  TestBattery b;
  const double diam = hi - lo;
  const double r_lo = cfg.radius_lo_frac * diam;
  const double r_hi = cfg.radius_hi_frac * diam;
  const std::uint64_t bases[kMaxDim] = {2, 3, 5};
  for (int i = 0; i < cfg.count; ++i) {
    double u = cfg.count == 1 ? 0.5
                              : static_cast<double>(i) / (cfg.count - 1);
    double r = r_lo * std::pow(r_hi / r_lo, u);
    r = std::min(r, 0.49 * diam);
    RealPoint c{};
    for (int a = 0; a < dim; ++a) {
      double t = radical_inverse(cfg.seed + 1 + static_cast<std::uint64_t>(i),
                                 bases[a]);
      double margin = 1.02 * r;
      c[a] = lo + margin + t * (diam - 2.0 * margin);
    }
    b.fns_.emplace_back(c, r, dim);
  }
  for (const RealPoint& p : required_points) {
    if (b.covers(p)) continue;
    double r = std::min(0.25 * diam, 0.98 * std::min(p[0] - lo, hi - p[0]));
    for (int a = 1; a < dim; ++a)
      r = std::min(r, 0.98 * std::min(p[a] - lo, hi - p[a]));
    if (!(r > 0)) throw Error("TestBattery: required point outside the box");
    b.fns_.emplace_back(p, r, dim);
  }
  return b;
}

TestBattery TestBattery::make(double lo, double hi, int dim) {
  return make(lo, hi, dim, Config{});
}

TestBattery TestBattery::centered(const RealPoint& center, int dim, int count,
                                  double radius_lo, double radius_hi) {
  TestBattery b;
  for (int i = 0; i < count; ++i) {
    double u = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    double r = radius_lo * std::pow(radius_hi / radius_lo, u);
    b.fns_.emplace_back(center, r, dim);
  }
  return b;
}

bool TestBattery::covers(const RealPoint& x) const {
  for (const auto& f : fns_)
    if (f.positive_at(x)) return true;
  return false;
}

}  // namespace gridfn
