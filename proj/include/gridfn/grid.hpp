#ifndef GRIDFN_GRID_HPP
#define GRIDFN_GRID_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "gridfn/errors.hpp"

namespace gridfn {

// Dimensions are capped at 3; index/point components beyond the domain
// dimension stay zero.
inline constexpr int kMaxDim = 3;

using Index = std::array<std::int64_t, kMaxDim>;
using RealPoint = std::array<double, kMaxDim>;

enum class Direction { forward, backward };

struct MultiIndex {
  std::array<int, kMaxDim> entries{};

  static MultiIndex zero() { return {}; }
  static MultiIndex unit(int axis) {
    MultiIndex m;
    m.entries[axis] = 1;
    return m;
  }
  static MultiIndex of(std::initializer_list<int> init) {
    MultiIndex m;
    int i = 0;
    for (int v : init) m.entries[i++] = v;
    return m;
  }

  int operator[](int axis) const { return entries[axis]; }
  int order() const { return entries[0] + entries[1] + entries[2]; }
  bool operator==(const MultiIndex&) const = default;
};

// One rung of the grid ladder: step ε = 1/N over the box [-L, L]^k.
// N = base · 2^exponent with a highly composite base, so every rational
// with a small denominator lies on every rung at once.
class GridLevel {
 public:
  GridLevel(std::int64_t n_cells, double window);

  static GridLevel make(int resolution_exponent, std::int64_t base,
                        double window);

  std::int64_t n_cells() const { return n_cells_; }
  double step() const { return 1.0 / static_cast<double>(n_cells_); }
  double window() const { return window_; }
  // L·N, the index of the window edge.
  std::int64_t window_cells() const { return window_cells_; }
  double coord(std::int64_t n) const {
    return static_cast<double>(n) / static_cast<double>(n_cells_);
  }

  friend bool operator==(const GridLevel& a, const GridLevel& b) {
    return a.n_cells_ == b.n_cells_ && a.window_cells_ == b.window_cells_;
  }

 private:
  std::int64_t n_cells_;
  double window_;
  std::int64_t window_cells_;
};

// A discretized open set: the grid points of the window box that satisfy the
// membership predicate. Stored densely (bounding index box + mask) with an
// ordinal table for O(1) point lookup; k ≤ 3 keeps this small.
class GridDomain {
 public:
  using Membership = std::function<bool(const RealPoint&)>;
  using Ptr = std::shared_ptr<const GridDomain>;

  static Ptr discretize(const Membership& membership, const GridLevel& level,
                        int dim);
  // The whole window box [-L, L]^k.
  static Ptr full_box(const GridLevel& level, int dim);
  // Window box as a torus: indices in [-L·N, L·N) per axis, lookups wrap.
  static Ptr periodic_box(const GridLevel& level, int dim);

  const GridLevel& level() const { return level_; }
  int dim() const { return dim_; }
  bool periodic() const { return periodic_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Index>& points() const { return points_; }

  // Ordinal of a grid point in points() order, or -1 if absent.
  // Periodic domains wrap the index first.
  std::int64_t ordinal(const Index& idx) const;
  bool contains(const Index& idx) const { return ordinal(idx) >= 0; }

  RealPoint coord(const Index& idx) const;
  Index wrap(Index idx) const;

  // Derived domain restricted to points with a given mask predicate over
  // the same bounding box.
  Ptr restricted(const std::function<bool(const Index&)>& keep) const;

  const Index& box_lo() const { return lo_; }
  const Index& box_hi() const { return hi_; }

 private:
  GridDomain(const GridLevel& level, int dim, Index lo, Index hi,
             bool periodic);
  void finalize(const std::function<bool(const Index&)>& member);
  std::size_t box_offset(const Index& idx) const;

  GridLevel level_;
  int dim_;
  bool periodic_;
  Index lo_{};
  Index hi_{};
  std::array<std::int64_t, kMaxDim> extent_{};
  std::vector<std::int64_t> ordinal_;
  std::vector<Index> points_;
};

// A finite table of real values over the points of a GridDomain; reads
// outside the domain return 0.
class GridFunction {
 public:
  explicit GridFunction(GridDomain::Ptr domain, double fill = 0.0);
  GridFunction(GridDomain::Ptr domain, std::vector<double> values);

  const GridDomain& domain() const { return *domain_; }
  GridDomain::Ptr domain_ptr() const { return domain_; }
  const GridLevel& level() const { return domain_->level(); }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t ordinal) const { return values_[ordinal]; }
  double& operator[](std::size_t ordinal) { return values_[ordinal]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Value at a grid point; 0 when the point is not in the domain.
  double value_at(const Index& idx) const {
    auto ord = domain_->ordinal(idx);
    return ord < 0 ? 0.0 : values_[static_cast<std::size_t>(ord)];
  }

  double max_abs() const;

  GridFunction map(const std::function<double(double)>& fn) const;

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator-(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator*(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator*(double s, const GridFunction& a);

 private:
  GridDomain::Ptr domain_;
  std::vector<double> values_;
};

// Compensated (Neumaier) accumulator. The exact-identity contracts are
// stated in ulps of the term magnitudes, which a plain running sum over
// 10^4 terms cannot meet.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x);
  double value() const { return sum + comp; }
};

struct ResidualWithScale {
  double residual = 0.0;
  // Absolute-value sum of the contributing terms; ulp tolerances are
  // relative to this.
  double scale = 0.0;
};

// --- grid_core operations ---

GridFunction sample(const std::function<double(const RealPoint&)>& fn,
                    GridDomain::Ptr domain);
GridFunction sample(const std::function<double(double)>& fn,
                    GridDomain::Ptr domain);

// Points of d with some sup-norm-ε neighbour outside the domain (tested on
// the 3^k-1 grid neighbours and the window edge).
std::vector<Index> lambda_boundary(const GridDomain& d);

// { x ∈ d : x + αε ∈ d } (forward) or { x ∈ d : x - αε ∈ d } (backward).
GridDomain::Ptr shifted_interior(const GridDomain& d, const MultiIndex& alpha,
                                 Direction dir = Direction::forward);

// { x ∈ d : x + αε ∈ ∂_Λ d }.
std::vector<Index> alpha_boundary(const GridDomain& d, const MultiIndex& alpha);

GridFunction diff(const GridFunction& f, int axis, Direction dir);
GridFunction alpha_diff(const GridFunction& f, const MultiIndex& alpha,
                        Direction dir);

double grid_integral(const GridFunction& f);
double grid_integral(const GridFunction& f, const std::vector<Index>& region);

double inner_product(const GridFunction& f, const GridFunction& g);

double lp_norm(const GridFunction& f, double p);
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// g(x) = f(x + steps·ε·e_axis); reads outside the domain are 0.
GridFunction shift(const GridFunction& f, std::int64_t steps, int axis = 0);

// Δ(f·g) minus one of the three product-rule right-hand sides:
//   form 1: (f g)(x+ε) - (f g)(x) scaled by N   (the difference quotient)
//   form 2: f(x+ε) Δg(x) + g(x) Δf(x)
//   form 3: f(x) Δg(x) + g(x+ε) Δf(x)
// (backward direction mirrors the shifts). Identically zero.
GridFunction product_rule_residual(const GridFunction& f,
                                   const GridFunction& g, int form,
                                   Direction dir = Direction::forward,
                                   int axis = 0);

// ⟨Δf, φ⟩ + ⟨f(·+ε), Δφ⟩ with the scale of the summed terms; exactly zero
// when φ vanishes near the domain edge.
ResidualWithScale summation_by_parts_residual(const GridFunction& f,
                                              const GridFunction& phi,
                                              int axis = 0);

// Value of the step extension f̃ at an arbitrary point: the lower-left cell
// corner value, 0 outside the domain.
double step_extension_eval(const GridFunction& f, const RealPoint& x);
double step_extension_eval(const GridFunction& f, double x);

}  // namespace gridfn

#endif
