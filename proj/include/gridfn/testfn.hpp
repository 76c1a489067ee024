#ifndef GRIDFN_TESTFN_HPP
#define GRIDFN_TESTFN_HPP

#include <cstdint>
#include <vector>

#include "gridfn/grid.hpp"

namespace gridfn {

// Smooth compactly supported bump, the product over axes of
//   t -> exp(-1/(1-t^2)),  t = (x_i - c_i)/r,
// with derivatives of any order available in closed form: the m-th
// derivative is P_m(t)/(1-t^2)^(2m) times the bump, where the P_m satisfy
//   P_{m+1} = (1-t^2)^2 P_m' + (4mt(1-t^2) - 2t) P_m.
class TestFunction {
 public:
  TestFunction(RealPoint center, double radius, int dim);
  TestFunction(double center, double radius);  // 1D convenience

  double operator()(const RealPoint& x) const;
  double operator()(double x) const;
  double derivative(const RealPoint& x, const MultiIndex& alpha) const;
  double derivative(double x, int order) const;

  const RealPoint& center() const { return center_; }
  double radius() const { return radius_; }
  int dim() const { return dim_; }
  double support_lo(int axis) const { return center_[axis] - radius_; }
  double support_hi(int axis) const { return center_[axis] + radius_; }
  bool positive_at(const RealPoint& x) const;

 private:
  double axis_value(double t, int order) const;

  RealPoint center_{};
  double radius_;
  int dim_;
};

// A finite family of bumps standing in for "all test functions": varied
// centers (low-discrepancy) and log-spaced radii inside a box.
class TestBattery {
 public:
  struct Config {
    int count = 12;
    std::uint64_t seed = 0;
    // Radius range as a fraction of the box diameter.
    double radius_lo_frac = 0.05;
    double radius_hi_frac = 0.4;
  };

  // Bumps inside the open box (lo, hi)^dim. Any point listed in
  // required_points gets a dedicated bump centered on it, so the battery
  // is positive there.
  static TestBattery make(double lo, double hi, int dim, const Config& cfg,
                          const std::vector<RealPoint>& required_points = {});
  static TestBattery make(double lo, double hi, int dim);

  // All bumps share one center, radii log-spaced in [radius_lo, radius_hi].
  static TestBattery centered(const RealPoint& center, int dim, int count,
                              double radius_lo, double radius_hi);

  const std::vector<TestFunction>& functions() const { return fns_; }
  std::size_t size() const { return fns_.size(); }
  const TestFunction& operator[](std::size_t i) const { return fns_[i]; }

  bool covers(const RealPoint& x) const;

 private:
  std::vector<TestFunction> fns_;
};

}  // namespace gridfn

#endif
