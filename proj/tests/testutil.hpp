#ifndef GRIDFN_TESTS_TESTUTIL_HPP
#define GRIDFN_TESTS_TESTUTIL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "gridfn/grid.hpp"

namespace testutil {

// |a - b| within n units in the last place of the given magnitude.
inline bool within_ulps(double a, double b, double magnitude, int n = 8) {
  double tol = n * std::numeric_limits<double>::epsilon() *
               std::max(magnitude, 1e-300);
  return std::fabs(a - b) <= tol;
}

inline double ulps(double magnitude, int n = 8) {
  return n * std::numeric_limits<double>::epsilon() *
         std::max(magnitude, 1e-300);
}

// Composite 8-node Gauss-Legendre quadrature; the independent integration
// oracle for the pairing tests.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, int panels = 256) {
  static const double nodes[8] = {
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
      -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
      0.7966664774136267,  0.9602898564975363};
  static const double weights[8] = {
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
      0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
      0.2223810344533745, 0.1012285362903763};
  double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    double mid = a + (p + 0.5) * h;
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) acc += weights[i] * f(mid + 0.5 * h * nodes[i]);
    total += 0.5 * h * acc;
  }
  return total;
}

inline gridfn::GridFunction random_grid_function(gridfn::GridDomain::Ptr d,
                                                 std::uint64_t seed,
                                                 double lo = -1.0,
                                                 double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  gridfn::GridFunction f(d);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = dist(rng);
  return f;
}

}  // namespace testutil

#endif
