#ifndef GRIDFN_ASYMPTOTICS_HPP
#define GRIDFN_ASYMPTOTICS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gridfn/errors.hpp"
#include "gridfn/grid.hpp"

namespace gridfn {

// Ordered sequence of nested grid levels (each N divides the next); the
// finite stand-in for letting the resolution grow without bound.
struct Ladder {
  std::vector<GridLevel> levels;

  // Levels N = base · 2^(first_exponent + i·stride), i = 0..count-1.
  static Ladder make(std::int64_t base, double window, int count,
                     int first_exponent = 0, int stride = 1);

  std::size_t size() const { return levels.size(); }
  const GridLevel& finest() const { return levels.back(); }
};

struct Sample {
  double n = 0.0;  // abscissa (grid resolution or another scale parameter)
  double value = 0.0;
};

enum class Classification { infinitesimal, finite, infinite, unresolved };

const char* to_string(Classification c);

// Fitted behaviour value ≈ coefficient · n^exponent (+ limit), used to decide
// whether a ladder quantity vanishes, converges or diverges.
struct AsymptoticEstimate {
  // Growth exponent of the value itself (log|value| vs log n slope).
  double exponent = 0.0;
  double coefficient = 0.0;
  // Decay order q of |value - limit| ~ n^-q; what Richardson steps use.
  double correction_order = 0.0;
  double fit_residual = 0.0;
  std::optional<double> limit;
  Classification classification = Classification::unresolved;
  // Thresholds the classification was made with, kept for reporting.
  double exponent_threshold = 0.0;
  double residual_bound = 0.0;
};

struct FitOptions {
  double exponent_threshold = 0.2;
  double residual_bound = 1e-2;
};

struct ClassificationError : Error {
  ClassificationError(const std::string& what, AsymptoticEstimate est)
      : Error(what), estimate(est) {}
  AsymptoticEstimate estimate;
};

// Evaluate a scalar quantity on every rung; failures are rethrown with the
// offending level attached.
std::vector<Sample> evaluate_over_ladder(
    const std::function<double(const GridLevel&)>& quantity,
    const Ladder& ladder);

AsymptoticEstimate fit_power_law(const std::vector<Sample>& samples,
                                 const FitOptions& opts = {});

// Richardson extrapolation from the two finest samples, using the fitted
// correction order unless one is supplied. Throws ClassificationError when
// the quantity is classified infinite or unresolved.
double standard_part(const std::vector<Sample>& samples,
                     std::optional<double> assumed_order = std::nullopt,
                     const FitOptions& opts = {});

// Iterated Richardson tableau eliminating corrections of orders
// base_order, base_order+1, ... in 1/n. Requires a uniform abscissa ratio.
// This is not a fit: it is the deterministic estimator for quantities whose
// ladder corrections are known to come in integer-spaced powers (grid
// pairings analytic in the step).
double richardson_table(const std::vector<Sample>& samples,
                        double base_order = 1.0, int stages = -1);

}  // namespace gridfn

#endif
