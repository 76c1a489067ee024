#include "gridfn/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <thread>

namespace gridfn {

Ladder Ladder::make(std::int64_t base, double window, int count,
                    int first_exponent, int stride) {
  if (count < 3) throw Error("Ladder: at least 3 levels required");
  if (stride < 1) throw Error("Ladder: stride must be >= 1");
  Ladder l;
  for (int i = 0; i < count; ++i)
    l.levels.push_back(
        GridLevel::make(first_exponent + i * stride, base, window));
  return l;
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::infinitesimal: return "infinitesimal";
    case Classification::finite: return "finite";
    case Classification::infinite: return "infinite";
    case Classification::unresolved: return "unresolved";
  }
  return "?";
}

namespace {

int worker_cap() {
  if (const char* env = std::getenv("GRIDFN_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  int points = 0;
};

// Least squares of log|value| against log(abscissa), skipping zeros.
LogFit fit_loglog(const std::vector<Sample>& samples) {
  std::vector<double> xs, ys;
  for (const auto& s : samples) {
    if (s.value != 0.0 && s.n > 0.0) {
      xs.push_back(std::log(s.n));
      ys.push_back(std::log(std::fabs(s.value)));
    }
  }
  LogFit fit;
  fit.points = static_cast<int>(xs.size());
  if (fit.points < 2) return fit;
  double mx = 0, my = 0;
  for (int i = 0; i < fit.points; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= fit.points;
  my /= fit.points;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < fit.points; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rr = 0;
  for (int i = 0; i < fit.points; ++i) {
    double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rr += r * r;
  }
  fit.rms_residual = std::sqrt(rr / fit.points);
  return fit;
}

// Decay order q solving (x3^-q - x2^-q)/(x2^-q - x1^-q) = rho by bisection.
std::optional<double> solve_order(double x1, double x2, double x3,
                                  double rho) {
  auto g = [&](double q) {
    double a = std::pow(x1, -q), b = std::pow(x2, -q), c = std::pow(x3, -q);
    return (c - b) / (b - a);
  };
  double lo = 1e-4, hi = 64.0;
  double glo = g(lo), ghi = g(hi);
  // g decreases from ~1 towards 0 as q grows.
  if (!(rho < glo && rho > ghi)) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) > rho)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<Sample> evaluate_over_ladder(
    const std::function<double(const GridLevel&)>& quantity,
    const Ladder& ladder) {
  const std::size_t count = ladder.levels.size();
  std::vector<Sample> out(count);
  int cap = worker_cap();
  if (cap <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      const GridLevel& lv = ladder.levels[i];
      try {
        out[i] = {static_cast<double>(lv.n_cells()), quantity(lv)};
      } catch (const std::exception& e) {
        throw Error("ladder evaluation failed at N = " +
                    std::to_string(lv.n_cells()) + ": " + e.what());
      }
    }
    return out;
  }
  // One slot per level; results are written independently, so the outcome
  // does not depend on scheduling.
  std::vector<std::future<double>> futs(count);
  for (std::size_t i = 0; i < count; ++i)
    futs[i] = std::async(std::launch::async,
                         [&quantity, lv = ladder.levels[i]] { return quantity(lv); });
  for (std::size_t i = 0; i < count; ++i) {
    const GridLevel& lv = ladder.levels[i];
    try {
      out[i] = {static_cast<double>(lv.n_cells()), futs[i].get()};
    } catch (const std::exception& e) {
      throw Error("ladder evaluation failed at N = " +
                  std::to_string(lv.n_cells()) + ": " + e.what());
    }
  }
  return out;
}

AsymptoticEstimate fit_power_law(const std::vector<Sample>& samples,
                                 const FitOptions& opts) {
  if (samples.size() < 3)
    throw Error("fit_power_law: need at least 3 samples");
  const std::size_t n = samples.size();

  AsymptoticEstimate est;
  est.exponent_threshold = opts.exponent_threshold;
  est.residual_bound = opts.residual_bound;

  double scale = 0.0;
  for (const auto& s : samples) scale = std::max(scale, std::fabs(s.value));

  const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  // All values equal (or all zero): already converged.
  double spread = 0.0;
  for (const auto& s : samples)
    spread = std::max(spread, std::fabs(s.value - samples[0].value));
  if (scale == 0.0 || spread <= tiny) {
    est.classification = Classification::finite;
    est.limit = samples.back().value;
    est.coefficient = samples.back().value;
    est.correction_order = 16.0;
    return est;
  }

  LogFit raw = fit_loglog(samples);
  est.exponent = raw.slope;
  est.coefficient = std::exp(raw.intercept);
  est.fit_residual = raw.rms_residual;

  // Local slope across the two finest rungs. A genuine power law shows the
  // same slope globally and at the tail; growth that decelerates below the
  // threshold is treated as bounded, not infinite.
  double v_prev = std::fabs(samples[n - 2].value);
  double v_last = std::fabs(samples[n - 1].value);
  double tail_slope;
  if (v_last <= tiny && v_prev <= tiny)
    tail_slope = 0.0;
  else if (v_last <= tiny || v_prev <= tiny)
    tail_slope = v_last <= tiny ? -999.0 : 999.0;
  else
    tail_slope = std::log(v_last / v_prev) /
                 std::log(samples[n - 1].n / samples[n - 2].n);

  if (raw.slope > opts.exponent_threshold &&
      tail_slope > opts.exponent_threshold) {
    est.classification = raw.rms_residual <= opts.residual_bound
                             ? Classification::infinite
                             : Classification::unresolved;
    est.correction_order = -raw.slope;
    return est;
  }

  if (raw.slope < -opts.exponent_threshold) {
    // Vanishing magnitude. Superpower decay (common for smooth-bump
    // pairings) fits a power law poorly, and decay rates with deterministic
    // jitter (off-grid jumps) wobble at the tail; the claim being
    // classified is only that the value tends to 0, so require overall
    // decay and report the residual as is.
    bool decays =
        std::fabs(samples.back().value) <= std::fabs(samples.front().value);
    est.classification =
        decays ? Classification::infinitesimal : Classification::unresolved;
    est.limit = 0.0;
    est.correction_order = -raw.slope;
    return est;
  }

  if (v_last <= tiny && v_prev <= tiny) {
    est.classification = Classification::finite;
    est.limit = samples.back().value;
    est.correction_order = 16.0;
    return est;
  }

  // Bounded, possibly nonzero limit: Richardson from the trailing triple.
  double v1 = samples[n - 3].value, v2 = samples[n - 2].value,
         v3 = samples[n - 1].value;
  double x1 = samples[n - 3].n, x2 = samples[n - 2].n, x3 = samples[n - 1].n;
  double d1 = v2 - v1, d2 = v3 - v2;

  if (std::fabs(d2) <= tiny && std::fabs(d1) <= tiny) {
    est.classification = Classification::finite;
    est.limit = v3;
    est.correction_order = 16.0;
    est.fit_residual = 0.0;
    return est;
  }

  double rho = d2 / d1;
  auto order = (std::fabs(d1) > 0) ? solve_order(x1, x2, x3, rho)
                                   : std::nullopt;
  if (!order) {
    est.classification = Classification::unresolved;
    return est;
  }

  double q = *order;
  double a2 = std::pow(x2, -q), a3 = std::pow(x3, -q);
  double limit = v3 + (v3 - v2) * a3 / (a2 - a3);

  // Fit the decay of the corrections around the extrapolated limit.
  std::vector<Sample> corr;
  for (const auto& s : samples)
    if (std::fabs(s.value - limit) > tiny)
      corr.push_back({s.n, s.value - limit});
  if (corr.size() >= 2) {
    LogFit cf = fit_loglog(corr);
    est.correction_order = -cf.slope;
    est.coefficient = std::exp(cf.intercept);
    est.fit_residual = cf.rms_residual;
  } else {
    est.correction_order = q;
    est.fit_residual = 0.0;
  }

  est.limit = limit;
  est.classification = est.fit_residual <= opts.residual_bound
                           ? Classification::finite
                           : Classification::unresolved;
  return est;
}

double standard_part(const std::vector<Sample>& samples,
                     std::optional<double> assumed_order,
                     const FitOptions& opts) {
  AsymptoticEstimate est = fit_power_law(samples, opts);
  if (est.classification == Classification::infinite ||
      est.classification == Classification::unresolved) {
    throw ClassificationError(
        std::string("standard_part: quantity classified ") +
            to_string(est.classification),
        est);
  }
  // A vanishing quantity has standard part 0; a two-point Richardson step
  // with a fitted order would only blur that.
  if (est.classification == Classification::infinitesimal) return 0.0;
  const std::size_t n = samples.size();
  double vp = samples[n - 2].value, vn = samples[n - 1].value;
  if (vp == vn) return vn;
  double q = assumed_order.value_or(est.correction_order);
  double r = samples[n - 1].n / samples[n - 2].n;
  double den = std::pow(r, q) - 1.0;
  if (!(den > 0.0)) return vn;
  return vn + (vn - vp) / den;
}

double richardson_table(const std::vector<Sample>& samples, double base_order,
                        int stages) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw Error("richardson_table: need at least 2 samples");
  double ratio = samples[1].n / samples[0].n;
  for (int i = 1; i + 1 < n; ++i) {
    double r = samples[i + 1].n / samples[i].n;
    if (std::fabs(r - ratio) > 1e-9 * ratio)
      throw Error("richardson_table: abscissa ratio is not uniform");
  }
  if (stages < 0) stages = n - 1;
  stages = std::min(stages, n - 1);

  std::vector<double> t(samples.size());
  for (int i = 0; i < n; ++i) t[i] = samples[i].value;
  for (int s = 0; s < stages; ++s) {
    double factor = std::pow(ratio, base_order + s) - 1.0;
    for (int i = 0; i + s + 1 < n; ++i)
      t[i] = t[i + 1] + (t[i + 1] - t[i]) / factor;
  }
  return t[0];
}

}  // namespace gridfn
