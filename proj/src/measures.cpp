#include "gridfn/measures.hpp"

#include <algorithm>
#include <cmath>

namespace gridfn {

ValueMeasure::ValueMeasure(double cutoff, int bin_count)
    : cutoff_(cutoff),
      bin_count_(bin_count),
      width_(2.0 * cutoff / bin_count),
      counts_(bin_count, 0),
      value_sums_(bin_count, 0.0) {
  if (!(cutoff > 0)) throw Error("ValueMeasure: cutoff must be positive");
  if (bin_count < 1) throw Error("ValueMeasure: need at least one bin");
}

void ValueMeasure::insert(double value) {
  ++total_;
  if (std::fabs(value) > cutoff_) {
    ++escaped_;
    return;
  }
  int bin = static_cast<int>((value + cutoff_) / width_);
  bin = std::clamp(bin, 0, bin_count_ - 1);
  ++counts_[bin];
  value_sums_[bin] += value;
}

double ValueMeasure::escaped_mass() const {
  return total_ == 0 ? 0.0
                     : static_cast<double>(escaped_) /
                           static_cast<double>(total_);
}

double ValueMeasure::mass(int bin) const {
  return total_ == 0 ? 0.0
                     : static_cast<double>(counts_[bin]) /
                           static_cast<double>(total_);
}

double ValueMeasure::bin_lo(int bin) const { return -cutoff_ + bin * width_; }
double ValueMeasure::bin_hi(int bin) const { return bin_lo(bin) + width_; }

double ValueMeasure::bin_mean(int bin) const {
  return counts_[bin] == 0
             ? 0.5 * (bin_lo(bin) + bin_hi(bin))
             : value_sums_[bin] / static_cast<double>(counts_[bin]);
}

double ValueMeasure::integrate(
    const std::function<double(double)>& psi) const {
  if (total_ == 0) return 0.0;
  CompensatedSum s;
  for (int b = 0; b < bin_count_; ++b)
    if (counts_[b] > 0)
      s.add(static_cast<double>(counts_[b]) * psi(bin_mean(b)));
  return s.value() / static_cast<double>(total_);
}

double ValueMeasure::moment(int q) const {
  return integrate([q](double t) { return std::pow(t, q); });
}

std::vector<ValueMeasure::Atom> ValueMeasure::atoms(
    double mass_threshold) const {
  std::vector<Atom> out;
  for (int b = 0; b < bin_count_; ++b)
    if (mass(b) > mass_threshold) out.push_back({bin_mean(b), mass(b)});
  return out;
}

double MeasureOptions::window_width_of(std::int64_t n) const {
  if (window_width) return window_width(n);
  return 1.0 / std::sqrt(static_cast<double>(n));
}

double MeasureOptions::cutoff_for(const GridFunction& f) const {
  if (cutoff > 0) return cutoff;
  std::vector<double> mags;
  mags.reserve(f.size());
  for (double v : f.values()) mags.push_back(std::fabs(v));
  auto mid = mags.begin() + mags.size() / 2;
  std::nth_element(mags.begin(), mid, mags.end());
  return 8.0 * *mid + 1.0;
}

std::vector<RealPoint> make_probes(double lo, double hi, int count) {
  std::vector<RealPoint> out;
  double h = (hi - lo) / count;
  for (int j = 0; j < count; ++j)
    out.push_back(RealPoint{lo + (j + 0.5) * h, 0.0, 0.0});
  return out;
}

MeasureField extract_measure(const GridFunction& f,
                             const std::vector<RealPoint>& probes,
                             double window_width, int bins, double cutoff,
                             double probe_spacing) {
  const GridDomain& d = f.domain();
  const double n = static_cast<double>(d.level().n_cells());
  const std::int64_t half =
      static_cast<std::int64_t>(std::floor(0.5 * window_width * n));

  MeasureField field;
  field.probes = probes;
  field.window_width = window_width;
  field.cutoff = cutoff;
  field.probe_spacing = probe_spacing;

  for (const RealPoint& p : probes) {
    Index center{};
    for (int a = 0; a < d.dim(); ++a)
      center[a] = static_cast<std::int64_t>(std::nearbyint(p[a] * n));
    ValueMeasure vm(cutoff, bins);

    Index idx = center;
    std::function<void(int)> scan = [&](int axis) {
      if (axis == d.dim()) {
        auto ord = d.ordinal(idx);
        if (ord >= 0) vm.insert(f[static_cast<std::size_t>(ord)]);
        return;
      }
      for (std::int64_t s = -half; s <= half; ++s) {
        idx[axis] = center[axis] + s;
        scan(axis + 1);
      }
      idx[axis] = center[axis];
    };
    scan(0);

    if (vm.total_count() < 16)
      throw WindowError("extract_measure: window holds fewer than 16 points");
    field.measures.push_back(std::move(vm));
  }
  return field;
}

MeasureField extract_measure(const GridFunction& f,
                             const std::vector<RealPoint>& probes,
                             double probe_spacing, const MeasureOptions& opts) {
  return extract_measure(f, probes,
                         opts.window_width_of(f.level().n_cells()), opts.bins,
                         opts.cutoff_for(f), probe_spacing);
}

ValueMeasure periodic_measure(const GridFunction& f, std::int64_t period_steps,
                              int bins, double cutoff) {
  const GridDomain& d = f.domain();
  if (d.dim() != 1) throw Error("periodic_measure: 1D only");
  if (period_steps < 1) throw Error("periodic_measure: period must be >= 1");
  const auto& pts = d.points();
  if (static_cast<std::int64_t>(pts.size()) < 2 * period_steps)
    throw Error("periodic_measure: domain shorter than two periods");

  double tol = 8.0 * std::numeric_limits<double>::epsilon() *
               std::max(1.0, f.max_abs());
  for (std::size_t i = 0; i + period_steps < pts.size(); ++i) {
    Index shifted = pts[i];
    shifted[0] += period_steps;
    if (!d.contains(shifted)) continue;
    if (std::fabs(f.value_at(shifted) - f[i]) > tol)
      throw PeriodicityError("periodic_measure: period violation found");
  }

  if (cutoff <= 0) {
    MeasureOptions o;
    cutoff = o.cutoff_for(f);
  }
  ValueMeasure vm(cutoff, bins);
  for (std::int64_t i = 0; i < period_steps; ++i)
    vm.insert(f[static_cast<std::size_t>(i)]);
  return vm;
}

double pair_measure(const MeasureField& field,
                    const std::function<double(double)>& psi,
                    const TestFunction& phi) {
  if (!(field.probe_spacing > 0))
    throw Error("pair_measure: field carries no probe spacing");
  CompensatedSum s;
  for (std::size_t j = 0; j < field.probes.size(); ++j)
    s.add(field.measures[j].integrate(psi) * phi(field.probes[j]));
  return s.value() * field.probe_spacing;
}

BarycentreCheck barycentre_check(const GridFamily& f,
                                 const std::vector<RealPoint>& probes,
                                 double probe_spacing,
                                 const TestBattery& battery,
                                 const Ladder& ladder,
                                 const MeasureOptions& mopts,
                                 const FitOptions& fopts) {
  BarycentreCheck out;
  out.residuals.assign(battery.size(), {});

  std::vector<Sample> sup_norms;
  for (const GridLevel& lv : ladder.levels) {
    GridFunction fn = f(lv);
    sup_norms.push_back(
        {static_cast<double>(lv.n_cells()), lp_norm(fn, kInfinity)});
    MeasureField field = extract_measure(fn, probes, probe_spacing, mopts);
    double cut = field.cutoff;
    auto clipped_identity = [cut](double t) {
      return std::fabs(t) <= cut ? t : 0.0;
    };
    for (std::size_t i = 0; i < battery.size(); ++i) {
      double lhs = pair(fn, battery[i]);
      double rhs = pair_measure(field, clipped_identity, battery[i]);
      out.residuals[i].push_back(
          {static_cast<double>(lv.n_cells()), std::fabs(lhs - rhs)});
    }
  }
  auto sup_est = fit_power_law(sup_norms, fopts);
  out.sup_norm_finite =
      sup_est.classification == Classification::finite ||
      sup_est.classification == Classification::infinitesimal;
  for (auto& r : out.residuals)
    out.estimates.push_back(fit_power_law(r, fopts));
  return out;
}

std::vector<GridFunction> truncation_ladder(
    const GridFunction& f, const std::vector<double>& heights) {
  std::vector<GridFunction> out;
  for (double h : heights) {
    if (!(h > 0)) throw Error("truncation_ladder: heights must be positive");
    out.push_back(
        f.map([h](double v) { return std::clamp(v, -h, h); }));
  }
  return out;
}

}  // namespace gridfn
