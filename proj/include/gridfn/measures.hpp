#ifndef GRIDFN_MEASURES_HPP
#define GRIDFN_MEASURES_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "gridfn/asymptotics.hpp"
#include "gridfn/grid.hpp"
#include "gridfn/pairing.hpp"
#include "gridfn/testfn.hpp"

namespace gridfn {

// Empirical distribution of the values a grid function takes near a point:
// uniform bins over [-cutoff, cutoff], counts stored exactly so retained
// plus escaped mass is 1 by construction. Values beyond the cutoff are
// recorded as escaped mass (concentration leaving every bounded set).
class ValueMeasure {
 public:
  ValueMeasure(double cutoff, int bin_count);

  void insert(double value);

  double cutoff() const { return cutoff_; }
  int bin_count() const { return bin_count_; }
  std::int64_t total_count() const { return total_; }
  std::int64_t escaped_count() const { return escaped_; }
  double escaped_mass() const;
  double mass(int bin) const;
  double bin_lo(int bin) const;
  double bin_hi(int bin) const;
  // Mass-weighted mean of the samples that landed in the bin.
  double bin_mean(int bin) const;

  // ∫ Ψ dν over the retained bins, Ψ evaluated at the bin means.
  double integrate(const std::function<double(double)>& psi) const;
  double moment(int q) const;

  struct Atom {
    double position;
    double mass;
  };
  // Bins holding more than the threshold of the total mass.
  std::vector<Atom> atoms(double mass_threshold = 0.25) const;

 private:
  double cutoff_;
  int bin_count_;
  double width_;
  std::vector<std::int64_t> counts_;
  std::vector<double> value_sums_;
  std::int64_t escaped_ = 0;
  std::int64_t total_ = 0;
};

struct MeasureOptions {
  int bins = 64;
  // cutoff <= 0 means automatic: 8·median(|f|) + 1.
  double cutoff = 0.0;
  // Window width rule w(N); defaults to N^-1/2 (so w -> 0 and w/ε -> ∞).
  std::function<double(std::int64_t)> window_width;
  double window_width_of(std::int64_t n) const;
  double cutoff_for(const GridFunction& f) const;
};

// Per-probe value histogram of f over sup-norm windows of the given width.
struct MeasureField {
  std::vector<RealPoint> probes;
  std::vector<ValueMeasure> measures;
  double window_width = 0.0;
  double cutoff = 0.0;
  double probe_spacing = 0.0;  // midpoint-rule weight for pair_measure
};

// Probes at the centers of `count` equal subintervals of (lo, hi).
std::vector<RealPoint> make_probes(double lo, double hi, int count = 17);

MeasureField extract_measure(const GridFunction& f,
                             const std::vector<RealPoint>& probes,
                             double window_width, int bins, double cutoff,
                             double probe_spacing = 0.0);
MeasureField extract_measure(const GridFunction& f,
                             const std::vector<RealPoint>& probes,
                             double probe_spacing,
                             const MeasureOptions& opts = {});

// Uniform empirical measure over one period of a periodic grid function
// (period M grid steps, verified by scan).
ValueMeasure periodic_measure(const GridFunction& f, std::int64_t period_steps,
                              int bins = 64, double cutoff = 0.0);

// Midpoint-rule quadrature of (∫ Ψ dν_x) φ(x) over the probes.
double pair_measure(const MeasureField& field,
                    const std::function<double(double)>& psi,
                    const TestFunction& phi);

struct BarycentreCheck {
  // One residual sequence per battery member:
  // |⟨f, φ⟩ - ∫ (∫ τ dν_x) φ dx|, which must vanish over the ladder.
  std::vector<std::vector<Sample>> residuals;
  std::vector<AsymptoticEstimate> estimates;
  bool sup_norm_finite = false;
};

BarycentreCheck barycentre_check(const GridFamily& f,
                                 const std::vector<RealPoint>& probes,
                                 double probe_spacing,
                                 const TestBattery& battery,
                                 const Ladder& ladder,
                                 const MeasureOptions& mopts = {},
                                 const FitOptions& fopts = {});

// f clamped at ±height, one entry per height.
std::vector<GridFunction> truncation_ladder(const GridFunction& f,
                                            const std::vector<double>& heights);

}  // namespace gridfn

#endif
