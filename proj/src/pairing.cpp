#include "gridfn/pairing.hpp"

#include <algorithm>
#include <cmath>

namespace gridfn {

namespace {

// 4-node Gauss-Legendre on [0,1]: nodes and weights (weights sum to 1).
constexpr int kQuadNodes = 4;
constexpr double kQuadNode[kQuadNodes] = {
    0.5 - 0.4305681557970263, 0.5 - 0.1699905217924281,
    0.5 + 0.1699905217924281, 0.5 + 0.4305681557970263};
constexpr double kQuadWeight[kQuadNodes] = {
    0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
    0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

double scale_factor(const GridDomain& d) {
  double nk = 1.0;
  for (int a = 0; a < d.dim(); ++a)
    nk *= static_cast<double>(d.level().n_cells());
  return nk;
}

void check_support(const GridFunction& f, const TestFunction& phi) {
  const GridLevel& lv = f.level();
  for (int a = 0; a < phi.dim(); ++a) {
    if (phi.support_lo(a) <= -lv.window() || phi.support_hi(a) >= lv.window())
      throw WindowError("pair: test-function support escapes the window");
  }
}

// Iterate f's domain points inside the support box of phi.
template <typename Fn>
void for_each_support_point(const GridFunction& f, const TestFunction& phi,
                            Fn&& fn) {
  const GridDomain& d = f.domain();
  const GridLevel& lv = d.level();
  double n = static_cast<double>(lv.n_cells());
  Index lo{}, hi{};
  for (int a = 0; a < d.dim(); ++a) {
    lo[a] = std::max<std::int64_t>(
        d.box_lo()[a],
        static_cast<std::int64_t>(std::ceil(phi.support_lo(a) * n)));
    hi[a] = std::min<std::int64_t>(
        d.box_hi()[a],
        static_cast<std::int64_t>(std::floor(phi.support_hi(a) * n)));
    if (lo[a] > hi[a]) return;
  }
  Index idx = lo;
  while (true) {
    auto ord = d.ordinal(idx);
    if (ord >= 0) fn(static_cast<std::size_t>(ord), idx);
    int a = d.dim() - 1;
    for (; a >= 0; --a) {
      if (++idx[a] <= hi[a]) break;
      idx[a] = lo[a];
    }
    if (a < 0) break;
  }
}

}  // namespace

double pair(const GridFunction& f, const TestFunction& phi) {
  check_support(f, phi);
  CompensatedSum s;
  for_each_support_point(f, phi, [&](std::size_t ord, const Index& idx) {
    s.add(f[ord] * phi(f.domain().coord(idx)));
  });
  return s.value() / scale_factor(f.domain());
}

bool DistributionEstimate::all_finite() const {
  for (const auto& a : actions) {
    if (a.estimate.classification != Classification::finite &&
        a.estimate.classification != Classification::infinitesimal)
      return false;
  }
  return true;
}

DistributionEstimate project_distribution(const GridFamily& f,
                                          const TestBattery& battery,
                                          const Ladder& ladder,
                                          const FitOptions& opts) {
  // One pass per rung; every battery member is paired against the same
  // grid function.
  std::vector<std::vector<Sample>> samples(battery.size());
  for (const GridLevel& lv : ladder.levels) {
    GridFunction fn = f(lv);
    for (std::size_t i = 0; i < battery.size(); ++i)
      samples[i].push_back(
          {static_cast<double>(lv.n_cells()), pair(fn, battery[i])});
  }
  DistributionEstimate out;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    DistributionAction act;
    act.samples = std::move(samples[i]);
    act.estimate = fit_power_law(act.samples, opts);
    if (act.estimate.classification == Classification::infinite)
      throw Error("project_distribution: action classified infinite; "
                  "not a grid distribution");
    if (act.estimate.classification != Classification::unresolved)
      act.limit = standard_part(act.samples, std::nullopt, opts);
    out.actions.push_back(std::move(act));
  }
  return out;
}

EquivalenceResult equivalent(const GridFamily& f, const GridFamily& g,
                             const TestBattery& battery, const Ladder& ladder,
                             double tol, const FitOptions& opts) {
  std::vector<std::vector<Sample>> samples(battery.size());
  for (const GridLevel& lv : ladder.levels) {
    GridFunction fn = f(lv);
    GridFunction gn = g(lv);
    for (std::size_t i = 0; i < battery.size(); ++i)
      samples[i].push_back({static_cast<double>(lv.n_cells()),
                            pair(fn, battery[i]) - pair(gn, battery[i])});
  }
  EquivalenceResult res;
  bool any_indeterminate = false;
  bool any_refuted = false;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    EquivalenceEvidence ev;
    ev.estimate = fit_power_law(samples[i], opts);
    switch (ev.estimate.classification) {
      case Classification::infinitesimal:
        ev.passed = true;
        break;
      case Classification::finite:
        ev.passed = std::fabs(*ev.estimate.limit) <= tol;
        break;
      case Classification::infinite:
        ev.passed = false;
        break;
      case Classification::unresolved:
        any_indeterminate = true;
        break;
    }
    if (!ev.passed &&
        ev.estimate.classification != Classification::unresolved)
      any_refuted = true;
    res.evidence.push_back(ev);
  }
  res.outcome = any_refuted ? EquivalenceOutcome::refuted
                : any_indeterminate ? EquivalenceOutcome::indeterminate
                                    : EquivalenceOutcome::not_refuted;
  return res;
}

DerivativePairingResidual derivative_pairing_residual(const GridFunction& f,
                                                      const TestFunction& phi,
                                                      int axis) {
  check_support(f, phi);
  GridFunction phi_grid = sample(
      [&phi](const RealPoint& p) { return phi(p); }, f.domain_ptr());
  DerivativePairingResidual out;
  auto sbp = summation_by_parts_residual(f, phi_grid, axis);
  out.adjoint_residual = sbp.residual;
  out.adjoint_scale = sbp.scale;

  GridFunction df = diff(f, axis, Direction::forward);
  MultiIndex e = MultiIndex::unit(axis);
  GridFunction dphi_exact = sample(
      [&phi, &e](const RealPoint& p) { return phi.derivative(p, e); },
      f.domain_ptr());
  out.distributional_residual =
      inner_product(df, phi_grid) + inner_product(f, dphi_exact);
  return out;
}

GridFunction l2_project(const std::function<double(const RealPoint&)>& g,
                        GridDomain::Ptr domain, CellAnchor anchor) {
  const GridLevel& lv = domain->level();
  const int k = domain->dim();
  const double eps = lv.step();
  const double off = anchor == CellAnchor::left ? 0.0 : -0.5;
  GridFunction out(domain);
  const auto& pts = domain->points();
  int nodes_total = 1;
  for (int a = 0; a < k; ++a) nodes_total *= kQuadNodes;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    RealPoint corner = domain->coord(pts[i]);
    double acc = 0.0;
    for (int code = 0; code < nodes_total; ++code) {
      int c = code;
      double w = 1.0;
      RealPoint x{};
      for (int a = 0; a < k; ++a) {
        int j = c % kQuadNodes;
        c /= kQuadNodes;
        x[a] = corner[a] + (off + kQuadNode[j]) * eps;
        w *= kQuadWeight[j];  // weights sum to 1 per axis
      }
      acc += w * g(x);
    }
    if (!std::isfinite(acc))
      throw SamplingError("l2_project: non-finite cell average");
    out[i] = acc;
  }
  return out;
}

GridFunction l2_project(const std::function<double(double)>& g,
                        GridDomain::Ptr domain, CellAnchor anchor) {
  return l2_project([&g](const RealPoint& p) { return g(p[0]); },
                    std::move(domain), anchor);
}

ProjectionDefect l2_projection_defect(
    const std::function<double(const RealPoint&)>& g,
    const std::function<GridDomain::Ptr(const GridLevel&)>& domain_of,
    const Ladder& ladder, const FitOptions& opts) {
  ProjectionDefect out;
  for (const GridLevel& lv : ladder.levels) {
    auto domain = domain_of(lv);
    GridFunction proj = l2_project(g, domain, CellAnchor::left);
    const double eps = lv.step();
    const int k = domain->dim();
    int nodes_total = 1;
    for (int a = 0; a < k; ++a) nodes_total *= kQuadNodes;
    CompensatedSum sq;
    const auto& pts = domain->points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      RealPoint corner = domain->coord(pts[i]);
      for (int code = 0; code < nodes_total; ++code) {
        int c = code;
        double w = 1.0;
        RealPoint x{};
        for (int a = 0; a < k; ++a) {
          int j = c % kQuadNodes;
          c /= kQuadNodes;
          x[a] = corner[a] + kQuadNode[j] * eps;
          w *= kQuadWeight[j];
        }
        double r = g(x) - proj[i];
        sq.add(w * r * r);
      }
    }
    double cell_volume = std::pow(eps, k);
    out.samples.push_back({static_cast<double>(lv.n_cells()),
                           std::sqrt(sq.value() * cell_volume)});
  }
  out.estimate = fit_power_law(out.samples, opts);
  return out;
}

std::vector<ProbeDiagnostic> standard_function(
    const GridFamily& f, const std::vector<RealPoint>& probes,
    const Ladder& ladder, const FitOptions& opts) {
  std::vector<ProbeDiagnostic> out(probes.size());
  for (std::size_t p = 0; p < probes.size(); ++p) out[p].probe = probes[p];

  for (const GridLevel& lv : ladder.levels) {
    GridFunction fn = f(lv);
    const GridDomain& d = fn.domain();
    double n = static_cast<double>(lv.n_cells());
    std::int64_t half = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(0.5 * std::sqrt(n))));
    for (std::size_t p = 0; p < probes.size(); ++p) {
      Index nearest{};
      for (int a = 0; a < d.dim(); ++a)
        nearest[a] = static_cast<std::int64_t>(std::nearbyint(probes[p][a] * n));
      out[p].values.push_back({n, fn.value_at(nearest)});

      // Oscillation over the shrinking window around the probe.
      double lo_v = std::numeric_limits<double>::infinity();
      double hi_v = -lo_v;
      Index idx = nearest;
      std::function<void(int)> scan = [&](int axis) {
        if (axis == d.dim()) {
          auto ord = d.ordinal(idx);
          if (ord >= 0) {
            lo_v = std::min(lo_v, fn[static_cast<std::size_t>(ord)]);
            hi_v = std::max(hi_v, fn[static_cast<std::size_t>(ord)]);
          }
          return;
        }
        for (std::int64_t s = -half; s <= half; ++s) {
          idx[axis] = nearest[axis] + s;
          scan(axis + 1);
        }
        idx[axis] = nearest[axis];
      };
      scan(0);
      out[p].oscillations.push_back({n, hi_v > lo_v ? hi_v - lo_v : 0.0});
    }
  }

  for (auto& diag : out) {
    diag.value_estimate = fit_power_law(diag.values, opts);
    diag.oscillation_estimate = fit_power_law(diag.oscillations, opts);
    diag.s_continuous =
        diag.oscillation_estimate.classification ==
            Classification::infinitesimal ||
        (diag.oscillation_estimate.classification == Classification::finite &&
         std::fabs(diag.oscillation_estimate.limit.value_or(1.0)) == 0.0);
    if (diag.value_estimate.classification == Classification::finite ||
        diag.value_estimate.classification == Classification::infinitesimal)
      diag.standard_value = standard_part(diag.values, std::nullopt, opts);
  }
  return out;
}

}  // namespace gridfn
