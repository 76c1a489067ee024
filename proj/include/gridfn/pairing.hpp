#ifndef GRIDFN_PAIRING_HPP
#define GRIDFN_PAIRING_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gridfn/asymptotics.hpp"
#include "gridfn/grid.hpp"
#include "gridfn/testfn.hpp"

namespace gridfn {

// A grid function per ladder rung.
using GridFamily = std::function<GridFunction(const GridLevel&)>;

// ⟨f, φ|_Λ⟩ with φ sampled pointwise on f's grid. Support must sit inside
// the window.
double pair(const GridFunction& f, const TestFunction& phi);

struct DistributionAction {
  std::vector<Sample> samples;      // ⟨f_N, φ⟩ per rung
  AsymptoticEstimate estimate;
  std::optional<double> limit;      // standard part when classified
};

struct DistributionEstimate {
  std::vector<DistributionAction> actions;  // one per battery member
  bool all_finite() const;
};

// Standard parts of ⟨f_N, φ⟩ for every battery member. Throws Error when an
// action is classified infinite (f is then not a grid distribution).
DistributionEstimate project_distribution(const GridFamily& f,
                                          const TestBattery& battery,
                                          const Ladder& ladder,
                                          const FitOptions& opts = {});

enum class EquivalenceOutcome { not_refuted, refuted, indeterminate };

struct EquivalenceEvidence {
  AsymptoticEstimate estimate;  // of ⟨f_N - g_N, φ⟩
  bool passed = false;
};

// The battery can refute equivalence, never prove it; "true" means not
// refuted at this battery and tolerance.
struct EquivalenceResult {
  EquivalenceOutcome outcome = EquivalenceOutcome::indeterminate;
  std::vector<EquivalenceEvidence> evidence;
  bool equivalent() const { return outcome == EquivalenceOutcome::not_refuted; }
};

EquivalenceResult equivalent(const GridFamily& f, const GridFamily& g,
                             const TestBattery& battery, const Ladder& ladder,
                             double tol = 1e-6, const FitOptions& opts = {});

struct DerivativePairingResidual {
  // ⟨Δf, φ⟩ + ⟨f(·+ε), Δφ⟩ over the grid: zero up to roundoff.
  double adjoint_residual = 0.0;
  double adjoint_scale = 0.0;
  // ⟨Δf, φ⟩ + ⟨f, φ'⟩ with the analytic derivative: vanishes over the ladder.
  double distributional_residual = 0.0;
};

DerivativePairingResidual derivative_pairing_residual(const GridFunction& f,
                                                      const TestFunction& phi,
                                                      int axis = 0);

enum class CellAnchor {
  left,     // cell [y, y+ε]^k — matches the step extension f̃
  centered  // cell [y-ε/2, y+ε/2]^k
};

// Per-cell average of g by fixed-order tensor Gauss-Legendre quadrature.
GridFunction l2_project(const std::function<double(const RealPoint&)>& g,
                        GridDomain::Ptr domain,
                        CellAnchor anchor = CellAnchor::left);
GridFunction l2_project(const std::function<double(double)>& g,
                        GridDomain::Ptr domain,
                        CellAnchor anchor = CellAnchor::left);

// ‖g - step extension of l2_project(g)‖_2 per rung; infinitesimal for
// square-integrable g.
struct ProjectionDefect {
  std::vector<Sample> samples;
  AsymptoticEstimate estimate;
};
ProjectionDefect l2_projection_defect(
    const std::function<double(const RealPoint&)>& g,
    const std::function<GridDomain::Ptr(const GridLevel&)>& domain_of,
    const Ladder& ladder, const FitOptions& opts = {});

struct ProbeDiagnostic {
  RealPoint probe{};
  std::vector<Sample> values;        // f at the nearest grid point per rung
  std::vector<Sample> oscillations;  // max-min over the shrinking window
  AsymptoticEstimate value_estimate;
  AsymptoticEstimate oscillation_estimate;
  std::optional<double> standard_value;
  bool s_continuous = false;
};

// Standard part of f at probe points plus an S-continuity diagnostic
// (oscillation over a window of width N^-1/2 must vanish).
std::vector<ProbeDiagnostic> standard_function(
    const GridFamily& f, const std::vector<RealPoint>& probes,
    const Ladder& ladder, const FitOptions& opts = {});

}  // namespace gridfn

#endif
