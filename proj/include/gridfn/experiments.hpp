#ifndef GRIDFN_EXPERIMENTS_HPP
#define GRIDFN_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfn/asymptotics.hpp"

namespace gridfn {

// One table of a report: a quantity tracked over the ladder, its
// extrapolated value, and the expected value with its origin:
//   identity    - exact algebraic fact, holds to ulps
//   closed-form - a known limit value
//   oracle      - an independently computed numerical reference
struct CheckRow {
  std::string name;
  std::vector<Sample> per_level;
  std::optional<double> extrapolated;
  std::optional<double> expected;
  std::string provenance;
  double tolerance = 0.0;
  bool passed = false;
  double deviation = 0.0;
  std::string note;
};

struct ExperimentConfig {
  // ladder
  std::int64_t base = 720;
  double window = 1.0;
  int levels = 4;
  int first_exponent = 0;
  int level_stride = 1;
  // battery
  int battery_count = 12;
  std::uint64_t seed = 0;
  double radius_lo_frac = 0.05;
  double radius_hi_frac = 0.4;
  // measures
  int bins = 64;
  double cutoff = 0.0;  // 0 = automatic
  int probes = 17;
  // solver / time stepping
  std::string solver_method = "auto";
  double solver_tol = 1e-10;
  double dt = 1e-3;
  double t_final = 0.1;
  // heaviside exponents
  int m = 2;
  int n = 1;
  // optional override of the default pass tolerance (0 = keep defaults)
  double tol = 0.0;

  Ladder make_ladder() const {
    return Ladder::make(base, window, levels, first_exponent, level_stride);
  }
};

struct ExperimentReport {
  std::string name;
  std::vector<CheckRow> rows;
  double runtime_seconds = 0.0;
  nlohmann::json metadata;

  bool passed() const;
  const CheckRow* find(const std::string& row_name) const;
};

using ExperimentRunner =
    std::function<ExperimentReport(const ExperimentConfig&)>;

struct ExperimentInfo {
  std::string name;
  std::string description;
  ExperimentConfig defaults;
  ExperimentRunner run;
};

const std::vector<ExperimentInfo>& experiment_catalog();
const ExperimentInfo* find_experiment(const std::string& name);

// The individual experiments (catalog entries call these).
ExperimentReport heaviside_product(const ExperimentConfig& cfg);
ExperimentReport rademacher(const ExperimentConfig& cfg);
ExperimentReport concentration(const ExperimentConfig& cfg);
ExperimentReport sign_derivative(const ExperimentConfig& cfg);
ExperimentReport variational(const ExperimentConfig& cfg);
ExperimentReport shift_coherence(const ExperimentConfig& cfg);
ExperimentReport norm_inequality(const ExperimentConfig& cfg);
ExperimentReport poisson_1d(const ExperimentConfig& cfg);
ExperimentReport poisson_2d(const ExperimentConfig& cfg);
ExperimentReport heat_1d(const ExperimentConfig& cfg);
ExperimentReport green_convolution(const ExperimentConfig& cfg);
ExperimentReport l2_projection_defect_report(const ExperimentConfig& cfg);

}  // namespace gridfn

#endif
