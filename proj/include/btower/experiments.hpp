#ifndef BTOWER_EXPERIMENTS_HPP
#define BTOWER_EXPERIMENTS_HPP

#include "btower/quadrature.hpp"
#include "btower/radial_solver.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace btower {

struct RateFit {
  double slope = 0;
  double intercept = 0;  // log of the fitted constant
  double r_squared = 0;
  int n_points = 0;
};

// Least-squares line through (log ε, log value).
RateFit rate_fit(const std::vector<std::pair<double, double>>& samples);

inline constexpr double kMinRSquared = 0.99;
inline const double kNoTarget = std::numeric_limits<double>::quiet_NaN();

enum class Check {
  Relative,    // |measured - target| <= tolerance·|target|
  Below,       // measured < tolerance
  Slope,       // relative slope error within tolerance
  AtLeast,     // measured >= target
  Info         // reported, never gated
};

struct ReportRow {
  std::string quantity;
  double measured = 0;
  double target = kNoTarget;
  double tolerance = 0;
  Check check = Check::Info;
  std::string basis;
  bool gated = true;
  bool pass = true;
};

struct SweepSample {
  double epsilon = kNoTarget;
  std::string quantity;
  double value = 0;
  double error_estimate = 0;
};

struct ExperimentReport {
  std::string name;
  std::string title;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<ReportRow> rows;
  std::vector<SweepSample> samples;

  bool passed() const;
  void relative(const std::string& q, double measured, double target, double tol, const std::string& basis);
  void below(const std::string& q, double measured, double bound, const std::string& basis);
  void at_least(const std::string& q, double measured, double bound, const std::string& basis);
  // slope row plus its fit-quality row
  void slope(const std::string& q, const RateFit& fit, double target, double tol, const std::string& basis);
  void info(const std::string& q, double measured, double target = kNoTarget, const std::string& basis = "diagnostic");
  void sample(double eps, const std::string& q, double value, double err = 0);
};

struct Sweep {
  double eps_min = 1e-6;
  double eps_max = 1e-3;
  int samples = 0;  // 0: max(6, 2·decades + 1)

  // geometric, from eps_max down to eps_min
  std::vector<double> points() const;
};

struct ExperimentSettings {
  int N = 5;
  int k = 1;
  double box = 0.1;
  Sweep sweep;
  GridSpec grid;
  QuadratureEngine quad;
  bool extended = true;  // ungated diagnostic sweeps
};

// Defaults for the named experiment; callers override individual fields.
ExperimentSettings default_settings(const std::string& experiment);

ExperimentReport constants_experiment(const ExperimentSettings& s);
ExperimentReport robin_experiment(const ExperimentSettings& s);
ExperimentReport entire_equation_experiment(const ExperimentSettings& s);
ExperimentReport critical_point_experiment(const ExperimentSettings& s);
ExperimentReport determinant_experiment(const ExperimentSettings& s);
ExperimentReport sigma_hessian_experiment(const ExperimentSettings& s);
ExperimentReport remainder_experiment(const ExperimentSettings& s);
ExperimentReport energy_expansion_experiment(const ExperimentSettings& s);
ExperimentReport residual_experiment(const ExperimentSettings& s);
ExperimentReport interaction_integral_experiment(const ExperimentSettings& s);
ExperimentReport projection_defect_experiment(const ExperimentSettings& s);
ExperimentReport pz_scaling_experiment(const ExperimentSettings& s);

// Names in campaign order.
const std::vector<std::string>& experiment_names();
ExperimentReport run_experiment(const std::string& name, const ExperimentSettings& s);

// Critical scales μ̂ for (N, k) from Newton on the ν-block.
std::vector<double> certified_scales(int N, int k, const QuadratureEngine& quad, double box);

struct Bundle {
  std::string summary;
  std::vector<std::pair<std::string, std::string>> csv;  // file name, contents
};

Bundle render_bundle(const std::vector<ExperimentReport>& reports);
// Writes summary.txt and one CSV per experiment; returns true when every gated row passed.
bool emit_report(const std::vector<ExperimentReport>& reports, const std::string& directory);

std::string format_csv_number(double v);
std::string format_console_number(double v);

}  // namespace btower

#endif
