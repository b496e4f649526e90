#include "btower/experiments.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace btower {

RateFit rate_fit(const std::vector<std::pair<double, double>>& samples) {
  const int n = int(samples.size());
  if (n < 4) throw std::invalid_argument("rate fit needs at least 4 samples");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const auto [eps, v] = samples[i];
    if (!(v > 0) || !(eps > 0)) throw std::domain_error("rate fit needs positive samples");
    A(i, 0) = std::log(eps);
    A(i, 1) = 1;
    y(i) = std::log(v);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (A(i, 0) == A(j, 0)) throw std::domain_error("rate fit needs distinct abscissae");
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
  const double ss_res = (A * c - y).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  RateFit fit;
  fit.slope = c(0);
  fit.intercept = c(1);
  fit.n_points = n;
  fit.r_squared = ss_tot > 0 ? std::clamp(1 - ss_res / ss_tot, 0.0, 1.0) : (ss_res == 0 ? 1.0 : 0.0);
  return fit;
}

bool ExperimentReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.gated || r.pass; });
}

void ExperimentReport::relative(const std::string& q, double measured, double target, double tol,
                                const std::string& basis) {
  const double err = std::abs(measured - target) / std::abs(target);
  rows.push_back({q, measured, target, tol, Check::Relative, basis, true, err <= tol});
}

void ExperimentReport::below(const std::string& q, double measured, double bound, const std::string& basis) {
  rows.push_back({q, measured, kNoTarget, bound, Check::Below, basis, true, measured < bound});
}

void ExperimentReport::at_least(const std::string& q, double measured, double bound, const std::string& basis) {
  rows.push_back({q, measured, bound, 0, Check::AtLeast, basis, true, measured >= bound});
}

void ExperimentReport::slope(const std::string& q, const RateFit& fit, double target, double tol,
                             const std::string& basis) {
  const double err = std::abs(fit.slope - target) / std::abs(target);
  rows.push_back({q + " slope", fit.slope, target, tol, Check::Slope, basis, true, err <= tol});
  rows.push_back({q + " fit r^2", fit.r_squared, kMinRSquared, 0, Check::AtLeast, "fit quality", true,
                  fit.r_squared >= kMinRSquared});
}

void ExperimentReport::info(const std::string& q, double measured, double target, const std::string& basis) {
  rows.push_back({q, measured, target, 0, Check::Info, basis, false, true});
}

void ExperimentReport::sample(double eps, const std::string& q, double value, double err) {
  samples.push_back({eps, q, value, err});
}

std::vector<double> Sweep::points() const {
  if (!(eps_min > 0 && eps_max > eps_min)) throw std::domain_error("sweep needs 0 < eps_min < eps_max");
  const double decades = std::log10(eps_max / eps_min);
  const int n = samples > 0 ? samples : std::max(6, int(std::lround(2 * decades)) + 1);
  if (n < 2) throw std::domain_error("sweep needs at least two samples");
  std::vector<double> out(n);
  const double lo = std::log(eps_min), hi = std::log(eps_max);
  for (int i = 0; i < n; ++i) out[i] = std::exp(hi + (lo - hi) * double(i) / double(n - 1));
  out.front() = eps_max;
  out.back() = eps_min;
  return out;
}

std::string format_csv_number(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.16e}", v);
}

std::string format_console_number(double v) {
  if (std::isnan(v)) return "-";
  return fmt::format("{:.5e}", v);
}

namespace {

const char* check_name(Check c) {
  switch (c) {
    case Check::Relative:
      return "rel";
    case Check::Below:
      return "below";
    case Check::Slope:
      return "slope";
    case Check::AtLeast:
      return "min";
    case Check::Info:
      return "info";
  }
  return "?";
}

std::string verdict(const ReportRow& r) {
  if (!r.gated) return "INFO";
  return r.pass ? "PASS" : "FAIL";
}

}  // namespace

Bundle render_bundle(const std::vector<ExperimentReport>& reports) {
  Bundle b;
  std::string& s = b.summary;
  s += "bubble tower verification campaign\n";
  int gated = 0, failed = 0;
  for (const auto& rep : reports)
    for (const auto& r : rep.rows)
      if (r.gated) {
        ++gated;
        if (!r.pass) ++failed;
      }
  s += fmt::format("experiments: {}  gated rows: {}  failed rows: {}\n", reports.size(), gated, failed);
  for (const auto& rep : reports) {
    s += fmt::format("\n[{}] {} : {}\n", rep.passed() ? "PASS" : "FAIL", rep.name, rep.title);
    for (const auto& [k, v] : rep.inputs) s += fmt::format("  input {} = {}\n", k, v);
    for (const auto& r : rep.rows) {
      s += fmt::format("  {:<4} {:<44} measured {:>13}  target {:>13}  {:<5} tol {:>11}  ({})\n", verdict(r), r.quantity,
                       format_console_number(r.measured), format_console_number(r.target), check_name(r.check),
                       r.check == Check::Info ? std::string("-") : format_console_number(r.tolerance), r.basis);
    }
    std::string csv = "epsilon,quantity,value,error_estimate\n";
    for (const auto& smp : rep.samples)
      csv += fmt::format("{},{},{},{}\n", format_csv_number(smp.epsilon), smp.quantity, format_csv_number(smp.value),
                         format_csv_number(smp.error_estimate));
    b.csv.emplace_back(rep.name + ".csv", std::move(csv));
  }
  return b;
}

bool emit_report(const std::vector<ExperimentReport>& reports, const std::string& directory) {
  namespace fs = std::filesystem;
  const Bundle b = render_bundle(reports);
  fs::create_directories(directory);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(directory) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(directory) / name).string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + name);
  };
  write("summary.txt", b.summary);
  for (const auto& [name, text] : b.csv) write(name, text);
  return std::all_of(reports.begin(), reports.end(), [](const ExperimentReport& r) { return r.passed(); });
}

}  // namespace btower
