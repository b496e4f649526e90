// Command-line front end for the bubble-tower verification library.

#include "btower/config.hpp"
#include "btower/constants.hpp"
#include "btower/experiments.hpp"
#include "btower/records.hpp"
#include "btower/reduced_energy.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace btower;

namespace {

enum Exit { kOk = 0, kExperimentFailure = 1, kConfigError = 2, kSolverFailure = 3 };

struct Flags {
  SettingsOverride o;
  std::string out;
  std::string csv;
};

void add_sweep_flags(CLI::App* cmd, Flags& f) {
  auto num = [&](const char* name, auto& slot, const char* help) {
    cmd->add_option_function<std::decay_t<decltype(*slot)>>(
        name, [&slot](const auto& v) { slot = v; }, help);
  };
  num("--N", f.o.N, "dimension N >= 5");
  num("--k", f.o.k, "number of bubbles");
  num("--eps-min", f.o.eps_min, "smallest hole radius");
  num("--eps-max", f.o.eps_max, "largest hole radius");
  num("--eps-samples", f.o.eps_samples, "sweep samples (0: automatic)");
  num("--grid-nodes", f.o.grid_nodes, "minimum radial grid nodes");
  num("--tol", f.o.tol, "relative quadrature tolerance");
  cmd->add_option("--out", f.out, "bundle directory");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int finish(const std::vector<ExperimentReport>& reports, const std::string& out) {
  const Bundle b = render_bundle(reports);
  std::cout << b.summary;
  if (!out.empty()) emit_report(reports, out);
  for (const auto& r : reports)
    if (!r.passed()) return kExperimentFailure;
  return kOk;
}

int cmd_constants(const Flags& f) {
  ExperimentSettings s = default_settings("constants");
  f.o.apply(s);
  validate(s);
  const auto rep = constants_experiment(s);
  fmt::print("{:<12} {:>24} {:>12} {:>24}\n", "quantity", "value", "error", "target");
  for (const auto& smp : rep.samples) {
    double target = kNoTarget;
    for (const auto& row : rep.rows)
      if (row.quantity == smp.quantity || (smp.quantity == "Gamma0" && row.quantity == "Gamma(0)") ||
          (smp.quantity == "H00" && row.quantity == "H(0,0)"))
        target = row.target;
    fmt::print("{:<12} {:>24.16e} {:>12.3e} {:>24}\n", smp.quantity, smp.value, smp.error_estimate,
               std::isnan(target) ? std::string("-") : fmt::format("{:.16e}", target));
  }
  if (!f.csv.empty()) {
    std::string csv = "quantity,value,error_estimate\n";
    for (const auto& smp : rep.samples)
      csv += smp.quantity + "," + format_csv_number(smp.value) + "," + format_csv_number(smp.error_estimate) + "\n";
    write_file(f.csv, csv);
  }
  return rep.passed() ? kOk : kExperimentFailure;
}

int cmd_robin(const Flags& f) {
  ExperimentSettings s;
  f.o.apply(s);
  validate(s);
  const auto h = robin_profile<double>(s.N);
  fmt::print("N={}\nH(0,0)={:.16e}\ntarget={:.16e}\nprofile: H(r,0) = a + b r^2 with a={:.16e} b={:.16e}\n", s.N, h.a,
             2.0 * (s.N - 2) / s.N, h.a, h.b);
  return std::abs(h.a - 2.0 * (s.N - 2) / s.N) <= 1e-6 * h.a ? kOk : kExperimentFailure;
}

int cmd_critical(const Flags& f, double box) {
  ExperimentSettings s;
  s.box = box;
  f.o.apply(s);
  validate(s);
  const ReducedModel<double> model(make_dims(s.N, s.k), s.quad, s.box);
  const auto cert = find_critical_point(model, {Vec<double>::Ones(s.k), Mat<double>::Zero(s.N, s.k), s.box});
  const auto sig = sigma_hessian_certificate<double>(s.N);
  for (int i = 0; i < s.k; ++i) fmt::print("mu_{:<3} {:.6e}\n", i + 1, cert.point.mu(i));
  fmt::print("lambda   {:.6e}\n", cert.lambda);
  fmt::print("chain residual {:.6e}\n", cert.chain_residual);
  fmt::print("gradient norm  {:.6e}\n", cert.grad_norm);
  fmt::print("off-block max  {:.6e}\n", cert.off_block);
  fmt::print("det(Q)   {:.6e}  target {:.6e}  LU {:.6e}\n", cert.q.det_recursion, cert.q.det_target, cert.q.det_lu);
  fmt::print("det(Q)/lambda^k {:.6e}  target {:.6e}\n", cert.q.det_recursion / std::pow(cert.lambda, s.k),
             double(4 * s.N * s.k - 8 * s.k - 4) / (s.N - 4));
  fmt::print("sigma Hessian diagonal {:.6e}\n", sig(0, 0));
  const std::string record = certificate_record(cert, s.N, s.k);
  if (!f.out.empty())
    write_file(f.out, record);
  else
    std::cout << "\n" << record;
  return kOk;
}

int cmd_project(const Flags& f, double eps, double mu) {
  ExperimentSettings s;
  f.o.apply(s);
  validate(s);
  if (!(eps > 0 && eps < 1) || !(mu > 0)) throw ConfigError("project needs 0 < eps < 1 and mu > 0");
  const auto grid = make_grid<double>(s.N, eps, s.grid);
  const auto sol = project_bubble(mu, grid);
  fmt::print("nodes {}\npanels {}\nChebyshev tail {:.3e}\nresolved {}\n", grid->size(), grid->panels, sol.diag.tail,
             sol.diag.resolved ? "yes" : "no");
  fmt::print("PU(0.5) = {:.16e}\nU(0.5)  = {:.16e}\n", sol.w(0.5), bubble_radial(s.N, mu, 0.5));
  if (!f.csv.empty()) write_file(f.csv, field_csv(sol.w, "PU"));
  return sol.diag.resolved ? kOk : kExperimentFailure;
}

int cmd_single(const std::string& name, const Flags& f) {
  RunConfig cfg = default_campaign();
  return finish({run_experiment(name, cfg.settings_for(name, f.o))}, f.out);
}

int cmd_campaign(const std::string& file, const std::vector<std::string>& only, const Flags& f) {
  RunConfig cfg = file.empty() ? default_campaign() : load_config(file);
  if (!only.empty()) cfg.experiments = only;
  const std::string out = f.out.empty() ? cfg.out : f.out;
  const auto& names = experiment_names();
  for (const auto& e : cfg.experiments)
    if (std::find(names.begin(), names.end(), e) == names.end())
      throw ConfigError("unknown experiment '" + e + "'");
  std::vector<ExperimentSettings> settings;
  for (const auto& e : cfg.experiments) settings.push_back(cfg.settings_for(e, f.o));
  std::vector<ExperimentReport> reports;
  for (std::size_t i = 0; i < settings.size(); ++i) reports.push_back(run_experiment(cfg.experiments[i], settings[i]));
  return finish(reports, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bubble-tower verification: constants, reduced energy, projections and rate experiments"};
  app.require_subcommand(1);

  Flags f;
  auto* constants = app.add_subcommand("constants", "energy constants, Gamma(0) and H(0,0)");
  add_sweep_flags(constants, f);
  constants->add_option("--csv", f.csv, "write the constants as CSV");

  auto* robin = app.add_subcommand("robin", "Robin function of the unit ball");
  add_sweep_flags(robin, f);

  double box = 0.1;
  auto* critical = app.add_subcommand("critical-point", "critical point of the reduced energy with certificate");
  add_sweep_flags(critical, f);
  critical->add_option("--box", box, "box parameter d");

  double eps = 1e-4, mu = 1e-2;
  auto* project = app.add_subcommand("project", "projected bubble on the annulus");
  add_sweep_flags(project, f);
  project->add_option("--eps", eps, "hole radius");
  project->add_option("--mu", mu, "bubble scale");
  project->add_option("--csv", f.csv, "write the field as CSV");

  auto* energy = app.add_subcommand("energy-sweep", "energy expansion experiment");
  add_sweep_flags(energy, f);
  auto* residual = app.add_subcommand("residual-sweep", "residual rate experiment");
  add_sweep_flags(residual, f);
  auto* interactions = app.add_subcommand("interactions", "interaction integral experiment");
  add_sweep_flags(interactions, f);

  std::string config_file;
  std::vector<std::string> only;
  auto* campaign = app.add_subcommand("campaign", "run experiments and write a report bundle");
  add_sweep_flags(campaign, f);
  campaign->add_option("config", config_file, "campaign config file");
  campaign->add_option("--only", only, "run only these experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*constants) return cmd_constants(f);
    if (*robin) return cmd_robin(f);
    if (*critical) return cmd_critical(f, box);
    if (*project) return cmd_project(f, eps, mu);
    if (*energy) return cmd_single("energy", f);
    if (*residual) return cmd_single("residual", f);
    if (*interactions) return cmd_single("interaction", f);
    if (*campaign) return cmd_campaign(config_file, only, f);
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExperimentFailure;
  }
  return kConfigError;
}
