#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btower/config.hpp"
#include "btower/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace btower;

namespace {

std::vector<std::pair<double, double>> synthetic(double (*f)(double)) {
  std::vector<std::pair<double, double>> s;
  for (int i = 2; i <= 7; ++i) s.emplace_back(std::pow(10.0, -i), f(std::pow(10.0, -i)));
  return s;
}

}  // namespace

TEST_CASE("rate fit on exact power laws") {
  const auto fit = rate_fit(synthetic([](double e) { return 3 * std::pow(e, 0.75); }));
  CHECK(std::abs(fit.slope - 0.75) < 1e-12);
  CHECK(std::abs(fit.intercept - std::log(3.0)) < 1e-10);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.n_points == 6);

  const auto perturbed = rate_fit(synthetic([](double e) { return std::pow(e, 0.3) * (1 + 0.1 * std::pow(e, 0.2)); }));
  CHECK(std::abs(perturbed.slope - 0.3) < 0.02);

  const auto flat = rate_fit(synthetic([](double) { return 2.0; }));
  CHECK(std::abs(flat.slope) < 1e-12);
}

TEST_CASE("rate fit rejects degenerate input") {
  CHECK_THROWS_AS(rate_fit({{1e-2, 1}, {1e-3, 1}, {1e-4, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(rate_fit({{1e-2, 1}, {1e-3, -1}, {1e-4, 1}, {1e-5, 1}}), std::domain_error);
  CHECK_THROWS_AS(rate_fit({{1e-2, 1}, {1e-2, 2}, {1e-4, 1}, {1e-5, 1}}), std::domain_error);
}

TEST_CASE("sweep points are geometric and hit both ends") {
  Sweep s{1e-6, 1e-2, 0};
  const auto p = s.points();
  REQUIRE(p.size() == 9);
  CHECK(p.front() == 1e-2);
  CHECK(p.back() == 1e-6);
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i - 1] / p[i] == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
  CHECK(Sweep{1e-4, 1e-3, 0}.points().size() == 6);
  CHECK(Sweep{1e-4, 1e-3, 11}.points().size() == 11);
  CHECK_THROWS_AS((Sweep{1e-3, 1e-4, 0}.points()), std::domain_error);
}

TEST_CASE("report rows gate the verdict") {
  ExperimentReport rep{"demo", "demo", {}, {}, {}};
  rep.relative("a", 1.001, 1.0, 1e-2, "closed form");
  rep.info("b", 7.0);
  CHECK(rep.passed());
  rep.below("c", 2.0, 1.0, "bound");
  CHECK_FALSE(rep.passed());
  CHECK(rep.rows[1].pass);
  CHECK_FALSE(rep.rows[1].gated);

  ExperimentReport s{"fit", "fit", {}, {}, {}};
  s.slope("q", rate_fit(synthetic([](double e) { return std::pow(e, 0.5); })), 0.5, 0.1, "rate");
  REQUIRE(s.rows.size() == 2);
  CHECK(s.rows[0].quantity == "q slope");
  CHECK(s.rows[1].quantity == "q fit r^2");
  CHECK(s.passed());
}

TEST_CASE("bundle rendering and emission") {
  CHECK(render_bundle({}).csv.empty());
  ExperimentReport rep{"demo", "demo", {{"N", "5"}}, {}, {}};
  rep.below("c", 2.0, 1.0, "bound");
  rep.sample(1e-3, "x", 0.25, 1e-12);
  const Bundle b = render_bundle({rep});
  REQUIRE(b.csv.size() == 1);
  CHECK(b.csv[0].first == "demo.csv");
  CHECK(b.csv[0].second.rfind("epsilon,quantity,value,error_estimate\n", 0) == 0);
  CHECK(b.csv[0].second.find("x,2.5000000000000000e-01") != std::string::npos);
  CHECK(b.summary.find("[FAIL] demo") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "btower-test-bundle";
  std::filesystem::remove_all(dir);
  CHECK_FALSE(emit_report({rep}, dir.string()));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  CHECK(std::filesystem::exists(dir / "demo.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("number formats") {
  CHECK(format_csv_number(1.0) == "1.0000000000000000e+00");
  CHECK(format_csv_number(kNoTarget).empty());
  CHECK(format_console_number(kNoTarget) == "-");
}

TEST_CASE("config parsing and precedence") {
  const RunConfig c = parse_config(
      "[campaign]\nexperiments = constants, energy\nout = bundle\n"
      "[defaults]\ntol = 1e-9\nN = 6\n"
      "[energy]\nN = 5\neps_samples = 7\nextended = no\n");
  CHECK(c.experiments == std::vector<std::string>{"constants", "energy"});
  CHECK(c.out == "bundle");
  const auto e = c.settings_for("energy");
  CHECK(e.N == 5);
  CHECK(e.sweep.samples == 7);
  CHECK_FALSE(e.extended);
  CHECK(e.quad.rel_tol == 1e-9);
  CHECK(e.quad.abs_tol <= 1e-11);
  CHECK(c.settings_for("constants").N == 6);

  SettingsOverride cli;
  cli.N = 7;
  CHECK(c.settings_for("energy", cli).N == 7);

  SettingsOverride a, b;
  a.N = 5;
  a.k = 2;
  b.k = 3;
  const auto m = a.merged(b);
  CHECK(*m.N == 5);
  CHECK(*m.k == 3);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("[campaign]\nexperiments = bogus\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nowhere]\nN = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[defaults]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[defaults]\nN = five\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[defaults]\nN = 5x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[defaults]\nN = 5\n[defaults]\nk = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[defaults]\nN = 4\n").settings_for("constants"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/campaign.ini"), ConfigError);

  ExperimentSettings s;
  s.sweep = {1e-3, 1e-4, 0};
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = ExperimentSettings{};
  s.box = 1.5;
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = ExperimentSettings{};
  s.sweep.samples = 3;
  CHECK_THROWS_AS(validate(s), ConfigError);
  CHECK_NOTHROW(validate(ExperimentSettings{}));
}

TEST_CASE("every named experiment has defaults that validate") {
  for (const auto& name : experiment_names()) CHECK_NOTHROW(validate(default_settings(name)));
  CHECK_THROWS(run_experiment("bogus", ExperimentSettings{}));
}

TEST_CASE("certified scales for one bubble") {
  const auto mu = certified_scales(5, 1, QuadratureEngine{}, 0.1);
  REQUIRE(mu.size() == 1);
  CHECK(mu[0] == doctest::Approx(1.7498178).epsilon(1e-7));
}
