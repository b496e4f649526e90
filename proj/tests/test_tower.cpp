#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btower/tower.hpp"

#include <cmath>
#include <numbers>

using namespace btower;

namespace {

using Vd = Vec<double>;

Tower<double> build(int N, int k, double eps, Vd mu) {
  const auto cfg = tower_scales(make_dims(N, k), eps, mu);
  return assemble_tower(cfg, make_grid<double>(N, eps));
}

}  // namespace

TEST_CASE("tower scales follow the interlacing exponents") {
  // N = 5, k = 2: θ = 6/5, exponents 0.3 and 0.9
  const auto cfg = tower_scales<double>(make_dims(5, 2), 1e-4, Vd::Ones(2));
  CHECK(cfg.scales(0) == doctest::Approx(std::pow(10.0, -1.2)).epsilon(1e-13));
  CHECK(cfg.scales(1) == doctest::Approx(std::pow(10.0, -3.6)).epsilon(1e-13));

  Vd mu(2);
  mu << 1.0, 0.1;
  CHECK_THROWS_AS(tower_scales<double>(make_dims(5, 2), 0.5, mu), ScaleOrderError);
  CHECK_THROWS_AS(tower_scales<double>(make_dims(5, 2), 1e-4, Vd::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(tower_scales<double>(make_dims(5, 2), 1.5, Vd::Ones(2)), std::domain_error);
}

TEST_CASE("annuli tile the punctured ball") {
  const auto cfg = tower_scales<double>(make_dims(6, 3), 1e-6, Vd::Ones(3));
  const auto a = annulus_decomposition(cfg);
  REQUIRE(a.count() == 3);
  CHECK(a.outer(1) == 0.5);
  CHECK(a.inner(3) == 1e-6);
  for (int l = 1; l <= a.count(); ++l) {
    CHECK(a.inner(l) < a.outer(l));
    CHECK(a.inner(l) < cfg.scales(l - 1));
    CHECK(cfg.scales(l - 1) < a.outer(l));
    if (l > 1) CHECK(a.outer(l) == a.inner(l - 1));
  }
}

TEST_CASE("Lq norm of a constant") {
  const double eps = 1e-3;
  const auto grid = make_grid<double>(5, eps);
  const auto one = sample(grid, [](double) { return 1.0; });
  const double sphere = 8 * std::numbers::pi * std::numbers::pi / 3;
  const auto n = lq_norm(one, 2.0);
  CHECK(n.value == doctest::Approx(std::sqrt(sphere * (1 - std::pow(eps, 5)) / 5)).epsilon(1e-10));
  CHECK_THROWS_AS(lq_norm(one, 0.5), std::domain_error);
}

TEST_CASE("single bubble has no interaction residual") {
  const auto t = build(5, 1, 1e-4, Vd::Constant(1, 1.75));
  const auto w1 = residual_w1(t);
  CHECK(w1.value == 0);
  CHECK(residual_w2(t).value > 0);
}

TEST_CASE("two-bubble tower changes sign once") {
  const auto t = build(5, 2, 1e-6, Vd::Ones(2));
  REQUIRE(t.resolved());
  // boundary nodes are exactly zero and carry no sign
  int changes = 0, last = 0;
  for (int i = 0; i < t.v.values.size(); ++i) {
    const double x = t.v.values(i);
    const int s = (x > 0) - (x < 0);
    if (s != 0 && last != 0 && s != last) ++changes;
    if (s != 0) last = s;
  }
  CHECK(changes == 1);
  // the inner bubble dominates near its own scale
  CHECK(t.value(t.cfg.scales(1)) < 0);
  CHECK(t.value(t.cfg.scales(0)) > 0);
}

TEST_CASE("Navier energy pairing is symmetric and equals the Dirichlet form") {
  const auto t = build(5, 2, 1e-6, Vd::Ones(2));
  const double p = t.p();
  auto pairs = [&](double r) {
    Eigen::Vector4d out;
    out << std::pow(t.bubble(0, r), p) * t.projected(1, r), std::pow(t.bubble(1, r), p) * t.projected(0, r),
        std::pow(t.bubble(0, r), p) * t.projected(0, r), std::pow(t.projections[0].laplacian(r), 2);
    return out;
  };
  const auto res = radial_integral(*t.grid, pairs, QuadratureEngine{}, t.breakpoints());
  CHECK(res.value(0) == doctest::Approx(res.value(1)).epsilon(1e-6));
  CHECK(res.value(2) == doctest::Approx(res.value(3)).epsilon(1e-6));
}

TEST_CASE("energy leading term and its approach") {
  const int N = 5;
  const auto c = energy_constants<double>(make_dims(N, 1));
  const double leading = 2.0 / N * std::pow(105.0, 1.25) * std::pow(std::numbers::pi, 3) / 32;
  double prev = 1e300;
  for (double eps : {1e-3, 1e-5, 1e-7}) {
    const auto t = build(N, 1, eps, Vd::Constant(1, 1.75));
    const auto e = tower_energy(t, c);
    CHECK(e.leading == doctest::Approx(leading).epsilon(1e-10));
    CHECK(e.excess > 0);
    CHECK(e.excess < prev);
    prev = e.excess;
    // split pieces add back up to the excess
    CHECK(e.outside + e.i2 + e.i3 == doctest::Approx(e.excess).epsilon(1e-5));
  }
}
