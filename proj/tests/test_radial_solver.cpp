#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btower/radial_solver.hpp"

#include <cmath>

using namespace btower;

namespace {

// Exact projection U + A + B r² + C (ε/r)^{N-2} + D (ε/r)^{N-4}: the four
// coefficients from the Navier conditions at r = ε and r = 1, in long double.
struct ClosedProjection {
  int N;
  long double mu, eps;
  Eigen::Matrix<long double, 4, 1> c;

  ClosedProjection(int N_, long double mu_, long double eps_) : N(N_), mu(mu_), eps(eps_) {
    using M4 = Eigen::Matrix<long double, 4, 4>;
    const long double e2 = std::pow(eps, (long double)(N - 2)), e4 = std::pow(eps, (long double)(N - 4));
    M4 A;
    A << 1, 1, e2, e4,                              //
        1, eps * eps, 1, 1,                         //
        0, 2 * N, 0, 2 * (4 - N) * e4,              //
        0, 2 * N * eps * eps, 0, 2 * (4 - N);       // scaled by ε²
    Eigen::Matrix<long double, 4, 1> rhs(-bubble_radial<long double>(N, mu, 1), -bubble_radial<long double>(N, mu, eps),
                                         -bubble_laplacian_radial<long double>(N, mu, 1),
                                         -eps * eps * bubble_laplacian_radial<long double>(N, mu, eps));
    c = A.fullPivLu().solve(rhs);
  }

  long double operator()(long double r) const {
    const long double y = eps / r;
    return bubble_radial<long double>(N, mu, r) + c(0) + c(1) * r * r + c(2) * std::pow(y, (long double)(N - 2)) +
           c(3) * std::pow(y, (long double)(N - 4));
  }
};

}  // namespace

TEST_CASE("Chebyshev element integrates polynomials exactly") {
  ChebyshevElement<double> el(16);
  CHECK(el.weights.sum() == doctest::Approx(2).epsilon(1e-14));
  const Vec<double> x2 = el.x.array().square();
  CHECK(el.weights.dot(x2) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  const Vec<double> cum = el.cumulative * x2;
  for (int j = 0; j <= 16; ++j) CHECK(std::abs(cum(j) - (std::pow(el.x(j), 3) + 1) / 3) < 1e-14);
  CHECK(el.interpolate(x2, 0.123) == doctest::Approx(0.123 * 0.123).epsilon(1e-13));
}

TEST_CASE("grid layout") {
  const auto g = make_grid<double>(5, 1e-6);
  CHECK(g->r(0) == 1e-6);
  CHECK(g->r(g->size() - 1) == 1);
  CHECK(g->panels >= 24);
  CHECK(g->size() >= 256);
  for (int j = 1; j < g->size(); ++j) CHECK(g->r(j) > g->r(j - 1));
  CHECK_THROWS_AS(make_grid<double>(5, 1.5), std::domain_error);
  CHECK_THROWS_AS(make_grid<double>(5, 1e-3, GridSpec{0, 16, 10}), std::domain_error);
}

TEST_CASE("interpolation and radial integration of smooth fields") {
  const auto g = make_grid<double>(6, 1e-3);
  const auto f = sample(g, [](double r) { return std::cos(3 * r) * r; });
  for (double r : {0.0015, 0.02, 0.37, 0.999}) CHECK(std::abs(f(r) - std::cos(3 * r) * r) < 1e-13);
  const auto vol = radial_integral(*g, [](double) { return 1.0; }, QuadratureEngine{});
  CHECK(vol.value == doctest::Approx(sphere_measure<double>(6) * (1 - std::pow(1e-3, 6)) / 6).epsilon(1e-13));
}

TEST_CASE("Poisson solve reproduces a manufactured solution") {
  for (int N : {5, 7}) {
    const double eps = 1e-5;
    const auto g = make_grid<double>(N, eps);
    // w = -r⁴ + (1+ε²) r² - ε², Δw = -4(N+2) r² + 2N(1+ε²)
    const auto rhs = sample(g, [&](double r) { return -4.0 * (N + 2) * r * r + 2.0 * N * (1 + eps * eps); });
    SolveDiagnostics<double> d;
    const auto w = poisson_solve_radial(rhs, &d);
    double worst = 0;
    for (int j = 0; j < g->size(); ++j) {
      const double r = g->r(j);
      worst = std::max(worst, std::abs(w.values(j) - (-std::pow(r, 4) + (1 + eps * eps) * r * r - eps * eps)));
    }
    CHECK(worst < 1e-12);
    CHECK(d.resolved);
  }
}

TEST_CASE("projected bubble matches the closed-form projection") {
  for (int N : {5, 6, 8}) {
    for (double eps : {1e-2, 1e-4, 1e-8}) {
      for (double mu : {0.5, 1e-2}) {
        if (mu < 10 * eps) continue;
        const auto g = make_grid<double>(N, eps);
        const auto sol = project_bubble(mu, g);
        const ClosedProjection exact(N, mu, eps);
        const double scale = bubble_radial<double>(N, mu, 0.0);
        double worst = 0;
        for (int j = 0; j < g->size(); ++j) worst = std::max(worst, std::abs(sol.w.values(j) - double(exact(g->r(j)))));
        CAPTURE(N);
        CAPTURE(eps);
        CAPTURE(mu);
        CHECK(worst / scale < 1e-12);
        CHECK(sol.diag.resolved);
        CHECK(sol.w.values(0) == 0);
        CHECK(sol.laplacian.values(g->size() - 1) == 0);
      }
    }
  }
}

TEST_CASE("projected kernel is the mu-derivative of the projection") {
  const int N = 5;
  const double eps = 1e-5, mu = 3e-2, h = 1e-4;
  const auto g = make_grid<double>(N, eps);
  const auto pz = project_z0(mu, g).w;
  const ClosedProjection up(N, mu * (1 + h), eps), dn(N, mu * (1 - h), eps);
  const double scale = std::abs(z0_radial<double>(N, mu, 0.0));
  double worst = 0;
  for (int j = 0; j < g->size(); j += 7) {
    const double fd = double((up(g->r(j)) - dn(g->r(j))) / (2 * mu * h));
    worst = std::max(worst, std::abs(pz.values(j) - fd));
  }
  CHECK(worst / scale < 1e-6);
}

TEST_CASE("Robin profile of the ball") {
  for (int N : {5, 6, 7, 8, 11}) {
    for (double R : {1.0, 2.0}) {
      const auto h = robin_profile<double>(N, R);
      CHECK(h.a == doctest::Approx((2.0 * N - 4) / N * std::pow(R, 4.0 - N)).epsilon(1e-14));
      CHECK(h.b == doctest::Approx((4.0 - N) * std::pow(R, 2.0 - N) / N).epsilon(1e-14));
      // boundary data of the regular part
      CHECK(h(R) == doctest::Approx(std::pow(R, 4.0 - N)).epsilon(1e-14));
    }
  }
}

TEST_CASE("expansion of the projection in the concentration regime") {
  const int N = 5;
  const double eps = 1e-7, mu = 1e-2;
  const auto g = make_grid<double>(N, eps);
  const auto e = expansion_decompose(mu, g);
  CHECK(e.regime_ok);
  CHECK(std::abs(e.remainder(0.3)) < 1e-3 * std::abs(e.robin_term(0.3)));
  CHECK_FALSE(expansion_decompose(1e-6, g).regime_ok);
}
