#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btower/reduced_energy.hpp"

#include <cmath>
#include <random>

using namespace btower;

namespace {

using Vd = Vec<double>;
using Md = Mat<double>;

Vd nu_probe(int k) {
  Vd nu(k);
  for (int i = 0; i < k; ++i) nu(i) = 0.9 + 0.35 * i;
  return nu;
}

}  // namespace

TEST_CASE("analytic nu-gradient and Hessian match finite differences") {
  for (int N = 5; N <= 9; ++N)
    for (int k = 1; k <= 3; ++k) {
      const ReducedModel<double> m(make_dims(N, k));
      const Vd nu = nu_probe(k);
      const Md sigma = Md::Zero(N, k);
      const Vd g = m.gradient_nu(nu, sigma);
      const Md H = m.hessian_nu(nu, sigma);
      for (int i = 0; i < k; ++i) {
        const double h = 1e-5 * nu(i);
        Vd up = nu, dn = nu;
        up(i) += h;
        dn(i) -= h;
        const double fd = (m.value(up, sigma) - m.value(dn, sigma)) / (2 * h);
        CHECK(std::abs(fd - g(i)) <= 1e-6 * std::max(1.0, std::abs(g(i))));
        const Vd col = (m.gradient_nu(up, sigma) - m.gradient_nu(dn, sigma)) / (2 * h);
        for (int j = 0; j < k; ++j) CHECK(std::abs(col(j) - H(j, i)) <= 1e-6 * std::max(1.0, std::abs(H(j, i))));
      }
    }
}

TEST_CASE("full gradient away from the centre") {
  const int N = 5, k = 2;
  const ReducedModel<double> m(make_dims(N, k));
  const Vd nu = nu_probe(k);
  Md sigma = Md::Zero(N, k);
  sigma(0, 0) = 0.3;
  sigma(2, 1) = -0.2;
  const Vd g = m.gradient(nu, sigma);
  for (int c = 0; c < N * k; ++c) {
    const double h = 1e-4;
    Md up = sigma, dn = sigma;
    up(c % N, c / N) += h;
    dn(c % N, c / N) -= h;
    const double fd = (m.value(nu, up) - m.value(nu, dn)) / (2 * h);
    CHECK(std::abs(fd - g(k + c)) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("interaction kernel table") {
  const int N = 5;
  const GammaCache<double> cache(N, 100.0);
  for (double a : {0.05, 0.4, 1.0, 3.7, 20.0, 95.0}) {
    const double direct = gamma_kernel<double>(N, a).value;
    CHECK(cache(a) == doctest::Approx(direct).epsilon(1e-9));
  }
  // decreasing, with Γ(a)·a^{N-4} → c2 for large a
  double prev = cache(0.0);
  for (double a = 0.5; a < 100; a *= 2) {
    CHECK(cache(a) < prev);
    prev = cache(a);
  }
  const double c2 = energy_constants<double>(make_dims(N, 1)).c2;
  CHECK(std::abs(cache(100.0) * 100.0 / c2 - 1) < 1e-3);
  CHECK_THROWS_AS(gamma_kernel<double>(N, -1.0), std::domain_error);
}

TEST_CASE("tridiagonal determinant recursion") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int n = 1; n <= 6; ++n) {
    Md T = Md::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      T(i, i) = u(rng);
      if (i + 1 < n) {
        T(i, i + 1) = u(rng);
        T(i + 1, i) = u(rng);
      }
    }
    CHECK(tridiagonal_det(T) == doctest::Approx(T.fullPivLu().determinant()).epsilon(1e-12));
  }
}

TEST_CASE("k = 1 minimizer in closed form") {
  const ReducedModel<double> m(make_dims(5, 1));
  const auto cert = find_critical_point(m, {Vd::Ones(1), Md::Zero(5, 1), 0.01});
  CHECK(std::pow(cert.nu(0), 8) == doctest::Approx(75.0 / 8.0).epsilon(1e-12));
  CHECK(cert.point.mu(0) == doctest::Approx(1.7498178).epsilon(1e-7));
  CHECK(cert.lambda == doctest::Approx(6.3159).epsilon(1e-4));
  CHECK(cert.q.det_recursion == doctest::Approx(8 * cert.lambda).epsilon(1e-12));
  CHECK(cert.q.det_recursion == doctest::Approx(50.53).epsilon(1e-3));
  CHECK(cert.grad_norm < 1e-10);
  CHECK(cert.off_block < 1e-7);
}

TEST_CASE("k = 2 balance chain") {
  const ReducedModel<double> m(make_dims(5, 2));
  const auto cert = find_critical_point(m, {Vd::Ones(2), Md::Zero(5, 2), 0.01});
  CHECK(cert.chain_residual < 1e-8);
  CHECK(cert.point.mu(0) == doctest::Approx(1.12121).epsilon(1e-5));
  CHECK(cert.point.mu(1) == doctest::Approx(2.02968).epsilon(1e-5));
  CHECK(cert.lambda == doctest::Approx(4.04697).epsilon(1e-5));
  CHECK(cert.off_block < 1e-7);
  // ±20% starts
  for (double f : {0.8, 1.2}) {
    NewtonOptions opt;
    opt.full_certificate = false;
    Vd mu0 = cert.point.mu;
    mu0(0) *= f;
    mu0(1) *= 2 - f;
    const auto other = find_critical_point(m, {mu0, Md::Zero(5, 2), 0.01}, opt);
    CHECK((other.point.mu - cert.point.mu).norm() < 1e-9);
  }
}

TEST_CASE("Q is the nu-scaled Hessian and its determinant is closed form") {
  for (int N = 5; N <= 9; ++N)
    for (int k = 1; k <= 4; ++k) {
      const ReducedModel<double> m(make_dims(N, k));
      NewtonOptions opt;
      opt.full_certificate = false;
      const auto cert = find_critical_point(m, {Vd::Ones(k), Md::Zero(N, k), 0.01}, opt);
      const Md scaled = cert.nu.array().square().matrix().asDiagonal() * cert.hessian_nu;
      CHECK((scaled - cert.q.Q).cwiseAbs().maxCoeff() <= 1e-8 * cert.q.Q.cwiseAbs().maxCoeff());
      CHECK(cert.q.det_recursion == doctest::Approx(cert.q.det_target).epsilon(1e-8));
      CHECK(cert.q.det_recursion == doctest::Approx(cert.q.det_lu).epsilon(1e-10));
    }
  const ReducedModel<double> m(make_dims(7, 3));
  NewtonOptions opt;
  opt.full_certificate = false;
  const auto cert = find_critical_point(m, {Vd::Ones(3), Md::Zero(7, 3), 0.01}, opt);
  CHECK(cert.q.det_recursion / std::pow(cert.lambda, 3) == doctest::Approx(56.0 / 3).epsilon(1e-9));
}

TEST_CASE("coercive on the nu-block") {
  for (int k = 1; k <= 2; ++k) {
    const int N = 5;
    const double d = 0.05;
    const ReducedModel<double> m(make_dims(N, k), {}, d);
    NewtonOptions opt;
    opt.full_certificate = false;
    const auto cert = find_critical_point(m, {Vd::Ones(k), Md::Zero(N, k), d}, opt);
    const double interior = m.value(cert.nu, Md::Zero(N, k));
    // boundary of the μ-box [d, 1/d]^k
    const int n = 9;
    for (int i = 0; i < std::pow(n, k); ++i) {
      Vd mu(k);
      int code = i;
      bool boundary = false;
      for (int j = 0; j < k; ++j) {
        const int idx = code % n;
        code /= n;
        mu(j) = d * std::pow(1 / (d * d), double(idx) / (n - 1));
        boundary = boundary || idx == 0 || idx == n - 1;
      }
      if (boundary) CHECK(m.value(nu_from_mu<double>(N, mu), Md::Zero(N, k)) > interior);
    }
  }
}

TEST_CASE("Robin scaling moves the minimizer as predicted") {
  for (int N : {5, 6, 7}) {
    const double R = 2;
    CHECK(robin_function<double>(N, R) == doctest::Approx(std::pow(R, 4.0 - N) * robin_function<double>(N)).epsilon(1e-14));
    // ν̂^{q+2} = q f(0)/(2 c2 H): shrinking H by R^{4-N} grows ν̂^{q+2} by R^{N-4}
    const ReducedModel<double> m(make_dims(N, 1));
    const double q = m.q(), f0 = m.f_of(Vd::Zero(N));
    const double unit = q * f0 / (2 * m.constants().c2 * robin_function<double>(N));
    const double big = q * f0 / (2 * m.constants().c2 * robin_function<double>(N, R));
    CHECK(big / unit == doctest::Approx(std::pow(R, N - 4.0)).epsilon(1e-14));
  }
}

TEST_CASE("Newton failure modes are distinct") {
  const ReducedModel<double> m(make_dims(5, 2), {}, 0.01);
  Vd bad(2);
  bad << 1e-3, 1.0;
  try {
    find_critical_point(m, {bad, Md::Zero(5, 2), 0.01});
    FAIL("expected a box collision");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverFailure::BoxCollision);
  }
  NewtonOptions opt;
  opt.max_iterations = 1;
  Vd far(2);
  far << 50.0, 0.02;
  try {
    find_critical_point(m, {far, Md::Zero(5, 2), 0.01}, opt);
    FAIL("expected a failure");
  } catch (const SolverError& e) {
    CHECK(e.kind() != SolverFailure::SingularStep);
  }
  CHECK_THROWS_AS(find_critical_point(m, {Vd::Ones(3), Md::Zero(5, 3), 0.01}), std::invalid_argument);
}

TEST_CASE("hole-term Hessian at the centre by direct differentiation") {
  // ΔU·U = α²[-4a s^{-2a-1} - 4a(a+1) s^{-2a-2}], s = 1+|x|², a = (N-4)/2;
  // ∂²_i s^{-m} at 0 is -2m, giving α²(N-4)(2N²-4N-4) on the diagonal.
  for (int N = 5; N <= 8; ++N) {
    const auto H = sigma_hessian_certificate<double>(N);
    const double a = (N - 4) / 2.0, alpha2 = std::pow(alpha_N<double>(N), 2);
    const double direct = alpha2 * (8 * a * (2 * a + 1) + 16 * a * (a + 1) * (a + 1));
    CHECK(direct == doctest::Approx(alpha2 * (N - 4) * (2.0 * N * N - 4 * N - 4)).epsilon(1e-14));
    for (int i = 0; i < N; ++i) {
      CHECK(H(i, i) == doctest::Approx(direct).epsilon(1e-8));
      for (int j = 0; j < N; ++j)
        if (i != j) CHECK(std::abs(H(i, j)) < 1e-8);
    }
  }
}

TEST_CASE("interaction Hessian at the centre is a nonzero multiple of the identity") {
  const ReducedModel<double> m(make_dims(5, 2));
  const auto G = g_hessian_at_origin(m);
  CHECK(std::abs(G(0, 0)) > 1e-3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(std::abs(G(i, j) - (i == j ? G(0, 0) : 0.0)) < 1e-6 * std::abs(G(0, 0)));
}

TEST_CASE("box feasibility") {
  ReducedPoint<double> p{Vd::Ones(2), Md::Zero(5, 2), 0.1};
  CHECK(p.feasible());
  p.mu(1) = 11;
  CHECK_FALSE(p.feasible());
  p.mu(1) = 1;
  p.sigma(0, 0) = 10.5;
  CHECK_FALSE(p.feasible());
}
