#ifndef BTOWER_BUBBLE_HPP
#define BTOWER_BUBBLE_HPP

#include "btower/constants.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace btower {

template <class S = double>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S = double>
struct BubbleParams {
  S mu = 1;
  Vec<S> xi;
};

// Radial forms in rho = |x - xi|. All closed form.

template <class S>
S bubble_radial(int N, S mu, S rho) {
  const S a = S(N - 4) / 2;
  return alpha_N<S>(N) * std::pow(mu / (mu * mu + rho * rho), a);
}

// Δ s^{-b} for s = mu² + rho², as a radial function in R^N.
template <class S>
S laplacian_of_power(int N, S mu, S rho, S b) {
  const S s = mu * mu + rho * rho;
  return 2 * b * (2 * b + 2 - N) * std::pow(s, -b - 1) - 4 * b * (b + 1) * mu * mu * std::pow(s, -b - 2);
}

template <class S>
S bubble_laplacian_radial(int N, S mu, S rho) {
  const S a = S(N - 4) / 2;
  return alpha_N<S>(N) * std::pow(mu, a) * laplacian_of_power(N, mu, rho, a);
}

template <class S>
S bubble_bilaplacian_radial(int N, S mu, S rho) {
  // ΔU = αμ^a(-4a s^{-a-1} - 4a(a+1)μ² s^{-a-2}); apply the power rule again
  const S a = S(N - 4) / 2;
  const S lap1 = laplacian_of_power(N, mu, rho, a + 1);
  const S lap2 = laplacian_of_power(N, mu, rho, a + 2);
  return alpha_N<S>(N) * std::pow(mu, a) * (-4 * a * lap1 - 4 * a * (a + 1) * mu * mu * lap2);
}

// Z⁰ = ∂U/∂μ
template <class S>
S z0_radial(int N, S mu, S rho) {
  const S a = S(N - 4) / 2;
  const S s = mu * mu + rho * rho;
  return alpha_N<S>(N) * a * std::pow(mu, a - 1) * (rho * rho - mu * mu) / std::pow(s, a + 1);
}

// Point forms

template <class S>
S bubble_value(const BubbleParams<S>& b, const Vec<S>& x) {
  return bubble_radial<S>(int(x.size()), b.mu, (x - b.xi).norm());
}

template <class S>
S bubble_laplacian(const BubbleParams<S>& b, const Vec<S>& x) {
  return bubble_laplacian_radial<S>(int(x.size()), b.mu, (x - b.xi).norm());
}

// index 0: ∂U/∂μ; index i in 1..N: ∂U/∂ξ_i
template <class S>
S z_kernel(const BubbleParams<S>& b, int index, const Vec<S>& x) {
  const int N = int(x.size());
  if (index < 0 || index > N) throw std::out_of_range("kernel index must lie in 0..N");
  const S rho = (x - b.xi).norm();
  if (index == 0) return z0_radial<S>(N, b.mu, rho);
  const S a = S(N - 4) / 2;
  const S s = b.mu * b.mu + rho * rho;
  return alpha_N<S>(N) * S(N - 4) * std::pow(b.mu, a) * (x(index - 1) - b.xi(index - 1)) / std::pow(s, a + 1);
}

// f(u) = |u|^{p-1}u and its first two derivatives.
template <class S>
S nonlinearity(S u, int order, S p) {
  const S au = std::abs(u);
  switch (order) {
    case 0:
      return std::pow(au, p - 1) * u;
    case 1:
      return p * std::pow(au, p - 1);
    case 2:
      if (p < 2 && u == 0) throw std::domain_error("f'' is singular at u = 0 when p < 2");
      return p * (p - 1) * std::pow(au, p - 3) * u;
    default:
      throw std::invalid_argument("nonlinearity order must be 0, 1 or 2");
  }
}

// Max relative residual of Δ²U - U^p for U = U_{1,0} at the given radii.
template <class S>
S verify_entire_equation(int N, const std::vector<S>& radii) {
  const S p = S(N + 4) / S(N - 4);
  S worst = 0;
  for (S r : radii) {
    const S lhs = bubble_bilaplacian_radial<S>(N, S(1), r);
    const S rhs = std::pow(bubble_radial<S>(N, S(1), r), p);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return worst;
}

}  // namespace btower

#endif
