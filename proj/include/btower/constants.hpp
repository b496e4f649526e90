#ifndef BTOWER_CONSTANTS_HPP
#define BTOWER_CONSTANTS_HPP

#include "btower/quadrature.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace btower {

// Exact rational used for exponents; converted at evaluation sites only.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  template <class S = double>
  constexpr S as() const {
    return S(num) / S(den);
  }

  friend constexpr Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend constexpr Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend constexpr Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
  friend constexpr Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
  friend constexpr bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }

  std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }
};

struct ProblemDims {
  int N = 5;
  int k = 1;
  Rational p;
  Rational theta;
};

inline ProblemDims make_dims(int N, int k) {
  if (N < 5) throw std::domain_error("dimension N must be at least 5, got " + std::to_string(N));
  if (k < 1) throw std::domain_error("tower depth k must be at least 1, got " + std::to_string(k));
  const std::int64_t m = 2 * std::int64_t(k) * (N - 2);
  return {N, k, Rational(N + 4, N - 4), Rational(m, m - 2)};
}

// Exponent (N-4)/2 of the bubble scale.
inline Rational half_gap(const ProblemDims& d) { return Rational(d.N - 4, 2); }

// Rate (N-4)θ/(2k) of the leading energy correction and of W1.
inline Rational energy_rate(const ProblemDims& d) { return Rational(d.N - 4, 2 * d.k) * d.theta; }

// Exponent q = 2(N-2)/(N-4) of the hole term in the reduced energy.
inline Rational hole_exponent(int N) { return Rational(2 * (N - 2), N - 4); }

template <class S = double>
S sphere_measure(int N) {
  if (N < 1) throw std::domain_error("sphere dimension must be positive");
  const S pi = std::numbers::pi_v<S>;
  return S(2) * std::pow(pi, S(N) / 2) / std::tgamma(S(N) / 2);
}

template <class S = double>
S alpha_N(int N) {
  const S base = S(N) * S(N - 4) * S(N - 2) * S(N + 2);
  return std::pow(base, S(N - 4) / 8);
}

// π^{N/2}Γ(q-N/2)/Γ(q): the whole-space integral of (1+|z|²)^{-q}.
template <class S = double>
S whole_space_power(int N, S q) {
  const S pi = std::numbers::pi_v<S>;
  return std::pow(pi, S(N) / 2) * std::tgamma(q - S(N) / 2) / std::tgamma(q);
}

template <class S = double>
struct EnergyConstants {
  S alpha = 0;
  S c1 = 0;
  S c2 = 0;
  S c3 = 0;
  S sphere = 0;
  S c1_error = 0;
  S c2_error = 0;
  bool converged = false;
};

// c1 and c2 by radial quadrature of the whole-space integrals; c3 assembled.
template <class S = double>
EnergyConstants<S> energy_constants(const ProblemDims& dims, const QuadratureEngine& quad = {}) {
  const int N = dims.N;
  EnergyConstants<S> out;
  out.alpha = alpha_N<S>(N);
  out.sphere = sphere_measure<S>(N);
  auto radial = [&](S q) {
    return integrate_radial([&](S r) { return std::pow(r, S(N - 1)) * std::pow(1 + r * r, -q); }, S(0),
                            std::numeric_limits<S>::infinity(), quad);
  };
  const auto i1 = radial(S(N));
  const auto i2 = radial(S(N + 4) / 2);
  out.c1 = out.sphere * i1.value;
  out.c2 = out.sphere * i2.value;
  out.c1_error = out.sphere * i1.error_estimate;
  out.c2_error = out.sphere * i2.error_estimate;
  out.converged = i1.converged && i2.converged;
  if (!out.converged)
    throw std::runtime_error("energy constant quadrature did not converge (error " +
                             std::to_string(double(std::max(out.c1_error, out.c2_error))) + ")");
  const S pp1 = dims.p.template as<S>() + 1;
  out.c3 = -S(3) * S(N - 2) * out.sphere / (2 * std::pow(out.alpha, pp1));
  return out;
}

}  // namespace btower

#endif
