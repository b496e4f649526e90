#ifndef BTOWER_REDUCED_ENERGY_HPP
#define BTOWER_REDUCED_ENERGY_HPP

#include "btower/bubble.hpp"
#include "btower/constants.hpp"
#include "btower/quadrature.hpp"
#include "btower/radial_solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace btower {

// Γ(x) = ∫ (1+|y-x|²)^{-(N+4)/2} |y|^{4-N} dy, depends on |x| only.
// Polar coordinates centred at the origin: r^{N-1}·r^{4-N} = r³, so the
// integrand is smooth and the angular part carries sin^{N-2}φ.
template <class S = double>
IntegralResult<S> gamma_kernel_2d(int N, S a, const QuadratureEngine& eng = {}) {
  const S e = S(N + 4) / 2;
  const S ring = sphere_measure<S>(N - 1);
  auto f = [&](S r, S phi) {
    const S c = std::cos(phi), s = std::sin(phi);
    return std::pow(r, 3) * std::pow(s, S(N - 2)) * std::pow(1 + r * r - 2 * a * r * c + a * a, -e);
  };
  std::vector<S> breaks;
  if (a > 0) breaks.push_back(a);
  auto res = integrate_radial_angular(f, S(0), std::numeric_limits<S>::infinity(), std::numbers::pi_v<S>, eng, breaks);
  res.value *= ring;
  res.error_estimate *= ring;
  return res;
}

template <class S = double>
IntegralResult<S> gamma_kernel(int N, S a, const QuadratureEngine& eng = {}) {
  if (a < 0) throw std::domain_error("kernel argument must be a norm");
  if (a > 0) return gamma_kernel_2d<S>(N, a, eng);
  const S e = S(N + 4) / 2;
  auto res = integrate_radial([&](S r) { return std::pow(r, 3) * std::pow(1 + r * r, -e); }, S(0),
                              std::numeric_limits<S>::infinity(), eng);
  const S area = sphere_measure<S>(N);
  res.value *= area;
  res.error_estimate *= area;
  return res;
}

// Γ tabulated on [0, a_max] as piecewise Chebyshev interpolants in s = a²
// over geometric panels; beyond a_max it falls back to direct quadrature.
template <class S = double>
class GammaCache {
 public:
  GammaCache(int N, S a_max, const QuadratureEngine& eng = {}, int degree = 20)
      : N_(N), smax_(a_max * a_max), eng_(eng), element_(degree) {
    edges_.push_back(0);
    S e = S(0.25);
    while (e < smax_) {
      edges_.push_back(e);
      e *= 4;
    }
    edges_.push_back(smax_);
    for (std::size_t m = 0; m + 1 < edges_.size(); ++m) {
      Vec<S> vals(degree + 1);
      for (int i = 0; i <= degree; ++i) {
        const S s = edges_[m] + (edges_[m + 1] - edges_[m]) * (element_.x(i) + 1) / 2;
        vals(i) = gamma_kernel<S>(N, std::sqrt(std::max(s, S(0))), eng).value;
      }
      values_.push_back(vals);
    }
  }

  S operator()(S a) const {
    const S s = a * a;
    if (s > smax_) return gamma_kernel<S>(N_, std::abs(a), eng_).value;
    std::size_t m = 0;
    while (m + 2 < edges_.size() && s > edges_[m + 1]) ++m;
    const S xi = 2 * (s - edges_[m]) / (edges_[m + 1] - edges_[m]) - 1;
    return element_.interpolate(values_[m], xi);
  }

  S a_max() const { return std::sqrt(smax_); }

 private:
  int N_;
  S smax_;
  QuadratureEngine eng_;
  ChebyshevElement<S> element_;
  std::vector<S> edges_;
  std::vector<Vec<S>> values_;
};

template <class S = double>
struct ReducedPoint {
  Vec<S> mu;
  Mat<S> sigma;  // N x k, column i is σ_i
  S d = S(0.01);

  bool feasible() const {
    for (int i = 0; i < mu.size(); ++i) {
      if (!(mu(i) > d && mu(i) < 1 / d)) return false;
      if (!(sigma.col(i).norm() < 1 / d)) return false;
    }
    return true;
  }
};

template <class S>
Vec<S> nu_from_mu(int N, const Vec<S>& mu) {
  return mu.array().pow(S(N - 4) / 2).matrix();
}

template <class S>
Vec<S> mu_from_nu(int N, const Vec<S>& nu) {
  return nu.array().pow(S(2) / S(N - 4)).matrix();
}

// Φ in ν-variables: H1 ν1² + f(σ_k) ν_k^{-q} + Σ g(σ_l) ν_{l+1}/ν_l
// with H1 = c2·H(0,0), f = c3·ΔU_{1,0}·U_{1,0}, g = 2Γ, q = 2(N-2)/(N-4).
template <class S = double>
class ReducedModel {
 public:
  ReducedModel(const ProblemDims& dims, const QuadratureEngine& eng = {}, S d = S(0.01))
      : dims_(dims), eng_(eng), d_(d) {
    consts_ = energy_constants<S>(dims, eng);
    robin_ = robin_function<S>(dims.N);
    H1_ = consts_.c2 * robin_;
    q_ = hole_exponent(dims.N).template as<S>();
    gamma0_ = gamma_kernel<S>(dims.N, S(0), eng).value;
  }

  const ProblemDims& dims() const { return dims_; }
  const EnergyConstants<S>& constants() const { return consts_; }
  S robin() const { return robin_; }
  S H1() const { return H1_; }
  S q() const { return q_; }
  S gamma0() const { return gamma0_; }
  S box() const { return d_; }

  S f_of(const Vec<S>& sigma) const {
    BubbleParams<S> b{S(1), Vec<S>::Zero(dims_.N)};
    return consts_.c3 * bubble_laplacian(b, sigma) * bubble_value(b, sigma);
  }

  S gamma_of(S a) const {
    if (a == 0) return gamma0_;
    return cache()(a);
  }
  S g_of(const Vec<S>& sigma) const { return 2 * gamma_of(sigma.norm()); }

  const GammaCache<S>& cache() const {
    std::call_once(*cache_once_, [this] { cache_ = std::make_shared<GammaCache<S>>(dims_.N, 1 / d_, eng_); });
    return *cache_;
  }

  S value(const Vec<S>& nu, const Mat<S>& sigma) const {
    const int k = dims_.k;
    S phi = H1_ * nu(0) * nu(0) + f_of(sigma.col(k - 1)) * std::pow(nu(k - 1), -q_);
    for (int l = 0; l + 1 < k; ++l) phi += g_of(sigma.col(l)) * nu(l + 1) / nu(l);
    return phi;
  }

  Vec<S> gradient_nu(const Vec<S>& nu, const Mat<S>& sigma) const {
    const int k = dims_.k;
    Vec<S> g = Vec<S>::Zero(k);
    g(0) += 2 * H1_ * nu(0);
    for (int l = 0; l + 1 < k; ++l) {
      const S gl = g_of(sigma.col(l));
      g(l) -= gl * nu(l + 1) / (nu(l) * nu(l));
      g(l + 1) += gl / nu(l);
    }
    g(k - 1) -= q_ * f_of(sigma.col(k - 1)) * std::pow(nu(k - 1), -q_ - 1);
    return g;
  }

  Mat<S> hessian_nu(const Vec<S>& nu, const Mat<S>& sigma) const {
    const int k = dims_.k;
    Mat<S> H = Mat<S>::Zero(k, k);
    H(0, 0) += 2 * H1_;
    for (int l = 0; l + 1 < k; ++l) {
      const S gl = g_of(sigma.col(l));
      H(l, l) += 2 * gl * nu(l + 1) / std::pow(nu(l), 3);
      H(l, l + 1) -= gl / (nu(l) * nu(l));
      H(l + 1, l) -= gl / (nu(l) * nu(l));
    }
    H(k - 1, k - 1) += q_ * (q_ + 1) * f_of(sigma.col(k - 1)) * std::pow(nu(k - 1), -q_ - 2);
    return H;
  }

  // Full gradient in z = (ν, σ_1, ..., σ_k); σ-part by Richardson-extrapolated
  // central differences.
  Vec<S> gradient(const Vec<S>& nu, const Mat<S>& sigma, S h = S(5e-3)) const {
    const int k = dims_.k, N = dims_.N;
    Vec<S> g(k + N * k);
    g.head(k) = gradient_nu(nu, sigma);
    for (int c = 0; c < N * k; ++c) {
      auto at = [&](S step) {
        Mat<S> s = sigma;
        s(c % N, c / N) += step;
        return value(nu, s);
      };
      const S d1 = (at(h) - at(-h)) / (2 * h), d2 = (at(2 * h) - at(-2 * h)) / (4 * h);
      g(k + c) = (4 * d1 - d2) / 3;
    }
    return g;
  }

  Mat<S> hessian(const Vec<S>& nu, const Mat<S>& sigma, S h = S(5e-3)) const {
    const int k = dims_.k, N = dims_.N, n = k + N * k;
    Mat<S> H = Mat<S>::Zero(n, n);
    H.topLeftCorner(k, k) = hessian_nu(nu, sigma);
    auto shifted = [&](int c, S step) {
      Mat<S> s = sigma;
      s(c % N, c / N) += step;
      return s;
    };
    // mixed ν-σ block from the analytic ν-gradient
    for (int c = 0; c < N * k; ++c) {
      auto diff = [&](S step) {
        return Vec<S>((gradient_nu(nu, shifted(c, step)) - gradient_nu(nu, shifted(c, -step))) / (2 * step));
      };
      const Vec<S> col = (4 * diff(h) - diff(2 * h)) / 3;
      H.block(0, k + c, k, 1) = col;
      H.block(k + c, 0, 1, k) = col.transpose();
    }
    // σ-σ block from values
    auto second = [&](int c1, int c2, S step) {
      if (c1 == c2) {
        return (value(nu, shifted(c1, step)) - 2 * value(nu, sigma) + value(nu, shifted(c1, -step))) / (step * step);
      }
      auto at = [&](S s1, S s2) {
        Mat<S> s = sigma;
        s(c1 % N, c1 / N) += s1;
        s(c2 % N, c2 / N) += s2;
        return value(nu, s);
      };
      return (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4 * step * step);
    };
    for (int c1 = 0; c1 < N * k; ++c1)
      for (int c2 = c1; c2 < N * k; ++c2) {
        const S v = (4 * second(c1, c2, h) - second(c1, c2, 2 * h)) / 3;
        H(k + c1, k + c2) = v;
        H(k + c2, k + c1) = v;
      }
    return H;
  }

 private:
  ProblemDims dims_;
  QuadratureEngine eng_;
  S d_;
  EnergyConstants<S> consts_;
  S robin_ = 0, H1_ = 0, q_ = 0, gamma0_ = 0;
  mutable std::shared_ptr<std::once_flag> cache_once_ = std::make_shared<std::once_flag>();
  mutable std::shared_ptr<GammaCache<S>> cache_;
};

// Φ in the original scale variables.
template <class S>
S phi_value(const ReducedModel<S>& model, const ReducedPoint<S>& pt) {
  return model.value(nu_from_mu<S>(model.dims().N, pt.mu), pt.sigma);
}

template <class S = double>
struct QCertificate {
  Mat<S> Q;
  S det_recursion = 0;
  S det_target = 0;
  S det_lu = 0;
};

// Tridiagonal determinant D_j = a_j D_{j-1} - b_{j-1} c_{j-1} D_{j-2}.
template <class S>
S tridiagonal_det(const Mat<S>& T) {
  const int n = int(T.rows());
  S prev2 = 1, prev = T(0, 0);
  for (int j = 1; j < n; ++j) {
    const S cur = T(j, j) * prev - T(j, j - 1) * T(j - 1, j) * prev2;
    prev2 = prev;
    prev = cur;
  }
  return prev;
}

// Limit matrix Q at the critical point: diagonal 3λ, 2λ, ..., last entry
// 2(N-2)(3N-8)f(0)/((N-4)²ν_k^q); super-diagonal -g(0), sub-diagonal -λ²/g(0).
// For k = 1 the single entry is ν̂²∂²Φ/∂ν² = λ + 2(N-2)(3N-8)f(0)/((N-4)²ν^q).
template <class S>
QCertificate<S> q_matrix_certificate(const ReducedModel<S>& model, const Vec<S>& nu) {
  const int N = model.dims().N, k = model.dims().k;
  const S lambda = 2 * model.H1() * nu(0) * nu(0);
  const S g0 = 2 * model.gamma0();
  const S f0 = model.f_of(Vec<S>::Zero(N));
  const S last = 2 * S(N - 2) * S(3 * N - 8) * f0 / (S(N - 4) * S(N - 4) * std::pow(nu(k - 1), model.q()));
  QCertificate<S> out;
  out.Q = Mat<S>::Zero(k, k);
  for (int i = 0; i < k; ++i) out.Q(i, i) = 2 * lambda;
  out.Q(0, 0) = 3 * lambda;
  out.Q(k - 1, k - 1) = last;
  if (k == 1) out.Q(0, 0) = lambda + last;
  for (int i = 0; i + 1 < k; ++i) {
    out.Q(i, i + 1) = -g0;
    out.Q(i + 1, i) = -lambda * lambda / g0;
  }
  out.det_recursion = tridiagonal_det(out.Q);
  out.det_target = S(4 * N * k - 8 * k - 4) / S(N - 4) * std::pow(lambda, S(k));
  out.det_lu = out.Q.partialPivLu().determinant();
  return out;
}

enum class SolverFailure { Divergence, BoxCollision, SingularStep };

class SolverError : public std::runtime_error {
 public:
  SolverError(SolverFailure kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  SolverFailure kind() const { return kind_; }

 private:
  SolverFailure kind_;
};

struct NewtonOptions {
  double grad_tol = 1e-10;
  int max_iterations = 200;
  // false skips the finite-difference (ν,σ) Hessian, which needs the Γ table
  bool full_certificate = true;
};

template <class S = double>
struct CriticalCertificate {
  ReducedPoint<S> point;
  Vec<S> nu;
  S grad_norm = 0;
  Mat<S> hessian;     // full (k+Nk)² in (ν, σ)
  Mat<S> hessian_nu;  // analytic ν-block
  QCertificate<S> q;
  S lambda = 0;
  S chain_residual = 0;
  S off_block = 0;
  int iterations = 0;
};

// Balance chain 2H1ν1² = gν_{i+1}/ν_i = q f ν_k^{-q}; returns its members.
template <class S>
Vec<S> balance_chain(const ReducedModel<S>& model, const Vec<S>& nu) {
  const int k = model.dims().k, N = model.dims().N;
  Vec<S> c(k + 1);
  c(0) = 2 * model.H1() * nu(0) * nu(0);
  for (int i = 0; i + 1 < k; ++i) c(i + 1) = 2 * model.gamma0() * nu(i + 1) / nu(i);
  c(k) = model.q() * model.f_of(Vec<S>::Zero(N)) * std::pow(nu(k - 1), -model.q());
  return c;
}

// Newton with backtracking on the ν-block at σ = 0, then the full certificate.
template <class S>
CriticalCertificate<S> find_critical_point(const ReducedModel<S>& model, const ReducedPoint<S>& init,
                                           const NewtonOptions& opt = {}) {
  const int N = model.dims().N, k = model.dims().k;
  if (init.mu.size() != k) throw std::invalid_argument("initial point must carry k scales");
  if (!init.feasible()) throw SolverError(SolverFailure::BoxCollision, "initial point violates the box constraints");
  const Mat<S> sigma = Mat<S>::Zero(N, k);
  Vec<S> nu = nu_from_mu<S>(N, init.mu);
  Vec<S> g = model.gradient_nu(nu, sigma);
  int it = 0;
  for (; it < opt.max_iterations && g.norm() >= S(opt.grad_tol); ++it) {
    const Mat<S> H = model.hessian_nu(nu, sigma);
    const Vec<S> step = H.partialPivLu().solve(-g);
    if (!step.allFinite() || std::abs(H.determinant()) < std::numeric_limits<S>::min())
      throw SolverError(SolverFailure::SingularStep, "singular Newton step at iteration " + std::to_string(it));
    S t = 1;
    Vec<S> trial;
    Vec<S> gt;
    bool accepted = false;
    for (int b = 0; b < 40; ++b, t /= 2) {
      trial = nu + t * step;
      if ((trial.array() <= 0).any()) continue;
      gt = model.gradient_nu(trial, sigma);
      if (gt.norm() < g.norm() || gt.norm() < S(opt.grad_tol)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // at the floating-point floor the gradient can no longer decrease
      if (g.norm() < S(100 * opt.grad_tol)) break;
      throw SolverError(SolverFailure::Divergence, "line search failed at iteration " + std::to_string(it));
    }
    nu = trial;
    g = gt;
    ReducedPoint<S> probe{mu_from_nu<S>(N, nu), sigma, model.box()};
    if (!probe.feasible())
      throw SolverError(SolverFailure::BoxCollision, "Newton iterate left the box at iteration " + std::to_string(it));
  }
  if (!(g.norm() < S(opt.grad_tol)))
    throw SolverError(SolverFailure::Divergence, "Newton did not reach the gradient tolerance");

  CriticalCertificate<S> cert;
  cert.point = ReducedPoint<S>{mu_from_nu<S>(N, nu), sigma, model.box()};
  cert.nu = nu;
  cert.iterations = it;
  cert.hessian_nu = model.hessian_nu(nu, sigma);
  if (opt.full_certificate) {
    cert.grad_norm = model.gradient(nu, sigma).norm();
    cert.hessian = model.hessian(nu, sigma);
    cert.off_block = cert.hessian.block(0, k, k, N * k).cwiseAbs().maxCoeff();
  } else {
    cert.grad_norm = g.norm();
    cert.hessian = cert.hessian_nu;
    cert.off_block = std::numeric_limits<S>::quiet_NaN();
  }
  cert.q = q_matrix_certificate(model, nu);
  const Vec<S> chain = balance_chain(model, nu);
  cert.lambda = chain(0);
  cert.chain_residual = ((chain.array() - cert.lambda).abs() / cert.lambda).maxCoeff();
  return cert;
}

// Hessian of ΔU_{1,0}(x)·U_{1,0}(x) at x = 0 by fourth-order central
// differences on the closed forms.
template <class S = double>
Mat<S> sigma_hessian_certificate(int N, S h = S(1e-3)) {
  const BubbleParams<S> b{S(1), Vec<S>::Zero(N)};
  auto F = [&](const Vec<S>& x) { return bubble_laplacian(b, x) * bubble_value(b, x); };
  Mat<S> H(N, N);
  const Vec<S> zero = Vec<S>::Zero(N);
  auto e = [&](int i, S s) {
    Vec<S> v = zero;
    v(i) = s;
    return v;
  };
  for (int i = 0; i < N; ++i) {
    H(i, i) = (-F(e(i, 2 * h)) + 16 * F(e(i, h)) - 30 * F(zero) + 16 * F(e(i, -h)) - F(e(i, -2 * h))) / (12 * h * h);
    for (int j = i + 1; j < N; ++j) {
      auto at = [&](S si, S sj) { return F(e(i, si) + e(j, sj)); };
      auto mixed = [&](S s) { return (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4 * s * s); };
      H(i, j) = H(j, i) = (4 * mixed(h) - mixed(2 * h)) / 3;
    }
  }
  return H;
}

// Hessian of g(x) = 2Γ(|x|) at x = 0 from the cached kernel.
template <class S>
Mat<S> g_hessian_at_origin(const ReducedModel<S>& model, S h = S(5e-3)) {
  const int N = model.dims().N;
  auto g = [&](const Vec<S>& x) { return model.g_of(x); };
  Mat<S> H(N, N);
  auto e = [&](int i, S s) {
    Vec<S> v = Vec<S>::Zero(N);
    v(i) = s;
    return v;
  };
  const Vec<S> zero = Vec<S>::Zero(N);
  for (int i = 0; i < N; ++i) {
    auto d2 = [&](S s) { return (g(e(i, s)) - 2 * g(zero) + g(e(i, -s))) / (s * s); };
    H(i, i) = (4 * d2(h) - d2(2 * h)) / 3;
    for (int j = i + 1; j < N; ++j) {
      auto at = [&](S si, S sj) { return g(e(i, si) + e(j, sj)); };
      auto mixed = [&](S s) { return (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4 * s * s); };
      H(i, j) = H(j, i) = (4 * mixed(h) - mixed(2 * h)) / 3;
    }
  }
  return H;
}

}  // namespace btower

#endif
