#ifndef BTOWER_TOWER_HPP
#define BTOWER_TOWER_HPP

#include "btower/bubble.hpp"
#include "btower/constants.hpp"
#include "btower/quadrature.hpp"
#include "btower/radial_solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace btower {

class ScaleOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class S = double>
struct TowerConfig {
  ProblemDims dims;
  S epsilon = 0;
  Vec<S> mu;      // interior parameters μ_i
  Vec<S> scales;  // μ_{iε} = μ_i ε^{(2i-1)θ/(2k)}
};

template <class S>
TowerConfig<S> tower_scales(const ProblemDims& dims, S epsilon, const Vec<S>& mu) {
  if (mu.size() != dims.k) throw std::invalid_argument("tower needs exactly k interior scales");
  if (!(epsilon > 0 && epsilon < 1)) throw std::domain_error("hole radius must lie in (0,1)");
  TowerConfig<S> cfg{dims, epsilon, mu, Vec<S>(dims.k)};
  const S theta = dims.theta.template as<S>();
  for (int i = 0; i < dims.k; ++i) {
    const S expo = Rational(2 * i + 1, 2 * dims.k).template as<S>() * theta;
    cfg.scales(i) = mu(i) * std::pow(epsilon, expo);
  }
  for (int i = 0; i < dims.k; ++i) {
    const S below = i + 1 < dims.k ? cfg.scales(i + 1) : epsilon;
    if (!(cfg.scales(i) > below))
      throw ScaleOrderError("scale ordering violated at level " + std::to_string(i + 1) + ": epsilon too large");
  }
  return cfg;
}

// Boundary radii r = ρ_0 > ρ_1 > ... > ρ_k = ε, with ρ_l = √(μ_{lε}μ_{(l+1)ε}).
// Annulus A_l is ρ_l < |x| < ρ_{l-1}.
template <class S = double>
struct AnnulusDecomposition {
  std::vector<S> radii;

  int count() const { return int(radii.size()) - 1; }
  S outer(int l) const { return radii[l - 1]; }
  S inner(int l) const { return radii[l]; }
};

template <class S>
AnnulusDecomposition<S> annulus_decomposition(const TowerConfig<S>& cfg, S r = S(0.5)) {
  const int k = cfg.dims.k;
  AnnulusDecomposition<S> a;
  a.radii.push_back(r);
  for (int l = 0; l + 1 < k; ++l) a.radii.push_back(std::sqrt(cfg.scales(l) * cfg.scales(l + 1)));
  a.radii.push_back(cfg.epsilon);
  for (std::size_t i = 1; i < a.radii.size(); ++i)
    if (!(a.radii[i] < a.radii[i - 1])) throw ScaleOrderError("annulus radii are not decreasing");
  return a;
}

template <class S = double>
struct Tower {
  TowerConfig<S> cfg;
  std::shared_ptr<const RadialGrid<S>> grid;
  std::vector<NavierSolution<S>> projections;
  RadialField<S> v;

  S sign(int i) const { return i % 2 == 0 ? S(1) : S(-1); }
  S p() const { return cfg.dims.p.template as<S>(); }
  S bubble(int i, S r) const { return bubble_radial<S>(cfg.dims.N, cfg.scales(i), r); }
  S projected(int i, S r) const { return projections[i].w(r); }
  S value(S r) const {
    S sum = 0;
    for (int i = 0; i < cfg.dims.k; ++i) sum += sign(i) * projected(i, r);
    return sum;
  }
  bool resolved() const {
    for (const auto& s : projections)
      if (!s.diag.resolved) return false;
    return true;
  }
  std::vector<S> breakpoints() const {
    std::vector<S> b(cfg.scales.data(), cfg.scales.data() + cfg.scales.size());
    for (int i = 0; i + 1 < cfg.dims.k; ++i) b.push_back(std::sqrt(cfg.scales(i) * cfg.scales(i + 1)));
    b.push_back(S(0.5));
    return b;
  }
};

template <class S>
Tower<S> assemble_tower(const TowerConfig<S>& cfg, const std::shared_ptr<const RadialGrid<S>>& grid) {
  if (grid->N != cfg.dims.N || grid->epsilon != cfg.epsilon) throw std::invalid_argument("grid does not match the tower");
  Tower<S> t{cfg, grid, {}, {}};
  for (int i = 0; i < cfg.dims.k; ++i) t.projections.push_back(project_bubble(cfg.scales(i), grid));
  t.v = RadialField<S>{grid, Vec<S>::Zero(grid->size())};
  for (int i = 0; i < cfg.dims.k; ++i) t.v.values += t.sign(i) * t.projections[i].w.values;
  return t;
}

// ∫ over lo < |x| < hi of f(|x|), hi ≤ 1, with the grid's panel edges as cuts.
template <class S, class F>
auto radial_integral_range(const RadialGrid<S>& grid, F&& f, S lo, S hi, const QuadratureEngine& eng,
                           std::vector<S> extra = {}) {
  auto cuts = grid.panel_edges();
  cuts.insert(cuts.end(), extra.begin(), extra.end());
  const S area = sphere_measure<S>(grid.N);
  const int N = grid.N;
  auto g = [&](S r) {
    using V = std::decay_t<decltype(f(r))>;
    return V(f(r) * (area * std::pow(r, S(N - 1))));
  };
  return integrate_log(g, lo, hi, eng, cuts);
}

template <class S>
IntegralResult<S> lq_norm(const RadialField<S>& field, S q, const QuadratureEngine& eng = {}, std::vector<S> extra = {}) {
  if (q < 1) throw std::domain_error("Lq norm needs q >= 1");
  auto res = radial_integral(*field.grid, [&](S r) { return std::pow(std::abs(field(r)), q); }, eng, extra);
  res.error_estimate = res.value > 0 ? res.error_estimate * std::pow(res.value, 1 / q - 1) / q : res.error_estimate;
  res.value = std::pow(res.value, 1 / q);
  return res;
}

template <class S = double>
struct W1Result {
  S value = 0;
  S error = 0;
  std::vector<S> annulus;      // ∫_{A_l} |...|^β per annulus
  S outer = 0;                 // ∫_{r<|x|<1} |...|^β
  std::vector<S> cross_terms;  // ∫_{A_l} |U_l^{p-1} U_{l+1}|^β
};

// W1 = |f(V) - Σ(-1)^{j+1} f(PU_j)|_β with β = 2N/(N+4).
template <class S>
W1Result<S> residual_w1(const Tower<S>& t, const QuadratureEngine& eng = {}, S r_out = S(0.5)) {
  const int N = t.cfg.dims.N, k = t.cfg.dims.k;
  const S p = t.p(), beta = S(2 * N) / S(N + 4);
  auto integrand = [&](S r) {
    S v = 0, sum = 0;
    for (int i = 0; i < k; ++i) {
      const S pu = t.projected(i, r);
      v += t.sign(i) * pu;
      sum += t.sign(i) * nonlinearity(pu, 0, p);
    }
    return std::pow(std::abs(nonlinearity(v, 0, p) - sum), beta);
  };
  const auto ann = annulus_decomposition(t.cfg, r_out);
  const auto cuts = t.breakpoints();
  W1Result<S> out;
  S total = 0, err = 0;
  for (int l = 1; l <= ann.count(); ++l) {
    const auto res = radial_integral_range(*t.grid, integrand, ann.inner(l), ann.outer(l), eng, cuts);
    out.annulus.push_back(res.value);
    total += res.value;
    err += res.error_estimate;
    if (l < k) {
      const auto cross = radial_integral_range(
          *t.grid, [&](S r) { return std::pow(std::pow(t.bubble(l - 1, r), p - 1) * t.bubble(l, r), beta); },
          ann.inner(l), ann.outer(l), eng, cuts);
      out.cross_terms.push_back(cross.value);
    }
  }
  const auto outer = radial_integral_range(*t.grid, integrand, r_out, S(1), eng, cuts);
  out.outer = outer.value;
  total += outer.value;
  err += outer.error_estimate;
  out.value = std::pow(total, 1 / beta);
  out.error = total > 0 ? err * std::pow(total, 1 / beta - 1) / beta : err;
  return out;
}

template <class S = double>
struct W2Result {
  S value = 0;
  S error = 0;
  S linear = 0;     // |Σ ± f'(U_j)(PU_j - U_j)|_β
  S power = 0;      // |Σ |PU_j - U_j|^p|_β
};

// W2 = |Σ(-1)^{j+1}(f(PU_j) - f(U_j))|_β.
template <class S>
W2Result<S> residual_w2(const Tower<S>& t, const QuadratureEngine& eng = {}) {
  const int N = t.cfg.dims.N, k = t.cfg.dims.k;
  const S p = t.p(), beta = S(2 * N) / S(N + 4);
  auto integrand = [&](S r) {
    Eigen::Matrix<S, 3, 1> acc = Eigen::Matrix<S, 3, 1>::Zero();
    for (int i = 0; i < k; ++i) {
      const S u = t.bubble(i, r), pu = t.projected(i, r), w = pu - u;
      acc(0) += t.sign(i) * (nonlinearity(pu, 0, p) - nonlinearity(u, 0, p));
      acc(1) += t.sign(i) * nonlinearity(u, 1, p) * w;
      acc(2) += std::pow(std::abs(w), p);
    }
    return Eigen::Matrix<S, 3, 1>(acc.array().abs().pow(beta));
  };
  const auto res = radial_integral(*t.grid, integrand, eng, t.breakpoints());
  W2Result<S> out;
  out.value = std::pow(res.value(0), 1 / beta);
  out.error = res.value(0) > 0 ? res.error_estimate * std::pow(res.value(0), 1 / beta - 1) / beta : res.error_estimate;
  out.linear = std::pow(res.value(1), 1 / beta);
  out.power = std::pow(res.value(2), 1 / beta);
  return out;
}

template <class S = double>
struct EnergyResult {
  S J = 0;
  S quadratic = 0;  // Σ_ij ± ⟨ΔPU_i, ΔPU_j⟩ = Σ_ij ± ∫U_i^p PU_j
  S potential = 0;  // ∫|V|^{p+1}
  S leading = 0;    // (2k c1/N) α^{p+1}
  S excess = 0;     // J - leading
  S error = 0;
  // single-bubble split of the excess (k = 1 only)
  S outside = 0;    // -(2/N) ∫_{|x|>1 or |x|<ε} U^{p+1}
  S i2 = 0;         // -½ ∫ U^p (PU - U)
  S i3 = 0;         // -(1/(p+1)) ∫ [PU^{p+1} - U^{p+1} - (p+1)U^p(PU-U)]
  S i2_robin = 0;   // ½ ∫ U^p · α μ^{(N-4)/2} H
  S i2_hole = 0;    // ½ ∫ U^p (a1 φ1 + a2 φ2)
};

// J_ε(V) = ½∫|ΔV|² - 1/(p+1)∫|V|^{p+1}, the quadratic part through
// ⟨ΔPU_i, ΔPU_j⟩ = ∫U_i^p PU_j (Navier conditions).
template <class S>
EnergyResult<S> tower_energy(const Tower<S>& t, const EnergyConstants<S>& c, const QuadratureEngine& eng = {}) {
  const int N = t.cfg.dims.N, k = t.cfg.dims.k;
  const S p = t.p();
  const int m = k * k + 1;
  auto integrand = [&](S r) {
    Vec<S> out(m);
    S v = 0;
    for (int i = 0; i < k; ++i) {
      const S up = std::pow(t.bubble(i, r), p);
      for (int j = 0; j < k; ++j) out(i * k + j) = t.sign(i) * t.sign(j) * up * t.projected(j, r);
      v += t.sign(i) * t.projected(i, r);
    }
    out(k * k) = std::pow(std::abs(v), p + 1);
    return out;
  };
  const auto res = radial_integral(*t.grid, integrand, eng, t.breakpoints());
  EnergyResult<S> e;
  e.quadratic = res.value.head(k * k).sum();
  e.potential = res.value(k * k);
  e.J = e.quadratic / 2 - e.potential / (p + 1);
  e.leading = S(2 * k) * c.c1 / S(N) * std::pow(c.alpha, p + 1);
  e.excess = e.J - e.leading;
  e.error = res.error_estimate;
  if (k != 1) return e;

  // Split for one bubble, each piece computed without the O(1) cancellation.
  const S mu = t.cfg.scales(0), eps = t.cfg.epsilon;
  auto up1 = [&](S r) { return std::pow(t.bubble(0, r), p + 1) * sphere_measure<S>(N) * std::pow(r, S(N - 1)); };
  const S inner = integrate_radial(up1, S(0), eps, eng).value;
  const S outer = integrate_radial(up1, S(1), std::numeric_limits<S>::infinity(), eng).value;
  e.outside = -S(2) / S(N) * (inner + outer);
  const auto H = robin_profile<S>(N);
  const S lap0 = bubble_laplacian_radial<S>(N, S(1), S(0));
  const S u0 = bubble_radial<S>(N, S(1), S(0));
  const S ratio = eps * eps / std::pow(mu, S(N) / 2);
  const S a1 = -lap0 / (2 * S(N - 4)) * ratio;
  const S a2 = u0 / std::pow(mu, S(N - 4) / 2) + lap0 / (2 * S(N - 4)) * ratio;
  const S scale = alpha_N<S>(N) * std::pow(mu, S(N - 4) / 2);
  auto split = [&](S r) {
    const S u = t.bubble(0, r), w = t.projected(0, r) - u, up = std::pow(u, p);
    const S ratio_w = w / u;
    const S taylor = std::expm1((p + 1) * std::log1p(ratio_w)) - (p + 1) * ratio_w;
    const S y = eps / r;
    Eigen::Matrix<S, 4, 1> out;
    out << up * w, std::pow(u, p + 1) * taylor, up * scale * H(r), up * (a1 * std::pow(y, S(N - 4)) + a2 * std::pow(y, S(N - 2)));
    return out;
  };
  const auto s = radial_integral(*t.grid, split, eng, t.breakpoints());
  e.i2 = -s.value(0) / 2;
  e.i3 = -s.value(1) / (p + 1);
  e.i2_robin = s.value(2) / 2;
  e.i2_hole = s.value(3) / 2;
  return e;
}

// Closed-form interaction integrals over an annulus.
template <class S>
IntegralResult<S> annulus_integral(int N, S lo, S hi, const std::function<S(S)>& f, const QuadratureEngine& eng,
                                   const std::vector<S>& cuts = {}) {
  const S area = sphere_measure<S>(N);
  return integrate_log([&](S r) { return f(r) * area * std::pow(r, S(N - 1)); }, lo, hi, eng, cuts);
}

}  // namespace btower

#endif
