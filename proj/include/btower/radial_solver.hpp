#ifndef BTOWER_RADIAL_SOLVER_HPP
#define BTOWER_RADIAL_SOLVER_HPP

#include "btower/bubble.hpp"
#include "btower/constants.hpp"
#include "btower/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace btower {

template <class S = double>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Reference Chebyshev-Lobatto element on [-1,1].
template <class S>
struct ChebyshevElement {
  int n = 0;
  Vec<S> x;           // ascending nodes -cos(pi j/n)
  Vec<S> bary;        // barycentric weights
  Mat<S> to_coef;     // nodal values -> Chebyshev coefficients
  Mat<S> cumulative;  // nodal values -> integral from -1 to each node
  Vec<S> weights;     // Clenshaw-Curtis weights on [-1,1]

  explicit ChebyshevElement(int degree) : n(degree) {
    const S pi = std::numbers::pi_v<S>;
    x.resize(n + 1);
    bary.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
      x(j) = -std::cos(pi * S(j) / S(n));
      bary(j) = (j % 2 == 0 ? S(1) : S(-1)) * ((j == 0 || j == n) ? S(0.5) : S(1));
    }
    x(0) = -1;
    x(n) = 1;
    if (n % 2 == 0) x(n / 2) = 0;
    auto cheb = [](const Vec<S>& pts, int m) {
      Mat<S> T(pts.size(), m);
      for (int i = 0; i < pts.size(); ++i) {
        T(i, 0) = 1;
        if (m > 1) T(i, 1) = pts(i);
        for (int k = 2; k < m; ++k) T(i, k) = 2 * pts(i) * T(i, k - 1) - T(i, k - 2);
      }
      return T;
    };
    const Mat<S> V = cheb(x, n + 1);
    to_coef = V.partialPivLu().inverse();
    // antiderivative in coefficient space: (n+2) x (n+1)
    Mat<S> K = Mat<S>::Zero(n + 2, n + 1);
    K(1, 0) = 1;
    if (n >= 1) K(2, 1) = S(0.25);
    for (int k = 2; k <= n; ++k) {
      K(k + 1, k) += S(1) / (2 * (k + 1));
      K(k - 1, k) -= S(1) / (2 * (k - 1));
    }
    Mat<S> W = cheb(x, n + 2);
    Vec<S> left(1);
    left(0) = -1;
    const Mat<S> at_left = cheb(left, n + 2);
    W.rowwise() -= at_left.row(0);
    cumulative = W * K * to_coef;
    weights = cumulative.row(n).transpose();
  }

  S interpolate(const Eigen::Ref<const Vec<S>>& values, S xi) const {
    S num = 0, den = 0;
    for (int j = 0; j <= n; ++j) {
      const S d = xi - x(j);
      if (d == 0) return values(j);
      const S w = bary(j) / d;
      num += w * values(j);
      den += w;
    }
    return num / den;
  }
};

struct GridSpec {
  int panels_per_decade = 4;
  int degree = 16;
  int min_nodes = 256;
};

// Panels uniform in t = ln r on [ln eps, 0], Chebyshev-Lobatto nodes per
// panel, adjacent panels sharing their endpoint node.
template <class S = double>
struct RadialGrid {
  int N = 5;
  S epsilon = 0;
  int degree = 16;
  int panels = 0;
  S t0 = 0;
  S h = 0;
  Vec<S> t;
  Vec<S> r;
  std::shared_ptr<const ChebyshevElement<S>> element;

  int size() const { return int(r.size()); }

  std::vector<S> panel_edges() const {
    std::vector<S> e;
    for (int m = 0; m <= panels; ++m) e.push_back(r(m * degree));
    return e;
  }

  int panel_of(S tt) const {
    const int m = int(std::floor((tt - t0) / h));
    return std::clamp(m, 0, panels - 1);
  }

  S interpolate(const Vec<S>& values, S rr) const {
    const S tt = std::log(rr);
    const int m = panel_of(tt);
    const S xi = 2 * (tt - (t0 + h * m)) / h - 1;
    return element->interpolate(values.segment(m * degree, degree + 1), xi);
  }
};

template <class S = double>
std::shared_ptr<const RadialGrid<S>> make_grid(int N, S epsilon, const GridSpec& spec = {}) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::domain_error("hole radius must lie in (0,1)");
  if (spec.degree < 2 || spec.panels_per_decade < 1) throw std::domain_error("grid needs degree >= 2 and panels >= 1");
  auto g = std::make_shared<RadialGrid<S>>();
  g->N = N;
  g->epsilon = epsilon;
  g->degree = spec.degree;
  g->t0 = std::log(epsilon);
  const S decades = -std::log10(epsilon);
  int panels = std::max(1, int(std::ceil(decades * spec.panels_per_decade)));
  while (panels * spec.degree + 1 < spec.min_nodes) ++panels;
  g->panels = panels;
  g->h = -g->t0 / panels;
  g->element = std::make_shared<ChebyshevElement<S>>(spec.degree);
  const int n = panels * spec.degree + 1;
  g->t.resize(n);
  g->r.resize(n);
  for (int m = 0; m < panels; ++m)
    for (int i = 0; i <= spec.degree; ++i)
      g->t(m * spec.degree + i) = g->t0 + g->h * (S(m) + (g->element->x(i) + 1) / 2);
  g->t(0) = g->t0;
  g->t(n - 1) = 0;
  g->r = g->t.array().exp();
  g->r(0) = epsilon;
  g->r(n - 1) = 1;
  return g;
}

template <class S = double>
struct RadialField {
  std::shared_ptr<const RadialGrid<S>> grid;
  Vec<S> values;

  S operator()(S r) const { return grid->interpolate(values, r); }
};

template <class S, class F>
RadialField<S> sample(const std::shared_ptr<const RadialGrid<S>>& grid, F&& f) {
  RadialField<S> out{grid, Vec<S>(grid->size())};
  for (int j = 0; j < grid->size(); ++j) out.values(j) = f(grid->r(j));
  return out;
}

// ∫_{eps<|x|<1} f(|x|) dx with the radial weight, by adaptive quadrature in
// ln r split at every panel edge plus any extra scales.
template <class S, class F>
auto radial_integral(const RadialGrid<S>& grid, F&& f, const QuadratureEngine& eng, std::vector<S> extra = {}) {
  auto cuts = grid.panel_edges();
  cuts.insert(cuts.end(), extra.begin(), extra.end());
  const S area = sphere_measure<S>(grid.N);
  const int N = grid.N;
  auto g = [&](S r) {
    using V = std::decay_t<decltype(f(r))>;
    return V(f(r) * (area * std::pow(r, S(N - 1))));
  };
  return integrate_log(g, grid.epsilon, S(1), eng, cuts);
}

template <class S = double>
struct SolveDiagnostics {
  S tail = 0;  // largest relative Chebyshev tail of the weighted integrands
  bool resolved = true;
};

// Solves Δw = g (radial) on eps<r<1 with w(eps)=w(1)=0 by the Green
// representation built from u_L = 1-(eps/r)^{N-2} and u_R = r^{2-N}-1.
template <class S>
RadialField<S> poisson_solve_radial(const RadialField<S>& rhs, SolveDiagnostics<S>* diag = nullptr,
                                    S tail_tolerance = S(1e-9)) {
  const auto& grid = *rhs.grid;
  const auto& el = *grid.element;
  const int n = grid.degree, M = grid.panels, size = grid.size();
  const S Nm2 = S(grid.N - 2);
  const S pw = -Nm2 * (-std::expm1(Nm2 * grid.t0));  // (2-N)(1-eps^{N-2})

  Vec<S> uL(size), uR(size), hL(size), hR(size);
  for (int j = 0; j < size; ++j) {
    uL(j) = -std::expm1(Nm2 * (grid.t0 - grid.t(j)));
    uR(j) = std::expm1(-Nm2 * grid.t(j));
    const S weight = std::pow(grid.r(j), S(grid.N));
    hL(j) = uL(j) * rhs.values(j) * weight;
    hR(j) = uR(j) * rhs.values(j) * weight;
  }

  const S half = grid.h / 2;
  Vec<S> IL(size), IR(size), totR(M);
  S offset = 0;
  S tail = 0, scaleL = hL.cwiseAbs().maxCoeff(), scaleR = hR.cwiseAbs().maxCoeff();
  for (int m = 0; m < M; ++m) {
    const Vec<S> segL = hL.segment(m * n, n + 1), segR = hR.segment(m * n, n + 1);
    const Vec<S> cumL = half * (el.cumulative * segL);
    const Vec<S> cumR = half * (el.cumulative * segR);
    IL.segment(m * n, n + 1) = cumL.array() + offset;
    offset += cumL(n);
    totR(m) = cumR(n);
    IR.segment(m * n, n + 1) = cumR(n) - cumR.array();
    if (diag) {
      const Vec<S> cl = el.to_coef * segL, cr = el.to_coef * segR;
      if (scaleL > 0) tail = std::max(tail, (std::abs(cl(n)) + std::abs(cl(n - 1))) / scaleL);
      if (scaleR > 0) tail = std::max(tail, (std::abs(cr(n)) + std::abs(cr(n - 1))) / scaleR);
    }
  }
  // add contributions of panels to the right
  S suffix = 0;
  for (int m = M - 1; m >= 0; --m) {
    for (int i = 0; i < n; ++i) IR(m * n + i) += suffix;
    suffix += totR(m);
  }
  IR(size - 1) = 0;

  RadialField<S> w{rhs.grid, Vec<S>(size)};
  for (int j = 0; j < size; ++j) w.values(j) = (uR(j) * IL(j) + uL(j) * IR(j)) / pw;
  w.values(0) = 0;
  w.values(size - 1) = 0;
  if (diag) {
    diag->tail = std::max(diag->tail, tail);
    diag->resolved = diag->resolved && tail <= tail_tolerance;
  }
  return w;
}

template <class S = double>
struct NavierSolution {
  RadialField<S> w;          // solution, w = Δw = 0 at both boundaries
  RadialField<S> laplacian;  // Δw from the first stage
  SolveDiagnostics<S> diag;
};

// Δ²w = f with Navier conditions as two chained Poisson solves.
template <class S>
NavierSolution<S> navier_biharmonic_solve(const RadialField<S>& f) {
  NavierSolution<S> out;
  out.laplacian = poisson_solve_radial(f, &out.diag);
  out.w = poisson_solve_radial(out.laplacian, &out.diag);
  return out;
}

template <class S>
NavierSolution<S> project_bubble(S mu, const std::shared_ptr<const RadialGrid<S>>& grid) {
  const int N = grid->N;
  const S p = S(N + 4) / S(N - 4);
  return navier_biharmonic_solve(sample(grid, [&](S r) { return std::pow(bubble_radial<S>(N, mu, r), p); }));
}

template <class S>
NavierSolution<S> project_z0(S mu, const std::shared_ptr<const RadialGrid<S>>& grid) {
  const int N = grid->N;
  const S p = S(N + 4) / S(N - 4);
  return navier_biharmonic_solve(sample(grid, [&](S r) {
    return p * std::pow(bubble_radial<S>(N, mu, r), p - 1) * z0_radial<S>(N, mu, r);
  }));
}

// Regular part H(r, 0) = a + b r² of the Navier Green function on the ball
// of radius R: the bounded biharmonic radial function with H = r^{4-N} and
// ΔH = 2(4-N) r^{2-N} on the boundary.
template <class S = double>
struct RobinProfile {
  S a = 0;
  S b = 0;
  S operator()(S r) const { return a + b * r * r; }
};

template <class S = double>
RobinProfile<S> robin_profile(int N, S R = 1) {
  Eigen::Matrix<S, 2, 2> A;
  A << 1, R * R, 0, 2 * S(N);
  Eigen::Matrix<S, 2, 1> rhs(std::pow(R, S(4 - N)), 2 * S(4 - N) * std::pow(R, S(2 - N)));
  const Eigen::Matrix<S, 2, 1> c = A.partialPivLu().solve(rhs);
  return {c(0), c(1)};
}

template <class S = double>
S robin_function(int N, S R = 1) {
  return robin_profile<S>(N, R).a;
}

template <class S = double>
struct ProjectionExpansion {
  S a1 = 0;
  S a2 = 0;
  RadialField<S> projection;
  RadialField<S> robin_term;
  RadialField<S> remainder;
  bool regime_ok = true;
};

// Bound shape ε^{N-1}μ^{-(N+2)/2}r^{4-N} + ε^{N-1}μ^{-(N-2)/2}r^{2-N} (unit constant).
template <class S>
S remainder_envelope(int N, S eps, S mu, S r) {
  const S e = std::pow(eps, S(N - 1));
  return e * std::pow(mu, -S(N + 2) / 2) * std::pow(r, S(4 - N)) + e * std::pow(mu, -S(N - 2) / 2) * std::pow(r, S(2 - N));
}

template <class S>
ProjectionExpansion<S> expansion_decompose(S mu, const std::shared_ptr<const RadialGrid<S>>& grid) {
  const int N = grid->N;
  const S eps = grid->epsilon;
  ProjectionExpansion<S> out;
  out.regime_ok = mu > 10 * eps;
  const S lap0 = bubble_laplacian_radial<S>(N, S(1), S(0));
  const S u0 = bubble_radial<S>(N, S(1), S(0));
  const S ratio = eps * eps / std::pow(mu, S(N) / 2);
  out.a1 = -lap0 / (2 * S(N - 4)) * ratio;
  out.a2 = u0 / std::pow(mu, S(N - 4) / 2) + lap0 / (2 * S(N - 4)) * ratio;
  out.projection = project_bubble(mu, grid).w;
  const auto H = robin_profile<S>(N);
  const S scale = alpha_N<S>(N) * std::pow(mu, S(N - 4) / 2);
  out.robin_term = sample(grid, [&](S r) { return scale * H(r); });
  out.remainder = out.projection;
  for (int j = 0; j < grid->size(); ++j) {
    const S r = grid->r(j), y = eps / r;
    out.remainder.values(j) += -bubble_radial<S>(N, mu, r) + out.robin_term.values(j) +
                               out.a1 * std::pow(y, S(N - 4)) + out.a2 * std::pow(y, S(N - 2));
  }
  return out;
}

}  // namespace btower

#endif
