#ifndef BTOWER_QUADRATURE_HPP
#define BTOWER_QUADRATURE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <type_traits>
#include <vector>

namespace btower {

struct QuadratureEngine {
  double abs_tol = 1e-14;
  double rel_tol = 1e-12;
  int max_subdivisions = 4000;
  // power s of an integrable singularity (r-a)^s at the left endpoint, s > -1
  std::optional<double> singularity_exponent;
};

template <class V>
struct ScalarOf {
  using type = typename V::Scalar;
};
template <class V>
  requires std::is_floating_point_v<V>
struct ScalarOf<V> {
  using type = V;
};

template <class V>
struct IntegralResult {
  V value;
  typename ScalarOf<V>::type error_estimate = 0;
  int subdivisions_used = 0;
  bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1,1], nonnegative half.
template <class S>
struct GK15 {
  static constexpr int n = 8;
  inline static const S x[8] = {
      S(0.991455371120812639206854697526329L), S(0.949107912342758524526189684047851L),
      S(0.864864423359769072789712788640926L), S(0.741531185599394439863864773280788L),
      S(0.586087235467691130294144845693013L), S(0.405845151377397166906606412076961L),
      S(0.207784955007898467600689403773245L), S(0)};
  inline static const S wk[8] = {
      S(0.022935322010529224963732008058970L), S(0.063092092629978553290700663189204L),
      S(0.104790010322250183839876322541518L), S(0.140653259715525918745189590510238L),
      S(0.169004726639267902826583426598550L), S(0.190350578064785409913256402421014L),
      S(0.204432940075298892414161999234649L), S(0.209482141084727828012999174891714L)};
  // Gauss weights for the odd-indexed Kronrod nodes (x[1], x[3], x[5], x[7])
  inline static const S wg[4] = {
      S(0.129484966168869693270611432679082L), S(0.279705391489276667901467771423780L),
      S(0.381830050505118944950369775488975L), S(0.417959183673469387755102040816327L)};
};

template <class V>
auto magnitude(const V& v) {
  if constexpr (std::is_floating_point_v<V>)
    return std::abs(v);
  else
    return v.cwiseAbs().maxCoeff();
}

template <class S, class V>
struct Segment {
  S a, b;
  V value;
  S error;
};

template <class S, class F>
auto gk15(F& f, S a, S b) {
  using V = std::decay_t<decltype(f(a))>;
  const S c = (a + b) / 2, h = (b - a) / 2;
  V fc = f(c);
  V kron = fc * GK15<S>::wk[7];
  V gauss = fc * GK15<S>::wg[3];
  for (int j = 0; j < 7; ++j) {
    const S dx = h * GK15<S>::x[j];
    V s = f(c - dx) + f(c + dx);
    kron += s * GK15<S>::wk[j];
    if (j % 2 == 1) gauss += s * GK15<S>::wg[j / 2];
  }
  kron *= h;
  gauss *= h;
  V diff = kron - gauss;
  return Segment<S, V>{a, b, kron, static_cast<S>(magnitude(diff))};
}

// Global adaptive bisection over a set of initial finite intervals.
template <class S, class F>
auto adapt(F& f, const std::vector<S>& cuts, const QuadratureEngine& eng) {
  using Seg = decltype(gk15(f, cuts[0], cuts[1]));
  using V = decltype(Seg::value);
  auto worse = [](const Seg& l, const Seg& r) { return l.error < r.error; };
  std::priority_queue<Seg, std::vector<Seg>, decltype(worse)> heap(worse);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) heap.push(gk15(f, cuts[i], cuts[i + 1]));

  auto totals = [&heap]() {
    auto items = std::vector<Seg>();
    auto copy = heap;
    while (!copy.empty()) {
      items.push_back(copy.top());
      copy.pop();
    }
    std::sort(items.begin(), items.end(), [](const Seg& l, const Seg& r) { return l.a < r.a; });
    return items;
  };

  auto items = totals();
  V value = items.front().value;
  S error = items.front().error;
  for (std::size_t i = 1; i < items.size(); ++i) {
    value += items[i].value;
    error += items[i].error;
  }
  int count = static_cast<int>(heap.size());
  auto tol = [&](const V& v) {
    return std::max(S(eng.abs_tol), S(eng.rel_tol) * static_cast<S>(magnitude(v)));
  };
  while (error > tol(value) && count < eng.max_subdivisions) {
    Seg worst = heap.top();
    heap.pop();
    const S mid = (worst.a + worst.b) / 2;
    if (!(mid > worst.a && mid < worst.b)) {
      // interval exhausted at working precision
      worst.error = 0;
      heap.push(worst);
      break;
    }
    Seg left = gk15(f, worst.a, mid), right = gk15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // deterministic final summation in left-to-right order
  items = totals();
  V total = items.front().value;
  S err = items.front().error;
  for (std::size_t i = 1; i < items.size(); ++i) {
    total += items[i].value;
    err += items[i].error;
  }
  IntegralResult<V> out{total, err, count, err <= tol(total)};
  return out;
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a,b].
// b may be +infinity (mapped by r = a + t/(1-t)); a declared endpoint
// singularity at a is removed by r = a + L u^{1/(1+s)} on the first segment.
// Breakpoints split the range before adaptation starts.
template <class S, class F>
auto integrate_radial(F&& f, S a, S b, const QuadratureEngine& eng, std::vector<S> breakpoints = {}) {
  std::vector<S> cuts{a};
  std::sort(breakpoints.begin(), breakpoints.end());
  for (S x : breakpoints)
    if (x > cuts.back() && x < b) cuts.push_back(x);
  const bool infinite = std::isinf(b);
  if (!infinite) cuts.push_back(b);
  if (cuts.size() == 1) cuts.push_back(a + 1);
  const S first_end = cuts[1];
  const S last_finite = cuts.back();
  const bool singular = eng.singularity_exponent.has_value();
  const S power = singular ? S(1) / (S(1) + S(*eng.singularity_exponent)) : S(1);
  const S head_len = first_end - a;

  // One working axis u: a unit-length head for the singular segment, the
  // regular cuts shifted to follow it, and a unit-length tail for [last, inf).
  const S shift = singular ? first_end - 1 : S(0);
  auto g = [&](S u) {
    using V = std::decay_t<decltype(f(a))>;
    if (singular && u < S(1)) {
      const S r = a + head_len * std::pow(u, power);
      const S jac = head_len * power * std::pow(u, power - 1);
      return V(f(r) * jac);
    }
    const S x = u + shift;
    if (infinite && x > last_finite) {
      const S t = x - last_finite;
      const S one_minus = S(1) - t;
      // the image of t = 1 is r = inf, where an integrable f has vanished
      if (!(one_minus > 0)) return V(f(last_finite) * S(0));
      return V(f(last_finite + t / one_minus) / (one_minus * one_minus));
    }
    return V(f(x));
  };

  std::vector<S> axis;
  if (singular) axis.push_back(0);
  for (std::size_t i = singular ? 1 : 0; i < cuts.size(); ++i) axis.push_back(cuts[i] - shift);
  if (infinite) axis.push_back(axis.back() + 1);
  return detail::adapt(g, axis, eng);
}

// Integral of f(r) over [a,b] (0 < a < b finite) computed in t = ln r.
// Integrands concentrated on scales spanning many decades stay cheap.
template <class S, class F>
auto integrate_log(F&& f, S a, S b, const QuadratureEngine& eng, const std::vector<S>& breakpoints = {}) {
  std::vector<S> cuts;
  for (S x : breakpoints)
    if (x > a && x < b) cuts.push_back(std::log(x));
  auto g = [&](S t) {
    using V = std::decay_t<decltype(f(a))>;
    const S r = std::exp(t);
    return V(f(r) * r);
  };
  return integrate_radial(g, std::log(a), std::log(b), eng, cuts);
}

// Tensorized adaptive rule for f(r, phi) over r in [r0, r1] (r1 may be
// infinite) and phi in [0, phi_max]. The inner error estimates are carried
// through the outer rule and combined in quadrature with the outer one.
template <class S, class F>
IntegralResult<S> integrate_radial_angular(F&& f, S r0, S r1, S phi_max, const QuadratureEngine& eng,
                                           std::vector<S> r_breaks = {}) {
  QuadratureEngine inner = eng;
  inner.singularity_exponent.reset();
  bool inner_ok = true;
  auto row = [&](S r) {
    auto res = integrate_radial([&](S phi) { return f(r, phi); }, S(0), phi_max, inner);
    inner_ok = inner_ok && res.converged;
    return Eigen::Matrix<S, 2, 1>(res.value, res.error_estimate);
  };
  auto outer = integrate_radial(row, r0, r1, eng, std::move(r_breaks));
  IntegralResult<S> out;
  out.value = outer.value(0);
  out.error_estimate = std::hypot(outer.error_estimate, std::abs(outer.value(1)));
  out.subdivisions_used = outer.subdivisions_used;
  out.converged = outer.converged && inner_ok;
  return out;
}

}  // namespace btower

#endif
