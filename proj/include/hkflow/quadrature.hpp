#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "hkflow/errors.hpp"

namespace hkflow {

inline constexpr double kQuadTol = 1e-10;
/// Split point for integrals starting at u = 0.
inline constexpr double kOriginSplit = 1e-8;

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo, hi, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {lo, hi, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature with an absolute
/// tolerance. Throws QuadratureError when the error estimate stays above
/// `tol` after `max_panels` subdivisions or the integrand is not finite.
template <class F>
QuadResult integrate_adaptive(F&& f, double lo, double hi, double tol = kQuadTol,
                              int max_panels = 4000) {
  if (lo == hi) return {};
  const double sign = hi > lo ? 1.0 : -1.0;
  if (sign < 0) std::swap(lo, hi);
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::gk15(f, lo, hi));
  double total = heap.top().value;
  double err = heap.top().error;
  int panels = 1;
  while (err > tol && panels < max_panels) {
    const detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) break;  // cannot split further
    const detail::Panel a = detail::gk15(f, worst.lo, mid);
    const detail::Panel b = detail::gk15(f, mid, worst.hi);
    total += a.value + b.value - worst.value;
    err += a.error + b.error - worst.error;
    heap.push(a);
    heap.push(b);
    ++panels;
  }
  // Re-sum to drop accumulated cancellation in the running totals.
  double sum = 0.0, esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  if (!std::isfinite(sum)) throw QuadratureError("non-finite integrand", lo, hi);
  if (esum > tol) throw QuadratureError("quadrature did not converge", lo, hi);
  return {sign * sum, esum};
}

/// Integral of g over [0, delta] for integrands that may be singular at the
/// origin. Three leading-order models are fitted from g at delta/2^k:
/// c*xi^beta and A + B*log(xi) from two points, c*xi^beta + d from three.
/// Each model predicts the next sample; the one with the smallest
/// misprediction is integrated analytically and that misprediction times
/// delta is the error estimate.
template <class F>
QuadResult integrate_origin_tail(F&& g, double delta = kOriginSplit) {
  const double g1 = g(delta), g2 = g(0.5 * delta), g4 = g(0.25 * delta), g8 = g(0.125 * delta);
  if (!std::isfinite(g1) || !std::isfinite(g2) || !std::isfinite(g4) || !std::isfinite(g8))
    throw QuadratureError("non-finite integrand near the origin", 0.0, delta);
  const double B = (g1 - g2) / std::log(2.0);
  const double log_pred = g2 - B * std::log(2.0);
  QuadResult best{delta * (g1 - B), delta * std::abs(log_pred - g4)};
  if (g1 != 0.0 && g2 != 0.0 && (g1 > 0) == (g2 > 0)) {
    const double beta = std::log2(g1 / g2);
    if (beta > -1.0) {
      const double pow_pred = g2 * std::pow(0.5, beta);
      const double pow_err = delta * std::abs(pow_pred - g4);
      if (pow_err < best.error) best = {delta * g1 / (beta + 1.0), pow_err};
    }
  }
  // power plus constant: successive differences shrink by 2^-beta
  const double d12 = g1 - g2, d24 = g2 - g4;
  if (d12 != 0.0 && d24 != 0.0 && (d12 > 0) == (d24 > 0)) {
    const double beta = std::log2(d12 / d24);
    const double q = 1.0 - std::pow(2.0, -beta);
    if (beta > -1.0 && std::abs(beta) > 1e-6) {
      const double c = d12 / q;  // c * delta^beta
      const double d = g1 - c;
      const double pred = d + c * std::pow(0.125, beta);
      const double err = delta * std::abs(pred - g8);
      if (err < best.error) best = {delta * (c / (beta + 1.0) + d), err};
    }
  }
  return best;
}

/// Integral over [0, hi] split at kOriginSplit: analytic tail near 0 plus
/// adaptive quadrature on the rest.
template <class F>
QuadResult integrate_from_origin(F&& g, double hi, double tol = kQuadTol) {
  if (hi <= 0.0) return {};
  if (hi <= kOriginSplit) {
    QuadResult t = integrate_origin_tail(g, hi);
    return t;
  }
  const QuadResult tail = integrate_origin_tail(g);
  const QuadResult body = integrate_adaptive(g, kOriginSplit, hi, tol);
  return {tail.value + body.value, tail.error + body.error};
}

}  // namespace hkflow
