#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include "errors.hpp"
#include "grid.hpp"

namespace hawkesq::special {

// exp(z) - 1 without cancellation for small |z|.
inline cplx expm1(cplx z) {
  const double a = z.real();
  const double b = z.imag();
  if (b == 0.0) return {std::expm1(a), 0.0};
  const double s = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

// Generalized exponential integral E_p(w) = int_1^inf e^{-wt} t^{-p} dt for
// real non-integer p > 0 and Re w >= 0.
inline cplx expint(double p, cplx w) {
  if (w.real() < 0.0) throw precondition_error("expint needs Re(w) >= 0");
  if (std::abs(p - std::round(p)) < 1e-12) throw precondition_error("expint implemented for non-integer order only");
  constexpr double eps = 1e-16;
  if (std::abs(w) <= 1.0) {
    // E_p(w) = w^{p-1} Gamma(1-p) - sum_k (-w)^k / (k! (1-p+k))
    cplx sum = 0.0;
    cplx term = 1.0;  // (-w)^k / k!
    for (int k = 0; k < 200; ++k) {
      if (k > 0) term *= -w / static_cast<double>(k);
      const cplx add = term / (1.0 - p + k);
      sum += add;
      if (k > 2 && std::abs(add) < eps * std::abs(sum)) break;
    }
    const cplx lead = (w == cplx(0.0)) ? cplx(0.0) : std::pow(w, p - 1.0) * std::tgamma(1.0 - p);
    if (w == cplx(0.0) && p < 1.0) return {std::numeric_limits<double>::infinity(), 0.0};
    return lead - sum;
  }
  // Modified Lentz evaluation of the continued fraction.
  const double tiny = 1e-300;
  cplx b = w + p;
  cplx c = 1.0 / tiny;
  cplx d = 1.0 / b;
  cplx h = d;
  for (int i = 1; i < 200000; ++i) {
    const double an = -static_cast<double>(i) * (p - 1.0 + i);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const cplx del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h * std::exp(-w);
  }
  throw numeric_error("expint continued fraction did not converge");
}

// 1 - alpha * E_{alpha+1}(w): one minus the LST of a unit-scale Pareto(alpha)
// variable at w, accurate for small |w|.
inline cplx pareto_one_minus_lst(double alpha, cplx w) {
  if (w == cplx(0.0)) return 0.0;
  if (std::abs(w) <= 1.0) {
    cplx sum = 0.0;
    cplx term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= -w / static_cast<double>(k);
      const cplx add = term / (k - alpha);
      sum += add;
      if (k > 2 && std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return -alpha * std::pow(w, alpha) * std::tgamma(-alpha) + alpha * sum;
  }
  return 1.0 - alpha * expint(alpha + 1.0, w);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace hawkesq::special
