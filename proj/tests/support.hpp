#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "hawkesq/model.hpp"

namespace hawkesq::oracle {

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value
// Q(sqrt(n_e) D) with Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
inline double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double x = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (x < 1e-3) return 1.0;
  double q = 0.0;
  for (int k = 1; k < 200; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(q, 0.0, 1.0);
}

// Pearson chi-square goodness of fit against Poisson(mean), pooling the
// cells with expected count below 5 into the two tails.
inline double poisson_chi_square_pvalue(const std::vector<std::size_t>& samples, double mean) {
  const std::size_t n = samples.size();
  std::size_t top = 0;
  for (auto s : samples) top = std::max(top, s);
  std::vector<double> obs(top + 2, 0.0), expct(top + 2, 0.0);
  for (auto s : samples) obs[s] += 1.0;
  double p = std::exp(-mean), cum = 0.0;
  for (std::size_t k = 0; k <= top; ++k) {
    expct[k] = n * p;
    cum += p;
    p *= mean / (k + 1.0);
  }
  expct[top + 1] = n * std::max(0.0, 1.0 - cum);
  // pool
  std::vector<double> po, pe;
  double ao = 0.0, ae = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    ao += obs[k];
    ae += expct[k];
    if (ae >= 5.0) {
      po.push_back(ao);
      pe.push_back(ae);
      ao = ae = 0.0;
    }
  }
  if (po.empty()) return 1.0;
  if (ae > 0.0 || ao > 0.0) {
    po.back() += ao;
    pe.back() += ae;
  }
  double chi = 0.0;
  for (std::size_t k = 0; k < po.size(); ++k) chi += (po[k] - pe[k]) * (po[k] - pe[k]) / pe[k];
  const double dof = static_cast<double>(po.size()) - 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi));
}

// Independently derived first and second moment ODEs for exponential kernel
// and service: state (E N, E Lambda, E N(N-1), E Lambda N, E Lambda^2).
inline std::array<double, 5> moment_ode_oracle(const ModelConfig& cfg, double t) {
  const double lam = cfg.lambda_inf(), r = cfg.kernel().rate(), mu = cfg.service().rate();
  const double b1 = *cfg.marks().moment(1), b2 = *cfg.marks().moment(2), r0 = r - b1;
  using state = std::array<double, 5>;
  state y{0.0, lam, 0.0, 0.0, lam * lam};
  auto rhs = [&](const state& x, state& d, double) {
    d[0] = -mu * x[0] + x[1];
    d[1] = -r0 * x[1] + lam * r;
    d[2] = -2.0 * mu * x[2] + 2.0 * x[3];
    d[3] = -(mu + r0) * x[3] + x[4] + b1 * x[1] + lam * r * x[0];
    d[4] = -2.0 * r0 * x[4] + (b2 + 2.0 * lam * r) * x[1];
  };
  if (t > 0.0) {
    namespace ode = boost::numeric::odeint;
    ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<state>()), rhs, y, 0.0, t,
                            1e-3);
  }
  return y;
}

}  // namespace hawkesq::oracle
