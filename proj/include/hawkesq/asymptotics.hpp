#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cluster.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace hawkesq {

// Regular variation P(B > x) ~ ell_inf x^{-alpha} with a constant slowly
// varying part.
struct HeavyTailSpec {
  double alpha = 1.5;
  double ell_inf = 1.0;

  void validate() const {
    if (!(alpha > 1.0 && alpha < 2.0)) throw config_error("tail index alpha must lie in (1, 2)");
    if (!(ell_inf > 0.0) || !std::isfinite(ell_inf)) throw config_error("tail constant must be > 0");
  }

  static HeavyTailSpec from_marks(const MarkDistribution& marks) {
    HeavyTailSpec s{marks.tail_index(), marks.tail_constant()};
    s.validate();
    return s;
  }
};

enum class VolterraMethod { direct_volterra, neumann_series, closed_form };

struct VolterraSolution {
  TimeGrid grid;
  std::vector<double> values;
  VolterraMethod method = VolterraMethod::direct_volterra;
  std::size_t terms = 0;       // Neumann terms used
  double series_bound = 0.0;   // rho^{n+1} / (1 - rho), Neumann only
};

namespace detail {

// Trapezoid convolution (k * f)(u_i) = int_0^{u_i} k(s) f(u_i - s) ds on a grid.
inline std::vector<double> convolve(const TimeGrid& grid, const std::vector<double>& k, const std::vector<double>& f) {
  const std::size_t n = grid.size();
  const double dt = grid.step();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double acc = 0.5 * (k[0] * f[i] + k[i] * f[0]);
    for (std::size_t j = 1; j < i; ++j) acc += k[j] * f[i - j];
    out[i] = acc * dt;
  }
  return out;
}

// R = F + c (h * R), product-trapezoid marching.
inline std::vector<double> march_volterra(const TimeGrid& grid, const std::vector<double>& forcing, double c,
                                          const std::vector<double>& h) {
  const std::size_t n = grid.size();
  const double dt = grid.step();
  std::vector<double> r(n, 0.0);
  r[0] = forcing[0];
  const double diag = 1.0 - 0.5 * c * dt * h[0];
  if (!(diag > 0.0)) throw numeric_error("Volterra marching step too coarse for the kernel");
  for (std::size_t i = 1; i < n; ++i) {
    double acc = 0.5 * h[i] * r[0];
    for (std::size_t j = 1; j < i; ++j) acc += h[j] * r[i - j];
    r[i] = (forcing[i] + c * dt * acc) / diag;
  }
  return r;
}

inline std::vector<double> sample(const TimeGrid& grid, auto&& fn) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = fn(grid.point(i));
  return out;
}

}  // namespace detail

// R1(u) = J(u) + b1 int_0^u h(s) R1(u - s) ds.
inline VolterraSolution r1_volterra(const ModelConfig& cfg, double t, double grid_step,
                                    VolterraMethod method = VolterraMethod::direct_volterra) {
  const auto load = load_summary(cfg);
  if (!load.stable) throw instability_error("R1 needs a stable model (rho < 1)");
  const TimeGrid grid = TimeGrid::with_step(t, grid_step);
  const auto h = detail::sample(grid, [&](double u) { return cfg.kernel().density(u); });
  const auto j = detail::sample(grid, [&](double u) { return cfg.service().survival(u); });
  const double b1 = cfg.marks().mean();
  VolterraSolution out;
  out.grid = grid;
  out.method = method;
  if (method == VolterraMethod::closed_form) {
    out.values = detail::sample(grid, [&](double u) {
      require_markovian(cfg);
      const double r = cfg.kernel().rate(), mu = cfg.service().rate(), r0 = r - b1;
      return ((r - mu) * std::exp(-mu * u) - b1 * std::exp(-r0 * u)) / (r0 - mu);
    });
  } else if (method == VolterraMethod::direct_volterra) {
    out.values = detail::march_volterra(grid, j, b1, h);
  } else {
    std::vector<double> r = j;
    std::size_t n = 0;
    for (; n < 10000; ++n) {
      const auto conv = detail::convolve(grid, h, r);
      double diff = 0.0;
      std::vector<double> next(r.size());
      for (std::size_t i = 0; i < r.size(); ++i) {
        next[i] = j[i] + b1 * conv[i];
        diff = std::max(diff, std::abs(next[i] - r[i]));
      }
      r.swap(next);
      if (diff <= 1e-15) break;
    }
    out.values = std::move(r);
    out.terms = n + 1;
    out.series_bound = std::pow(load.rho, static_cast<double>(n + 2)) / (1.0 - load.rho);
  }
  return out;
}

// [(r - mu) e^{-mu u} - b1 e^{-r0 u}] / (r0 - mu) for exponential h and J.
inline double r1_closed_exp(const ModelConfig& cfg, double u) {
  require_markovian(cfg);
  const double r = cfg.kernel().rate(), mu = cfg.service().rate(), b1 = cfg.marks().mean(), r0 = r - b1;
  if (std::abs(r0 - mu) <= 1e-10 * std::max(1.0, mu)) {
    const auto sol = r1_volterra(cfg, std::max(u, 1e-9), 1e-4);
    return sol.values.back();
  }
  return ((r - mu) * std::exp(-mu * u) - b1 * std::exp(-r0 * u)) / (r0 - mu);
}

// int_0^inf R1 = E J / (1 - rho).
inline double r1_integral_infty(const ModelConfig& cfg) {
  if (!cfg.service().is_exponential()) throw config_error("closed form needs exponential service");
  const auto load = load_summary(cfg);
  if (!load.stable) throw instability_error("integral of R1 diverges for rho >= 1");
  return (1.0 / cfg.service().rate()) / (1.0 - load.rho);
}

// Closed form of int_0^inf R_alpha through the Beta function. The integrand
// (h * R1)^alpha is symmetric in (mu, r0), so the larger of the two plays the
// role of mu in the substitution.
inline double ralpha_integral_infty(const ModelConfig& cfg, const HeavyTailSpec& spec) {
  require_markovian(cfg);
  spec.validate();
  const auto load = load_summary(cfg);
  if (!load.stable) throw instability_error("integral of R_alpha diverges for rho >= 1");
  const double mu = cfg.service().rate();
  const double r0 = *load.r0;
  if (std::abs(mu - r0) <= 1e-12 * std::max(mu, r0)) throw precondition_error("closed form has a pole at mu = r0");
  const double hi = std::max(mu, r0), lo = std::min(mu, r0);
  const double a = spec.alpha;
  const double p = a * lo / (hi - lo);
  return std::tgamma(1.0 - a) * spec.ell_inf / ((1.0 - load.rho) * std::pow(hi - lo, a + 1.0)) *
         ((a + 1.0) * hi - lo) / (a * lo) * std::beta(p + 1.0, a + 1.0);
}

// R_alpha = Gamma(1-alpha) ell (h * R1)^alpha + b1 (h * R_alpha).
inline VolterraSolution ralpha_volterra(const ModelConfig& cfg, const HeavyTailSpec& spec, double t, double grid_step) {
  spec.validate();
  const auto r1 = r1_volterra(cfg, t, grid_step);
  const auto& grid = r1.grid;
  const auto h = detail::sample(grid, [&](double u) { return cfg.kernel().density(u); });
  const auto hr = detail::convolve(grid, h, r1.values);
  std::vector<double> forcing(grid.size());
  const double c = std::tgamma(1.0 - spec.alpha) * spec.ell_inf;
  for (std::size_t i = 0; i < forcing.size(); ++i) forcing[i] = c * std::pow(std::max(hr[i], 0.0), spec.alpha);
  VolterraSolution out;
  out.grid = grid;
  out.values = detail::march_volterra(grid, forcing, cfg.marks().mean(), h);
  return out;
}

struct TailExpansion {
  double linear_coeff = 0.0;  // lambda_inf int_0^t R1
  double alpha_coeff = 0.0;   // lambda_inf int_0^t R_alpha (<= 0)
  double alpha = 0.0;
};

inline TailExpansion tail_pgf_expansion(const ModelConfig& cfg, const HeavyTailSpec& spec, double t, double grid_step) {
  const auto r1 = r1_volterra(cfg, t, grid_step);
  const auto ra = ralpha_volterra(cfg, spec, t, grid_step);
  return {cfg.lambda_inf() * trapezoid(r1.grid, r1.values), cfg.lambda_inf() * trapezoid(ra.grid, ra.values),
          spec.alpha};
}

// (E z^{N(t)} - 1 + linear_coeff (1 - z)) / (1 - z)^alpha from the cluster
// route, iterated to convergence on the same grid as the expansion.
inline double tail_residual_ratio(const ModelConfig& cfg, const HeavyTailSpec& spec, double t, double one_minus_z,
                                  const TailExpansion& ex, unsigned grid_exponent = 12) {
  const ClusterOperator op(cfg, cluster_grid(t, grid_exponent));
  std::vector<double> gr, gi;
  const auto eta = op.iterate(1.0 - one_minus_z, 500, Seed::one, 1e-17, &gr, &gi);
  (void)eta;
  const double pgf_minus_one = std::expm1(op.log_pgf_from_complement(gr, gi).real());
  return (pgf_minus_one + ex.linear_coeff * one_minus_z) / std::pow(one_minus_z, spec.alpha);
}

struct GammaLimit {
  double shape = 0.0;
  double rate = 0.0;

  double lst(double s) const { return std::pow(rate / (rate + s), shape); }
  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
};

enum class HeavyTrafficTarget { lambda, occupancy };

inline GammaLimit heavy_traffic_gamma(const ModelConfig& cfg, HeavyTrafficTarget target) {
  if (!cfg.kernel().is_exponential()) throw config_error("heavy-traffic limit needs an exponential kernel");
  const double b2 = cfg.marks().require_moment(2);
  const double r = cfg.kernel().rate();
  GammaLimit g{2.0 * r * cfg.lambda_inf() / b2, 2.0 * r / b2};
  if (target == HeavyTrafficTarget::occupancy) {
    if (!cfg.service().is_exponential()) throw config_error("occupancy heavy-traffic limit needs exponential service");
    g.rate *= cfg.service().rate();
  }
  return g;
}

// E exp(-s Lambda) in steady state:
// exp(-lambda_inf r int_0^s u / (r u + beta(u) - 1) du).
inline double stationary_lambda_lst(const ModelConfig& cfg, double s) {
  if (!cfg.kernel().is_exponential()) throw config_error("stationary intensity LST needs an exponential kernel");
  if (!(s >= 0.0)) throw precondition_error("LST argument must be >= 0");
  const auto load = load_summary(cfg);
  if (!load.stable) throw instability_error("stationary intensity needs rho < 1");
  if (s == 0.0) return 1.0;
  const double r = cfg.kernel().rate();
  const double r0 = *load.r0;
  auto integrand = [&](double u) {
    if (u < 1e-12) return 1.0 / r0;
    const double denom = r * u - cfg.marks().one_minus_lst(u).real();
    return u / denom;
  };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, s, 15, 1e-14);
  return std::exp(-cfg.lambda_inf() * r * integral);
}

// Copy of cfg with marks rescaled so that the load equals rho.
inline ModelConfig with_load(const ModelConfig& cfg, double rho) {
  if (!(rho > 0.0)) throw config_error("target load must be > 0");
  const double current = load_summary(cfg).rho;
  if (!(current > 0.0)) throw precondition_error("cannot rescale marks of a model without excitation");
  return cfg.with_marks(cfg.marks().scaled(rho / current));
}

// sup over the s grid of |E exp(-s (1-rho) Lambda) - Gamma LST(s)|, with the
// Gamma parameters taken at cfg's own b2.
inline double lambda_heavy_traffic_gap(const ModelConfig& cfg, const std::vector<double>& s_grid) {
  const double rho = load_summary(cfg).rho;
  const auto g = heavy_traffic_gamma(cfg, HeavyTrafficTarget::lambda);
  double gap = 0.0;
  for (double s : s_grid) gap = std::max(gap, std::abs(stationary_lambda_lst(cfg, s * (1.0 - rho)) - g.lst(s)));
  return gap;
}

}  // namespace hawkesq
