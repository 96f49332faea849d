#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "markov_transform.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace hawkesq {

struct InversionSettings {
  double gamma = 4.0;            // target aliasing error 10^-gamma
  std::size_t k_max = 13;
  std::size_t lattice_size = 0;  // K; 0 picks max(64, k_max + 1)
  bool exploit_symmetry = true;  // evaluate only the upper half circle
  std::size_t workers = default_workers();

  std::size_t lattice() const { return lattice_size == 0 ? std::max<std::size_t>(64, k_max + 1) : lattice_size; }
  double radius() const { return std::pow(10.0, -gamma / (2.0 * static_cast<double>(lattice()))); }
  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw config_error("inversion accuracy gamma must be > 0");
    if (lattice() < std::max<std::size_t>(k_max, 1)) throw config_error("lattice size K must be >= max(k_max, 1)");
  }
};

struct PmfEstimate {
  std::vector<double> mass;  // k = 0..k_max, clamped at 0
  std::string method;
  double aliasing_bound = 0.0;
  double max_imag_residue = 0.0;
  double min_raw_mass = 0.0;      // most negative value before clamping (0 if none)
  bool negative_flag = false;     // a raw mass fell below -10 * 10^-gamma
};

struct PmfBounds {
  PmfEstimate point;
  std::vector<double> lower;
  std::vector<double> upper;
};

using PgfEvaluator = std::function<cplx(cplx)>;

// Points on the circle of radius rho_r where the PGF is needed:
// j = 0..K (symmetric mode) or j = 0..2K-1.
inline std::vector<cplx> inversion_lattice(const InversionSettings& s) {
  s.validate();
  const std::size_t k = s.lattice();
  const double rho = s.radius();
  const std::size_t count = s.exploit_symmetry ? k + 1 : 2 * k;
  std::vector<cplx> z(count);
  for (std::size_t j = 0; j < count; ++j)
    z[j] = std::polar(rho, std::numbers::pi * static_cast<double>(j) / static_cast<double>(k));
  return z;
}

// Damped-lattice trapezoid inversion from PGF values on inversion_lattice(s).
inline PmfEstimate invert_from_values(const std::vector<cplx>& values, const InversionSettings& s,
                                      std::string method = "") {
  s.validate();
  const std::size_t kk = s.lattice();
  const double rho = s.radius();
  if (values.size() != (s.exploit_symmetry ? kk + 1 : 2 * kk))
    throw precondition_error("number of PGF values does not match the lattice");
  PmfEstimate out;
  out.method = std::move(method);
  const double damp = std::pow(rho, 2.0 * static_cast<double>(kk));
  out.aliasing_bound = damp / (1.0 - damp);
  const double floor = -10.0 * std::pow(10.0, -s.gamma);
  out.mass.assign(s.k_max + 1, 0.0);
  for (std::size_t k = 0; k <= s.k_max; ++k) {
    cplx acc = 0.0;
    if (s.exploit_symmetry) {
      double re = values[0].real() + ((k % 2 == 0) ? 1.0 : -1.0) * values[kk].real();
      double sum = 0.0;
      for (std::size_t j = 1; j < kk; ++j) {
        const double ang = -std::numbers::pi * static_cast<double>((j * k) % (2 * kk)) / static_cast<double>(kk);
        sum += (values[j] * std::polar(1.0, ang)).real();
      }
      acc = re + 2.0 * sum;
    } else {
      for (std::size_t j = 0; j < 2 * kk; ++j) {
        const double ang = -std::numbers::pi * static_cast<double>((j * k) % (2 * kk)) / static_cast<double>(kk);
        acc += values[j] * std::polar(1.0, ang);
      }
    }
    const double scale = 1.0 / (2.0 * static_cast<double>(kk) * std::pow(rho, static_cast<double>(k)));
    const double re = acc.real() * scale;
    const double im = std::abs(acc.imag() * scale);
    out.max_imag_residue = std::max(out.max_imag_residue, im);
    if (im > 1e-6) throw numeric_error("PGF evaluator violates conjugate symmetry (imaginary residue " +
                                       std::to_string(im) + ")");
    out.min_raw_mass = std::min(out.min_raw_mass, re);
    if (re < floor) out.negative_flag = true;
    out.mass[k] = std::max(re, 0.0);
  }
  return out;
}

inline std::vector<cplx> evaluate_on_lattice(const PgfEvaluator& pgf, const InversionSettings& s) {
  const auto z = inversion_lattice(s);
  std::vector<cplx> values(z.size());
  parallel_for(z.size(), [&](std::size_t j) { values[j] = pgf(z[j]); }, s.workers);
  return values;
}

inline PmfEstimate invert_pgf(const PgfEvaluator& pgf, const InversionSettings& s, std::string method = "") {
  return invert_from_values(evaluate_on_lattice(pgf, s), s, std::move(method));
}

inline std::vector<double> cdf_from_pmf(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) cdf[k] = (acc += pmf[k]);
  return cdf;
}

// Running maximum, then clamp to [0, 1]. Never renormalizes.
inline std::vector<double> monotone_repair(std::vector<double> cdf) {
  double run = 0.0;
  for (double& v : cdf) {
    run = std::max(run, v);
    v = std::clamp(run, 0.0, 1.0);
  }
  return cdf;
}

// Masses implied by F_low <= F <= F_up:
// F_low(k) - F_up(k-1) <= p_k <= F_up(k) - F_low(k-1), lower clamped at 0.
inline std::pair<std::vector<double>, std::vector<double>> pmf_bounds_from_cdf_bounds(
    const std::vector<double>& lower_cdf, const std::vector<double>& upper_cdf, double tolerance = 1e-4) {
  if (lower_cdf.size() != upper_cdf.size()) throw precondition_error("CDF bound vectors differ in length");
  std::vector<double> lo(lower_cdf.size()), up(lower_cdf.size());
  for (std::size_t k = 0; k < lower_cdf.size(); ++k) {
    if (lower_cdf[k] > upper_cdf[k] + tolerance)
      throw numeric_error("CDF bounds cross at k = " + std::to_string(k));
    const double prev_up = k == 0 ? 0.0 : upper_cdf[k - 1];
    const double prev_lo = k == 0 ? 0.0 : lower_cdf[k - 1];
    lo[k] = std::max(0.0, lower_cdf[k] - prev_up);
    up[k] = std::max(0.0, upper_cdf[k] - prev_lo);
  }
  return {lo, up};
}

// Geometric extrapolation of the mass beyond k_max from the last three masses.
inline double geometric_tail_estimate(const std::vector<double>& pmf) {
  if (pmf.size() < 3) return 0.0;
  const std::size_t n = pmf.size();
  if (pmf[n - 2] <= 0.0 || pmf[n - 3] <= 0.0) return 0.0;
  const double q = 0.5 * (pmf[n - 1] / pmf[n - 2] + pmf[n - 2] / pmf[n - 3]);
  if (!(q > 0.0 && q < 1.0)) return 0.0;
  return pmf[n - 1] * q / (1.0 - q);
}

inline PmfEstimate pmf_markov(const ModelConfig& cfg, double t, const InversionSettings& s,
                              double step = default_ode_step) {
  require_markovian(cfg);
  return invert_pgf([&](cplx z) { return pgf_N_markov(cfg, t, z, step); }, s, "markov_ode");
}

struct CdfBounds {
  std::vector<double> lower_cdf;
  std::vector<double> upper_cdf;
  std::vector<double> point_cdf;
  PmfEstimate point;  // inverted directly from the point iterate
};

// Inverts exp(lambda_inf int (f - 1)) for the two extremal iterate chains.
// The seed-one chain (a proper distribution) doubles as the point estimate.
inline CdfBounds cdf_bounds_N(const ModelConfig& cfg, double t, std::size_t n, const InversionSettings& s,
                              const ClusterSettings& cs = {}) {
  const ClusterOperator op(cfg, cluster_grid(t, cs.grid_exponent));
  const auto z = inversion_lattice(s);
  std::vector<cplx> up(z.size()), lo(z.size());
  parallel_for(
      2 * z.size(),
      [&](std::size_t idx) {
        const std::size_t j = idx / 2;
        const Seed seed = idx % 2 == 0 ? Seed::one : Seed::zero;
        std::vector<double> gr, gi;
        op.iterate(z[j], n, seed, 0.0, &gr, &gi);
        (seed == Seed::one ? up : lo)[j] = std::exp(op.log_pgf_from_complement(gr, gi));
      },
      s.workers);
  CdfBounds out;
  out.point = invert_from_values(up, s, "cluster_point");
  const auto lower_pmf = invert_from_values(lo, s, "cluster_lower");
  out.upper_cdf = monotone_repair(cdf_from_pmf(out.point.mass));
  out.lower_cdf = monotone_repair(cdf_from_pmf(lower_pmf.mass));
  out.point_cdf = out.upper_cdf;
  return out;
}

inline PmfBounds pmf_cluster(const ModelConfig& cfg, double t, std::size_t n, const InversionSettings& s,
                             const ClusterSettings& cs = {}) {
  const auto cdfs = cdf_bounds_N(cfg, t, n, s, cs);
  PmfBounds out;
  out.point = cdfs.point;
  auto [lo, up] = pmf_bounds_from_cdf_bounds(cdfs.lower_cdf, cdfs.upper_cdf, 2.0 * std::pow(10.0, -s.gamma));
  out.lower = std::move(lo);
  out.upper = std::move(up);
  return out;
}

}  // namespace hawkesq
