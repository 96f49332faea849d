#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace hawkesq {

enum class Seed { one, zero };

struct ClusterSettings {
  unsigned grid_exponent = 12;  // grid step = t * 2^-grid_exponent
  std::size_t n_iter = 10;
  double tolerance = 0.0;  // stop early once sup|f_{n+1} - f_n| < tolerance (0: never)
};

// Samples of eta(u, z) = E z^{S(u)} after some number of fixed-point steps.
struct EtaGrid {
  cplx z = 0.0;
  TimeGrid grid;
  std::vector<cplx> values;
  std::size_t iteration_count = 0;
  double apriori_error = 1.0;           // (C t)^n / n!, C = 2 b1 H(inf)
  std::vector<double> differences;      // sup|f_{k+1} - f_k| for each step taken
};

struct BoundPair {
  EtaGrid upper_eta;  // seeded with f = 1
  EtaGrid lower_eta;  // seeded with f = 0
  std::size_t n = 0;
};

inline double apriori_bound(const ModelConfig& cfg, double t, std::size_t n) {
  const double c = 2.0 * cfg.marks().mean() * cfg.kernel().total_mass();
  if (n == 0) return 1.0;
  if (c * t == 0.0) return 0.0;
  return std::exp(static_cast<double>(n) * std::log(c * t) - std::lgamma(static_cast<double>(n) + 1.0));
}

// The map f -> (1 - J(u) + J(u) z) beta(int_0^u h(s)(1 - f(u-s)) ds) on a fixed
// uniform grid. Internally it works with g = 1 - f, which keeps full relative
// accuracy when f is close to 1.
class ClusterOperator {
 public:
  ClusterOperator(const ModelConfig& cfg, const TimeGrid& grid) : cfg_(cfg), grid_(grid) {
    const double hb = cfg.marks().mean() * cfg.kernel().total_mass();
    if (!std::isfinite(hb)) throw precondition_error("cluster fixed point needs b1 * H(inf) < inf");
    h_.resize(grid.size());
    surv_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      h_[i] = cfg.kernel().density(grid.point(i));
      surv_[i] = cfg.service().survival(grid.point(i));
    }
  }

  const TimeGrid& grid() const { return grid_; }
  const ModelConfig& config() const { return cfg_; }

  // g -> 1 - phi(1 - g)
  void apply_complement(const std::vector<double>& g_re, const std::vector<double>& g_im, cplx z,
                        std::vector<double>& out_re, std::vector<double>& out_im) const {
    const std::size_t n = grid_.size();
    const double dt = grid_.step();
    const cplx one_minus_z = 1.0 - z;
    out_re.assign(n, 0.0);
    out_im.assign(n, 0.0);
    const double* h = h_.data();
    for (std::size_t i = 0; i < n; ++i) {
      double cr = 0.0, ci = 0.0;
      if (i > 0) {
        const double* gr = g_re.data();
        const double* gi = g_im.data();
        for (std::size_t j = 1; j < i; ++j) {
          cr += h[j] * gr[i - j];
          ci += h[j] * gi[i - j];
        }
        cr += 0.5 * (h[0] * gr[i] + h[i] * gr[0]);
        ci += 0.5 * (h[0] * gi[i] + h[i] * gi[0]);
        cr *= dt;
        ci *= dt;
      }
      const cplx m = cfg_.marks().one_minus_lst_unchecked(cplx(std::max(cr, 0.0), ci));
      const cplx g_new = m + surv_[i] * one_minus_z * (1.0 - m);
      out_re[i] = g_new.real();
      out_im[i] = g_new.imag();
    }
  }

  GridFunction<cplx> apply(const GridFunction<cplx>& f, cplx z) const {
    if (f.grid != grid_) throw precondition_error("grid function does not live on the operator grid");
    if (f.values.size() != grid_.size()) throw precondition_error("grid function has the wrong number of samples");
    std::vector<double> gr(f.values.size()), gi(f.values.size()), outr, outi;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      gr[i] = 1.0 - f.values[i].real();
      gi[i] = -f.values[i].imag();
    }
    apply_complement(gr, gi, z, outr, outi);
    GridFunction<cplx> out(grid_, 0.0);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = cplx(1.0 - outr[i], -outi[i]);
    return out;
  }

  // n steps of the fixed-point map from a constant seed. When keep_complement
  // is set, the 1 - f samples are returned through g_re/g_im too.
  EtaGrid iterate(cplx z, std::size_t n_iter, Seed seed, double tolerance = 0.0, std::vector<double>* g_re = nullptr,
                  std::vector<double>* g_im = nullptr) const {
    if (std::abs(z) > 1.0 + 1e-12) throw precondition_error("cluster transform needs |z| <= 1");
    const std::size_t n = grid_.size();
    std::vector<double> gr(n, seed == Seed::one ? 0.0 : 1.0), gi(n, 0.0), nr, ni;
    EtaGrid out;
    out.z = z;
    out.grid = grid_;
    std::size_t k = 0;
    for (; k < n_iter; ++k) {
      apply_complement(gr, gi, z, nr, ni);
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::hypot(nr[i] - gr[i], ni[i] - gi[i]));
      out.differences.push_back(diff);
      gr.swap(nr);
      gi.swap(ni);
      if (tolerance > 0.0 && diff < tolerance) {
        ++k;
        break;
      }
    }
    out.iteration_count = k;
    out.apriori_error = apriori_bound(cfg_, grid_.horizon(), k);
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = cplx(1.0 - gr[i], -gi[i]);
    if (g_re) *g_re = gr;
    if (g_im) *g_im = gi;
    return out;
  }

  // log E z^{N(t)} = -lambda_inf * int_0^t (1 - eta) du (trapezoid).
  cplx log_pgf_from_complement(const std::vector<double>& g_re, const std::vector<double>& g_im) const {
    const std::size_t n = grid_.size();
    double ar = 0.5 * (g_re[0] + g_re[n - 1]);
    double ai = 0.5 * (g_im[0] + g_im[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      ar += g_re[i];
      ai += g_im[i];
    }
    return -cfg_.lambda_inf() * grid_.step() * cplx(ar, ai);
  }

  cplx log_pgf(const EtaGrid& eta) const {
    if (eta.grid != grid_) throw precondition_error("eta grid does not match the operator grid");
    std::vector<double> gr(eta.values.size()), gi(eta.values.size());
    for (std::size_t i = 0; i < gr.size(); ++i) {
      gr[i] = 1.0 - eta.values[i].real();
      gi[i] = -eta.values[i].imag();
    }
    return log_pgf_from_complement(gr, gi);
  }

  // sup_u |phi(f)(u) - f(u)|
  double fixed_point_residual(const EtaGrid& eta) const {
    GridFunction<cplx> f;
    f.grid = eta.grid;
    f.values = eta.values;
    const auto next = apply(f, eta.z);
    double out = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) out = std::max(out, std::abs(next.values[i] - f.values[i]));
    return out;
  }

 private:
  ModelConfig cfg_;
  TimeGrid grid_;
  std::vector<double> h_;
  std::vector<double> surv_;
};

inline TimeGrid cluster_grid(double t, unsigned grid_exponent) {
  if (!(t > 0.0) || !std::isfinite(t)) throw config_error("time horizon must be finite and > 0");
  if (grid_exponent > 20) throw config_error("grid exponent too large");
  return TimeGrid(t, std::size_t{1} << grid_exponent);
}

inline GridFunction<cplx> phi_apply(const ModelConfig& cfg, const GridFunction<cplx>& f, cplx z) {
  return ClusterOperator(cfg, f.grid).apply(f, z);
}

inline EtaGrid solve_eta(const ModelConfig& cfg, double t, cplx z, std::size_t n_iter, Seed seed,
                         const ClusterSettings& settings = {}) {
  const ClusterOperator op(cfg, cluster_grid(t, settings.grid_exponent));
  return op.iterate(z, n_iter, seed, settings.tolerance);
}

inline cplx pgf_N_cluster(const ModelConfig& cfg, double t, cplx z, std::size_t n_iter, Seed seed,
                          const ClusterSettings& settings = {}) {
  const ClusterOperator op(cfg, cluster_grid(t, settings.grid_exponent));
  std::vector<double> gr, gi;
  op.iterate(z, n_iter, seed, settings.tolerance, &gr, &gi);
  return std::exp(op.log_pgf_from_complement(gr, gi));
}

inline BoundPair eta_bounds(const ModelConfig& cfg, double t, cplx z, std::size_t n,
                            const ClusterSettings& settings = {}) {
  const ClusterOperator op(cfg, cluster_grid(t, settings.grid_exponent));
  BoundPair out;
  out.upper_eta = op.iterate(z, n, Seed::one);
  out.lower_eta = op.iterate(z, n, Seed::zero);
  out.n = n;
  return out;
}

}  // namespace hawkesq
