#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "markov_transform.hpp"
#include "model.hpp"
#include "special_functions.hpp"

namespace hawkesq {

// Joint factorial moments of order q at time t:
// entries[k] = E Lambda^k(t) Nbar^{q-k}(t) for k = 0..q+1, where
// Nbar^m = N(N-1)...(N-m) (m+1 factors) and Nbar^{-1} = 1.
struct MomentVector {
  int q = 0;
  double t = 0.0;
  std::vector<double> entries;
};

struct MomentSystem {
  int q = 0;
  Eigen::MatrixXd a1;           // upper bidiagonal
  Eigen::VectorXd eigenvalues;  // diagonal of a1
  double lambda_inf = 0.0;
  double r = 0.0;
  std::vector<double> b;  // b[g] = E B^g, g = 0..q+1

  // Forcing vector of order q given all lower orders at the same instant.
  Eigen::VectorXd forcing(const std::vector<std::vector<double>>& lower) const {
    auto m = [&](int g, int p) -> double {  // E Lambda^g Nbar^p
      const int order = g + p;
      if (order < 0) return 1.0;
      return lower[static_cast<std::size_t>(order)][static_cast<std::size_t>(g)];
    };
    Eigen::VectorXd out = Eigen::VectorXd::Zero(q + 2);
    for (int k = 0; k <= q + 1; ++k) {
      double acc = 0.0;
      if (k >= 1) {
        acc += k * lambda_inf * r * m(k - 1, q - k);
        if (q - k + 1 >= 1) acc += (q - k + 1) * k * b[1] * m(k, q - k - 1);
      }
      for (int j = 0; j + 2 <= k; ++j) {
        const double c = special::binomial(k, j) * b[static_cast<std::size_t>(k - j)];
        if (c == 0.0) continue;
        double inner = m(j + 1, q - k);
        if (q - k + 1 >= 1) inner += (q - k + 1) * m(j + 1, q - k - 1);
        acc += c * inner;
      }
      out(k) = acc;
    }
    return out;
  }
};

inline MomentSystem build_moment_system(const ModelConfig& cfg, int q) {
  require_markovian(cfg);
  if (q < 0) throw precondition_error("moment order must be >= 0");
  MomentSystem sys;
  sys.q = q;
  sys.lambda_inf = cfg.lambda_inf();
  sys.r = cfg.kernel().rate();
  sys.b.resize(static_cast<std::size_t>(q + 2));
  for (int g = 0; g <= q + 1; ++g) sys.b[static_cast<std::size_t>(g)] = cfg.marks().require_moment(g);
  const double mu = cfg.service().rate();
  const double r0 = sys.r - sys.b[1];
  const int n = q + 2;
  sys.a1 = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    sys.a1(k, k) = -((q + 1 - k) * mu + k * r0);
    if (k + 1 < n) sys.a1(k, k + 1) = q + 1 - k;
  }
  sys.eigenvalues = sys.a1.diagonal();
  return sys;
}

// Matrix exponential exp(A t) via the interpolation product formula
// sum_i e^{l_i t} prod_{j != i} (A - l_j)/(l_i - l_j) for distinct real
// eigenvalues l; falls back to a general algorithm when two eigenvalues are
// closer than 1e-8.
inline Eigen::MatrixXd interpolation_expm(const Eigen::MatrixXd& a, const Eigen::VectorXd& eig, double t) {
  const Eigen::Index n = a.rows();
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) gap = std::min(gap, std::abs(eig(i) - eig(j)));
  if (gap < 1e-8) return (a * t).exp();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd p = id;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) p = p * (a - eig(j) * id) / (eig(i) - eig(j));
    out += std::exp(eig(i) * t) * p;
  }
  return out;
}

// Solution of z' = A z + f with constant f: e^{At} z0 + int_0^t e^{A(t-s)} f ds,
// the integral taken eigenvalue by eigenvalue through the same projectors.
inline Eigen::VectorXd affine_solution(const Eigen::MatrixXd& a, const Eigen::VectorXd& eig, const Eigen::VectorXd& f,
                                       const Eigen::VectorXd& z0, double t) {
  const Eigen::Index n = a.rows();
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) gap = std::min(gap, std::abs(eig(i) - eig(j)));
  if (gap < 1e-8) {
    // augmented-matrix trick: exp([[A, f],[0, 0]] t)
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n + 1, n + 1);
    big.topLeftCorner(n, n) = a;
    big.topRightCorner(n, 1) = f;
    const Eigen::MatrixXd e = (big * t).exp();
    return e.topLeftCorner(n, n) * z0 + e.topRightCorner(n, 1);
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd p = id;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) p = p * (a - eig(j) * id) / (eig(i) - eig(j));
    const double l = eig(i);
    const double w = (l == 0.0) ? t : std::expm1(l * t) / l;
    out += std::exp(l * t) * (p * z0) + w * (p * f);
  }
  return out;
}

// Order-0 moments [E N(t), E Lambda(t)] from the matrix-exponential solution
// formula (the order-0 forcing is constant).
inline MomentVector order_zero_solution(const ModelConfig& cfg, double t) {
  const auto sys = build_moment_system(cfg, 0);
  Eigen::VectorXd z0(2);
  z0 << 0.0, cfg.lambda_inf();
  const Eigen::VectorXd f = sys.forcing({});
  const Eigen::VectorXd z = affine_solution(sys.a1, sys.eigenvalues, f, z0, t);
  return {0, t, {z(0), z(1)}};
}

// Integrates orders 0..q jointly with fixed-step RK4 and returns every order.
inline std::vector<MomentVector> transient_moments(const ModelConfig& cfg, int q, double t,
                                                   double step = default_ode_step) {
  if (q < 0) throw precondition_error("moment order must be >= 0");
  std::vector<MomentSystem> systems;
  for (int p = 0; p <= q; ++p) systems.push_back(build_moment_system(cfg, p));
  const std::size_t n = detail::step_count(t, step);

  using State = std::vector<std::vector<double>>;
  State y(static_cast<std::size_t>(q + 1));
  for (int p = 0; p <= q; ++p) {
    y[p].assign(static_cast<std::size_t>(p + 2), 0.0);
    y[p].back() = std::pow(cfg.lambda_inf(), p + 1);
  }
  auto rhs = [&](const State& s) {
    State d(s.size());
    for (int p = 0; p <= q; ++p) {
      const auto& sys = systems[p];
      const Eigen::Map<const Eigen::VectorXd> v(s[p].data(), p + 2);
      const Eigen::VectorXd dv = sys.a1 * v + sys.forcing(s);
      d[p].assign(dv.data(), dv.data() + dv.size());
    }
    return d;
  };
  auto axpy = [](const State& a, double h, const State& b) {
    State out = a;
    for (std::size_t p = 0; p < a.size(); ++p)
      for (std::size_t k = 0; k < a[p].size(); ++k) out[p][k] += h * b[p][k];
    return out;
  };
  const double h = n == 0 ? 0.0 : t / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State k1 = rhs(y);
    const State k2 = rhs(axpy(y, 0.5 * h, k1));
    const State k3 = rhs(axpy(y, 0.5 * h, k2));
    const State k4 = rhs(axpy(y, h, k3));
    for (std::size_t p = 0; p < y.size(); ++p)
      for (std::size_t k = 0; k < y[p].size(); ++k)
        y[p][k] += h / 6.0 * (k1[p][k] + 2.0 * k2[p][k] + 2.0 * k3[p][k] + k4[p][k]);
  }
  std::vector<MomentVector> out;
  for (int p = 0; p <= q; ++p) out.push_back({p, t, y[p]});
  return out;
}

struct FirstMoments {
  double mean_lambda = 0.0;
  double mean_n = 0.0;
};

struct SecondMoments {
  double lambda_sq = 0.0;      // E Lambda^2
  double lambda_times_n = 0.0; // E Lambda N
  double n_sq = 0.0;           // E N^2 (raw, not factorial)
};

namespace detail {

inline bool near(double a, double b) { return std::abs(a - b) <= 1e-8 * std::max({1.0, std::abs(a), std::abs(b)}); }

inline SecondMoments second_from_hierarchy(const std::vector<MomentVector>& mv) {
  return {mv[1].entries[2], mv[1].entries[1], mv[1].entries[0] + mv[0].entries[0]};
}

}  // namespace detail

inline FirstMoments first_moments_closed(const ModelConfig& cfg, double t) {
  require_markovian(cfg);
  const double lam = cfg.lambda_inf();
  const double r = cfg.kernel().rate();
  const double mu = cfg.service().rate();
  const double b1 = cfg.marks().mean();
  const double r0 = r - b1;
  if (detail::near(r0, 0.0) || detail::near(mu, 0.0) || detail::near(mu, r0)) {
    const auto mv = transient_moments(cfg, 0, t);
    return {mv[0].entries[1], mv[0].entries[0]};
  }
  const double el = lam * r / r0 - lam * b1 / r0 * std::exp(-r0 * t);
  const double en = lam * r / (mu * r0) - lam * b1 / (r0 * (mu - r0)) * std::exp(-r0 * t) +
                    lam * (r - mu) / (mu * (mu - r0)) * std::exp(-mu * t);
  return {el, en};
}

inline SecondMoments second_moments_closed(const ModelConfig& cfg, double t) {
  require_markovian(cfg);
  const double lam = cfg.lambda_inf();
  const double r = cfg.kernel().rate();
  const double mu = cfg.service().rate();
  const double b1 = cfg.marks().require_moment(1);
  const double b2 = cfg.marks().require_moment(2);
  const double r0 = r - b1;
  if (detail::near(r0, 0.0) || detail::near(mu, 0.0) || detail::near(mu, r0) || detail::near(mu, 2.0 * r0) ||
      detail::near(2.0 * mu, r0))
    return detail::second_from_hierarchy(transient_moments(cfg, 1, t));

  const double lr = lam * r;
  const double a_l = lr * (b2 + 2.0 * lr) / (2.0 * r0 * r0);
  const double b_l = lam * b1 * (b2 + 2.0 * lr) / (r0 * r0);
  const double c0 = lr / (r0 * (mu + r0)) * ((b2 + 2.0 * lr) / (2.0 * r0) + (lr + mu * b1) / mu);
  const double c_mu = lam * lr * (r - mu) / (mu * r0 * (mu - r0));
  const double c_r = lam * b1 / (mu * r0) * (b1 + (b2 + 2.0 * lr) / r0 + lr / (mu - r0));
  const double e0 = lr / (mu * r0 * (mu + r0)) * ((b2 + 2.0 * lr) / (2.0 * r0) + (mu * (mu + r) + lr) / mu);
  const double e_mu = lam * (r - mu) * (mu * r0 + 2.0 * lr) / (mu * mu * r0 * (mu - r0));
  const double e_r = 2.0 * lam * b1 / (mu * r0 * (2.0 * mu - r0)) *
                     (b1 + (b2 + 2.0 * lr) / r0 + lr / (mu - r0) + 0.5 * mu * (2.0 * mu - r0) / (mu - r0));

  // D1, D2, D3 from E Lambda^2(0) = lam^2, E Lambda N(0) = 0, E N^2(0) = 0.
  Eigen::Matrix3d m;
  m << 1.0, 0.0, 0.0,
       1.0 / (mu - r0), 1.0, 0.0,
       1.0 / ((mu - r0) * (mu - r0)), 2.0 / (mu - r0), 1.0;
  Eigen::Vector3d rhs(lam * lam - a_l + b_l, -(c0 + c_mu - c_r), -(e0 + e_mu - e_r));
  const Eigen::Vector3d d = m.partialPivLu().solve(rhs);

  const double er0 = std::exp(-r0 * t);
  const double emu = std::exp(-mu * t);
  SecondMoments out;
  out.lambda_sq = a_l - b_l * er0 + d(0) * er0 * er0;
  out.lambda_times_n = c0 + c_mu * emu - c_r * er0 + d(0) / (mu - r0) * er0 * er0 + d(1) * emu * er0;
  out.n_sq = e0 + e_mu * emu - e_r * er0 + d(0) / ((mu - r0) * (mu - r0)) * er0 * er0 +
             2.0 * d(1) / (mu - r0) * emu * er0 + d(2) * emu * emu;
  return out;
}

inline double stationary_lambda_moment(const ModelConfig& cfg, int g) {
  if (!cfg.kernel().is_exponential()) throw config_error("stationary moments need an exponential kernel");
  if (g < 0) throw precondition_error("moment order must be >= 0");
  require_stable(cfg);
  const double lam = cfg.lambda_inf();
  const double r = cfg.kernel().rate();
  std::vector<double> bm(static_cast<std::size_t>(g + 1), 1.0);
  for (int k = 1; k <= g; ++k) bm[k] = cfg.marks().require_moment(k);
  const double r0 = r - cfg.marks().require_moment(1);
  std::vector<double> el(static_cast<std::size_t>(g + 1), 1.0);
  for (int k = 1; k <= g; ++k) {
    double acc = k * lam * r * el[k - 1];
    for (int j = 0; j + 2 <= k; ++j) acc += special::binomial(k, j) * bm[k - j] * el[j + 1];
    el[k] = acc / (k * r0);
  }
  return el[g];
}

struct StationarySummary {
  double mean_lambda = 0.0;
  double mean_n = 0.0;
  double var_lambda = 0.0;
  double var_n = 0.0;
  double cov_n_lambda = 0.0;
  double corr_n_lambda = 0.0;
};

inline StationarySummary stationary_summary(const ModelConfig& cfg) {
  require_markovian(cfg);
  require_stable(cfg);
  const double lam = cfg.lambda_inf();
  const double r = cfg.kernel().rate();
  const double mu = cfg.service().rate();
  if (!(mu > 0.0)) throw precondition_error("stationary occupancy needs finite service times (mu > 0)");
  const double b1 = cfg.marks().require_moment(1);
  const double b2 = cfg.marks().require_moment(2);
  const double r0 = r - b1;
  StationarySummary s;
  s.mean_lambda = lam * r / r0;
  s.mean_n = s.mean_lambda / mu;
  s.var_lambda = lam * r * b2 / (2.0 * r0 * r0);
  s.var_n = lam * r / (2.0 * r0 * r0) * (b2 + 2.0 * (mu + r) * r0) / (mu * (mu + r0));
  s.cov_n_lambda = lam * r / (2.0 * r0 * r0) * (b2 + 2.0 * r0 * b1) / (mu + r0);
  s.corr_n_lambda = (b2 + 2.0 * r0 * b1) / std::sqrt(b2 * (b2 + 2.0 * r0 * (mu + r))) * std::sqrt(mu / (mu + r0));
  return s;
}

}  // namespace hawkesq
