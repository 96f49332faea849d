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

struct CharacteristicPath {
  TimeGrid grid;
  std::vector<cplx> s_values;
  cplx s_integral = 0.0;
};

struct TransformValue {
  cplx value = 1.0;
  std::size_t steps = 0;
  double error_estimate = 0.0;  // Richardson estimate from a half-resolution rerun
};

inline constexpr double default_ode_step = 1e-4;
inline constexpr double characteristic_guard = 1e-8;

namespace detail {

struct CharacteristicEnd {
  cplx s_end;
  cplx integral;
  std::size_t steps;
};

// Classical RK4 on the augmented state (s, int s), all in complex arithmetic.
// The right-hand side is written as (1-z)e^{-mu u} - r s + c(u)(1 - beta(s))
// with c(u) = 1 + (z-1)e^{-mu u}, which is the same ODE without the
// cancellation in 1 - c(u) beta(s) near z = 1, s = 0.
inline CharacteristicEnd integrate_characteristic(const ModelConfig& cfg, double t, cplx z, cplx s0,
                                                  std::size_t steps, std::vector<cplx>* path) {
  const double r = cfg.kernel().rate();
  const double mu = cfg.service().rate();
  const MarkDistribution& marks = cfg.marks();
  const double h = t / static_cast<double>(steps);
  const cplx one_minus_z = 1.0 - z;

  auto rhs = [&](double u, cplx s) {
    if (s.real() < -characteristic_guard * (1.0 + std::abs(s)))
      throw numeric_error("characteristic path left the half-plane Re(s) >= 0");
    const cplx se(std::max(s.real(), 0.0), s.imag());
    const double e = std::exp(-mu * u);
    const cplx c = 1.0 - one_minus_z * e;
    return one_minus_z * e - r * s + c * marks.one_minus_lst_unchecked(se);
  };

  cplx s = s0;
  cplx integral = 0.0;
  if (path) {
    path->assign(steps + 1, 0.0);
    (*path)[0] = s0;
  }
  for (std::size_t i = 0; i < steps; ++i) {
    const double u = t * static_cast<double>(i) / static_cast<double>(steps);
    const cplx k1 = rhs(u, s);
    const cplx k2 = rhs(u + 0.5 * h, s + 0.5 * h * k1);
    const cplx k3 = rhs(u + 0.5 * h, s + 0.5 * h * k2);
    const cplx k4 = rhs(u + h, s + h * k3);
    // the integral component has derivative s, so its stages are the s stages
    const cplx i1 = s;
    const cplx i2 = s + 0.5 * h * k1;
    const cplx i3 = s + 0.5 * h * k2;
    const cplx i4 = s + h * k3;
    integral += h / 6.0 * (i1 + 2.0 * i2 + 2.0 * i3 + i4);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw numeric_error("characteristic ODE diverged");
    if (path) (*path)[i + 1] = s;
  }
  if (s.real() < -characteristic_guard * (1.0 + std::abs(s)))
    throw numeric_error("characteristic path left the half-plane Re(s) >= 0");
  return {s, integral, steps};
}

inline std::size_t step_count(double t, double step) {
  if (!(step > 0.0)) throw config_error("ODE step must be > 0");
  if (!(t >= 0.0) || !std::isfinite(t)) throw config_error("time horizon must be finite and >= 0");
  if (t == 0.0) return 0;
  return static_cast<std::size_t>(std::max(1.0, std::ceil(t / step - 1e-9)));
}

inline void check_transform_args(const ModelConfig& cfg, cplx z, cplx s) {
  require_markovian(cfg);
  if (std::abs(z) > 1.0 + 1e-12) throw precondition_error("transform needs |z| <= 1");
  if (s.real() < 0.0) throw precondition_error("transform needs Re(s) >= 0");
}

inline cplx combine(const ModelConfig& cfg, cplx s_end, cplx integral) {
  const double lam = cfg.lambda_inf();
  return std::exp(-lam * s_end - lam * cfg.kernel().rate() * integral);
}

}  // namespace detail

inline CharacteristicPath solve_characteristic(const ModelConfig& cfg, double t, cplx z, cplx s,
                                               double step = default_ode_step) {
  detail::check_transform_args(cfg, z, s);
  const std::size_t n = detail::step_count(t, step);
  CharacteristicPath out;
  if (n == 0) {
    out.grid = TimeGrid(0.0, 1);
    out.s_values = {s, s};
    return out;
  }
  out.grid = TimeGrid(t, n);
  const auto end = detail::integrate_characteristic(cfg, t, z, s, n, &out.s_values);
  out.s_integral = end.integral;
  return out;
}

inline TransformValue joint_transform(const ModelConfig& cfg, double t, cplx z, cplx s,
                                      double step = default_ode_step) {
  detail::check_transform_args(cfg, z, s);
  const std::size_t n = detail::step_count(t, step);
  TransformValue out;
  if (n == 0) {
    out.value = std::exp(-s * cfg.lambda_inf());
    return out;
  }
  const auto fine = detail::integrate_characteristic(cfg, t, z, s, n, nullptr);
  out.value = detail::combine(cfg, fine.s_end, fine.integral);
  out.steps = n;
  if (n >= 2 && n % 2 == 0) {
    const auto coarse = detail::integrate_characteristic(cfg, t, z, s, n / 2, nullptr);
    out.error_estimate = std::abs(out.value - detail::combine(cfg, coarse.s_end, coarse.integral)) / 15.0;
  }
  return out;
}

// E z^{N(t)} from the characteristic ODE (no diagnostics rerun).
inline cplx pgf_N_markov(const ModelConfig& cfg, double t, cplx z, double step = default_ode_step) {
  detail::check_transform_args(cfg, z, 0.0);
  const std::size_t n = detail::step_count(t, step);
  if (n == 0) return 1.0;
  const auto end = detail::integrate_characteristic(cfg, t, z, 0.0, n, nullptr);
  return detail::combine(cfg, end.s_end, end.integral);
}

}  // namespace hawkesq
