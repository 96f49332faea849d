#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "special_functions.hpp"

namespace hawkesq {

// Excitation function h and its cumulative H(u) = int_0^u h.
class ExcitationKernel {
 public:
  enum class Kind { exponential, tabulated };

  static ExcitationKernel exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw config_error("exponential kernel rate must be > 0");
    ExcitationKernel k;
    k.kind_ = Kind::exponential;
    k.rate_ = rate;
    return k;
  }

  // h sampled at u_i = i * step (linear between samples, zero past the last
  // one). tail_mass is the caller's bound on int h beyond the table; it only
  // enters total_mass().
  static ExcitationKernel tabulated(std::vector<double> samples, double step, double tail_mass = 0.0) {
    if (samples.size() < 2) throw config_error("tabulated kernel needs at least two samples");
    if (!(step > 0.0)) throw config_error("tabulated kernel step must be > 0");
    if (!(tail_mass >= 0.0) || !std::isfinite(tail_mass)) throw config_error("kernel tail mass must be finite and >= 0");
    for (double v : samples)
      if (!(v >= 0.0) || !std::isfinite(v)) throw config_error("kernel samples must be finite and >= 0");
    ExcitationKernel k;
    k.kind_ = Kind::tabulated;
    k.step_ = step;
    k.samples_ = std::move(samples);
    k.tail_ = tail_mass;
    k.cumulative_.assign(k.samples_.size(), 0.0);
    for (std::size_t i = 1; i < k.samples_.size(); ++i)
      k.cumulative_[i] = k.cumulative_[i - 1] + 0.5 * step * (k.samples_[i - 1] + k.samples_[i]);
    return k;
  }

  Kind kind() const { return kind_; }
  bool is_exponential() const { return kind_ == Kind::exponential; }

  double rate() const {
    if (kind_ != Kind::exponential) throw precondition_error("kernel rate is defined for exponential kernels only");
    return rate_;
  }

  double density(double u) const {
    if (u < 0.0) return 0.0;
    if (kind_ == Kind::exponential) return std::exp(-rate_ * u);
    const double x = u / step_;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples_.size()) return (i + 1 == samples_.size() && x == static_cast<double>(i)) ? samples_.back() : 0.0;
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * samples_[i] + w * samples_[i + 1];
  }

  double cumulative(double u) const {
    if (u <= 0.0) return 0.0;
    if (kind_ == Kind::exponential) return -std::expm1(-rate_ * u) / rate_;
    const double x = u / step_;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples_.size()) return cumulative_.back();
    const double d = u - static_cast<double>(i) * step_;
    const double slope = (samples_[i + 1] - samples_[i]) / step_;
    return cumulative_[i] + samples_[i] * d + 0.5 * slope * d * d;
  }

  // H(inf); for tabulated kernels the table integral plus the declared tail.
  double total_mass() const {
    if (kind_ == Kind::exponential) return 1.0 / rate_;
    return cumulative_.back() + tail_;
  }

  // Smallest u with H(u) = y, for 0 <= y < H(support end).
  double inverse_cumulative(double y) const {
    if (y <= 0.0) return 0.0;
    if (kind_ == Kind::exponential) {
      const double a = rate_ * y;
      if (a >= 1.0) throw precondition_error("inverse_cumulative argument beyond kernel mass");
      return -std::log1p(-a) / rate_;
    }
    if (y >= cumulative_.back()) return step_ * static_cast<double>(samples_.size() - 1);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), y);
    const auto i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    const double rem = y - cumulative_[i];
    const double a = 0.5 * (samples_[i + 1] - samples_[i]) / step_;
    const double b = samples_[i];
    double d;
    if (std::abs(a) < 1e-14 * std::max(1.0, b / step_)) {
      d = rem / b;
    } else {
      // a d^2 + b d - rem = 0, stable root
      const double disc = std::max(0.0, b * b + 4.0 * a * rem);
      d = 2.0 * rem / (b + std::sqrt(disc));
    }
    return static_cast<double>(i) * step_ + std::clamp(d, 0.0, step_);
  }

  bool nonincreasing() const {
    if (kind_ == Kind::exponential) return true;
    for (std::size_t i = 1; i < samples_.size(); ++i)
      if (samples_[i] > samples_[i - 1]) return false;
    return true;
  }

  double support_end() const {
    if (kind_ == Kind::exponential) return std::numeric_limits<double>::infinity();
    return step_ * static_cast<double>(samples_.size() - 1);
  }

  double tail_mass() const { return kind_ == Kind::exponential ? 0.0 : tail_; }
  double table_step() const { return step_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  Kind kind_ = Kind::exponential;
  double rate_ = 1.0;
  double step_ = 0.0;
  double tail_ = 0.0;
  std::vector<double> samples_;
  std::vector<double> cumulative_;
};

// Distribution of the intensity jump B.
class MarkDistribution {
 public:
  enum class Kind { deterministic, exponential, pareto, none };

  static MarkDistribution deterministic(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw config_error("deterministic mark must be > 0");
    return MarkDistribution(Kind::deterministic, b, 0.0);
  }
  static MarkDistribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw config_error("exponential mark rate must be > 0");
    return MarkDistribution(Kind::exponential, rate, 0.0);
  }
  // P(B > x) = (scale / x)^alpha for x >= scale.
  static MarkDistribution pareto(double alpha, double scale) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw config_error("pareto tail index must be > 1 (finite mean)");
    if (std::abs(alpha - std::round(alpha)) < 1e-9) throw config_error("pareto tail index must not be an integer");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw config_error("pareto scale must be > 0");
    return MarkDistribution(Kind::pareto, alpha, scale);
  }
  // B identically 0. Breaks the P(B > 0) = 1 modelling assumption on purpose;
  // used to reduce the model to a plain Poisson stream.
  static MarkDistribution none() { return MarkDistribution(Kind::none, 0.0, 0.0); }

  Kind kind() const { return kind_; }

  MarkDistribution scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw config_error("mark scale factor must be > 0");
    switch (kind_) {
      case Kind::deterministic: return deterministic(a_ * factor);
      case Kind::exponential: return exponential(a_ / factor);
      case Kind::pareto: return pareto(a_, b_ * factor);
      case Kind::none: return none();
    }
    return *this;
  }

  // beta(s) = E exp(-s B); Re(s) >= 0 required.
  cplx lst(cplx s) const {
    if (s.real() < 0.0) throw precondition_error("mark LST needs Re(s) >= 0");
    return lst_unchecked(s);
  }

  // 1 - beta(s), evaluated without cancellation near s = 0.
  cplx one_minus_lst(cplx s) const {
    if (s.real() < 0.0) throw precondition_error("mark LST needs Re(s) >= 0");
    return one_minus_lst_unchecked(s);
  }

  cplx lst_unchecked(cplx s) const {
    switch (kind_) {
      case Kind::deterministic: return std::exp(-s * a_);
      case Kind::exponential: return a_ / (a_ + s);
      case Kind::pareto: return 1.0 - special::pareto_one_minus_lst(a_, s * b_);
      case Kind::none: return 1.0;
    }
    return 1.0;
  }

  cplx one_minus_lst_unchecked(cplx s) const {
    switch (kind_) {
      case Kind::deterministic: return -special::expm1(-s * a_);
      case Kind::exponential: return s / (a_ + s);
      case Kind::pareto: return special::pareto_one_minus_lst(a_, s * b_);
      case Kind::none: return 0.0;
    }
    return 0.0;
  }

  // E B^g, or nullopt when infinite.
  std::optional<double> moment(int g) const {
    if (g < 0) throw precondition_error("moment order must be >= 0");
    if (g == 0) return 1.0;
    switch (kind_) {
      case Kind::deterministic: return std::pow(a_, g);
      case Kind::exponential: return std::tgamma(g + 1.0) / std::pow(a_, g);
      case Kind::pareto:
        if (static_cast<double>(g) >= a_) return std::nullopt;
        return a_ * std::pow(b_, g) / (a_ - g);
      case Kind::none: return 0.0;
    }
    return std::nullopt;
  }

  double require_moment(int g) const {
    auto m = moment(g);
    if (!m) throw moment_unavailable_error("mark moment E B^" + std::to_string(g) + " is infinite");
    return *m;
  }

  double mean() const { return *moment(1); }

  // Tail index and slowly varying constant of P(B > x) = ell * x^{-alpha}.
  double tail_index() const {
    if (kind_ != Kind::pareto) throw precondition_error("tail index is defined for pareto marks only");
    return a_;
  }
  double tail_constant() const {
    if (kind_ != Kind::pareto) throw precondition_error("tail constant is defined for pareto marks only");
    return std::pow(b_, a_);
  }

  double value() const { return a_; }  // deterministic size / exponential rate / pareto index
  double scale() const { return b_; }

  template <class Rng>
  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::deterministic: return a_;
      case Kind::exponential: return std::exponential_distribution<double>(a_)(rng);
      case Kind::pareto: {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        return b_ * std::pow(1.0 - u, -1.0 / a_);
      }
      case Kind::none: return 0.0;
    }
    return 0.0;
  }

 private:
  MarkDistribution(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

// Service requirement J, described through its survival function P(J > u).
class ServiceDistribution {
 public:
  enum class Kind { exponential, deterministic, tabulated };

  // rate 0 means J is infinite (nobody leaves).
  static ServiceDistribution exponential(double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw config_error("exponential service rate must be >= 0");
    ServiceDistribution s;
    s.kind_ = Kind::exponential;
    s.param_ = rate;
    return s;
  }
  static ServiceDistribution deterministic(double d) {
    if (!(d > 0.0)) throw config_error("deterministic service time must be > 0");
    ServiceDistribution s;
    s.kind_ = Kind::deterministic;
    s.param_ = d;
    return s;
  }
  // Survival sampled at u_i = i * step, linear in between, constant after the
  // last sample (remaining mass sits at J = infinity).
  static ServiceDistribution tabulated(std::vector<double> survival, double step) {
    if (survival.size() < 2) throw config_error("tabulated survival needs at least two samples");
    if (!(step > 0.0)) throw config_error("tabulated survival step must be > 0");
    for (std::size_t i = 0; i < survival.size(); ++i) {
      if (!(survival[i] >= 0.0 && survival[i] <= 1.0)) throw config_error("survival samples must lie in [0,1]");
      if (i > 0 && survival[i] > survival[i - 1]) throw config_error("survival samples must be nonincreasing");
    }
    ServiceDistribution s;
    s.kind_ = Kind::tabulated;
    s.param_ = step;
    s.table_ = std::move(survival);
    return s;
  }

  Kind kind() const { return kind_; }
  bool is_exponential() const { return kind_ == Kind::exponential; }

  double rate() const {
    if (kind_ != Kind::exponential) throw precondition_error("service rate is defined for exponential service only");
    return param_;
  }

  double survival(double u) const {
    if (u < 0.0) return 1.0;
    switch (kind_) {
      case Kind::exponential: return std::exp(-param_ * u);
      case Kind::deterministic: return u < param_ ? 1.0 : 0.0;
      case Kind::tabulated: {
        const double x = u / param_;
        const auto i = static_cast<std::size_t>(x);
        if (i + 1 >= table_.size()) return table_.back();
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * table_[i] + w * table_[i + 1];
      }
    }
    return 0.0;
  }

  double mean() const {
    switch (kind_) {
      case Kind::exponential: return param_ > 0.0 ? 1.0 / param_ : std::numeric_limits<double>::infinity();
      case Kind::deterministic: return param_;
      case Kind::tabulated:
        if (table_.back() > 0.0) return std::numeric_limits<double>::infinity();
        return trapezoid(TimeGrid(param_ * static_cast<double>(table_.size() - 1), table_.size() - 1), table_);
    }
    return 0.0;
  }

  template <class Rng>
  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::exponential:
        if (param_ == 0.0) return std::numeric_limits<double>::infinity();
        return std::exponential_distribution<double>(param_)(rng);
      case Kind::deterministic: return param_;
      case Kind::tabulated: {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        // J > x iff u < survival(x)
        if (u >= table_.front()) return 0.0;
        if (u < table_.back()) return std::numeric_limits<double>::infinity();
        std::size_t lo = 0, hi = table_.size() - 1;  // table_[lo] > u >= table_[hi]
        while (hi - lo > 1) {
          const std::size_t mid = (lo + hi) / 2;
          if (table_[mid] > u) lo = mid; else hi = mid;
        }
        const double w = (table_[lo] - u) / (table_[lo] - table_[hi]);
        return param_ * (static_cast<double>(lo) + w);
      }
    }
    return 0.0;
  }

 private:
  Kind kind_ = Kind::exponential;
  double param_ = 1.0;
  std::vector<double> table_;
};

class ModelConfig {
 public:
  ModelConfig(double lambda_inf, ExcitationKernel kernel, MarkDistribution marks, ServiceDistribution service)
      : lambda_inf_(lambda_inf), kernel_(std::move(kernel)), marks_(std::move(marks)), service_(std::move(service)) {
    if (!(lambda_inf > 0.0) || !std::isfinite(lambda_inf)) throw config_error("lambda_inf must be > 0");
    if (!std::isfinite(kernel_.total_mass())) throw config_error("kernel mass must be finite");
  }

  double lambda_inf() const { return lambda_inf_; }
  const ExcitationKernel& kernel() const { return kernel_; }
  const MarkDistribution& marks() const { return marks_; }
  const ServiceDistribution& service() const { return service_; }

  ModelConfig with_lambda(double lambda_inf) const { return {lambda_inf, kernel_, marks_, service_}; }
  ModelConfig with_marks(MarkDistribution m) const { return {lambda_inf_, kernel_, std::move(m), service_}; }
  ModelConfig with_service(ServiceDistribution s) const { return {lambda_inf_, kernel_, marks_, std::move(s)}; }

  bool markovian() const { return kernel_.is_exponential() && service_.is_exponential(); }

 private:
  double lambda_inf_;
  ExcitationKernel kernel_;
  MarkDistribution marks_;
  ServiceDistribution service_;
};

struct LoadSummary {
  double rho = 0.0;
  std::optional<double> r0;  // r - b1, exponential kernels only
  bool stable = false;
};

inline LoadSummary load_summary(const ModelConfig& cfg) {
  LoadSummary out;
  const double b1 = cfg.marks().mean();
  out.rho = b1 * cfg.kernel().total_mass();
  out.stable = out.rho < 1.0;
  if (cfg.kernel().is_exponential()) out.r0 = cfg.kernel().rate() - b1;
  return out;
}

inline void require_stable(const ModelConfig& cfg) {
  const auto load = load_summary(cfg);
  if (!load.stable) throw instability_error("model is not stable: load rho = " + std::to_string(load.rho) + " >= 1");
}

inline void require_markovian(const ModelConfig& cfg) {
  if (!cfg.kernel().is_exponential()) throw config_error("computation needs an exponential excitation kernel");
  if (!cfg.service().is_exponential()) throw config_error("computation needs exponential service");
}

inline cplx mark_lst(const MarkDistribution& marks, cplx s) { return marks.lst(s); }
inline double kernel_cumulative(const ExcitationKernel& kernel, double u) {
  if (u < 0.0) throw precondition_error("kernel_cumulative needs u >= 0");
  return kernel.cumulative(u);
}
inline double service_survival(const ServiceDistribution& service, double u) {
  if (u < 0.0) throw precondition_error("service_survival needs u >= 0");
  return service.survival(u);
}

// Parameter set used throughout the examples and tests:
// lambda_inf = 1.45, r = 2.15, mu = 1.25, B = 0.98.
inline ModelConfig table1_config() {
  return {1.45, ExcitationKernel::exponential(2.15), MarkDistribution::deterministic(0.98),
          ServiceDistribution::exponential(1.25)};
}

}  // namespace hawkesq
