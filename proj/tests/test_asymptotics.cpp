#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>

#include "hawkesq/asymptotics.hpp"
#include "hawkesq/moments.hpp"

using namespace hawkesq;

namespace {

const ModelConfig& table1() {
  static const ModelConfig cfg = table1_config();
  return cfg;
}

// Integrating R_alpha = G (h * R1)^alpha + b1 (h * R_alpha) over [0, inf) gives
// int R_alpha = G / (1 - rho) int (h * R1)^alpha, and for exponential h and J
// (h * R1)(u) = (e^{-mu u} - e^{-r0 u}) / (r0 - mu).
double ralpha_integral_by_quadrature(double mu, double r0, double rho, double alpha, double ell) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double q = integrator.integrate(
      [&](double u) { return std::pow((std::exp(-mu * u) - std::exp(-r0 * u)) / (r0 - mu), alpha); }, 1e-14);
  return std::tgamma(1.0 - alpha) * ell / (1.0 - rho) * q;
}

}  // namespace

TEST(HeavyTail, SpecValidation) {
  EXPECT_THROW((HeavyTailSpec{2.5, 1.0}.validate()), config_error);
  EXPECT_THROW((HeavyTailSpec{1.5, 0.0}.validate()), config_error);
  const auto s = HeavyTailSpec::from_marks(MarkDistribution::pareto(1.7, 0.5));
  EXPECT_NEAR(s.alpha, 1.7, 1e-15);
  EXPECT_NEAR(s.ell_inf, std::pow(0.5, 1.7), 1e-15);
  EXPECT_THROW(HeavyTailSpec::from_marks(MarkDistribution::deterministic(1.0)), precondition_error);
}

TEST(R1, VolterraMatchesClosedForm) {
  const auto sol = r1_volterra(table1(), 10.0, 1e-3);
  EXPECT_NEAR(sol.values[0], 1.0, 1e-15);
  double worst = 0.0;
  for (std::size_t i = 0; i < sol.values.size(); ++i) {
    worst = std::max(worst, std::abs(sol.values[i] - r1_closed_exp(table1(), sol.grid.point(i))));
    EXPECT_GE(sol.values[i], 0.0);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(R1, ClosedFormEnds) {
  EXPECT_NEAR(r1_closed_exp(table1(), 0.0), 1.0, 1e-14);
  EXPECT_NEAR(r1_closed_exp(table1(), 200.0), 0.0, 1e-90);
}

TEST(R1, NoOffspring) {
  const auto cfg = table1().with_marks(MarkDistribution::none());
  const auto sol = r1_volterra(cfg, 5.0, 1e-2);
  for (std::size_t i = 0; i < sol.values.size(); ++i)
    EXPECT_DOUBLE_EQ(sol.values[i], std::exp(-1.25 * sol.grid.point(i)));
}

TEST(R1, VolterraResidual) {
  const auto sol = r1_volterra(table1(), 10.0, 1e-2);
  const auto& g = sol.grid;
  double worst = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    double conv = 0.5 * (std::exp(-2.15 * g.point(i)) * sol.values[0] + sol.values[i]);
    for (std::size_t j = 1; j < i; ++j) conv += std::exp(-2.15 * g.point(j)) * sol.values[i - j];
    conv *= g.step();
    worst = std::max(worst, std::abs(sol.values[i] - std::exp(-1.25 * g.point(i)) - 0.98 * conv));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(R1, NeumannAgreesWithMarching) {
  const auto a = r1_volterra(table1(), 10.0, 1e-2, VolterraMethod::direct_volterra);
  const auto b = r1_volterra(table1(), 10.0, 1e-2, VolterraMethod::neumann_series);
  EXPECT_EQ(b.method, VolterraMethod::neumann_series);
  EXPECT_GT(b.terms, 1u);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  EXPECT_LE(worst, std::max(b.series_bound, 1e-6));
}

TEST(R1, Instability) {
  const auto hot = table1().with_marks(MarkDistribution::deterministic(3.0));
  EXPECT_THROW(r1_volterra(hot, 1.0, 1e-2), instability_error);
  EXPECT_THROW(r1_integral_infty(hot), instability_error);
}

TEST(R1, IntegralToInfinity) {
  EXPECT_NEAR(r1_integral_infty(table1()), (1.0 / 1.25) / (1.0 - 0.98 / 2.15), 1e-14);
  EXPECT_NEAR(r1_integral_infty(table1()), 1.47009, 1e-5);
  const auto calm = table1().with_marks(MarkDistribution::deterministic(1e-12));
  EXPECT_NEAR(r1_integral_infty(calm), 0.8, 1e-10);
  const double horizon = 40.0 / 1.17;
  const auto sol = r1_volterra(table1(), horizon, 1e-3);
  EXPECT_NEAR(trapezoid(sol.grid, sol.values), r1_integral_infty(table1()), 1e-3);
}

TEST(RAlpha, BetaFormulaMatchesQuadrature) {
  const HeavyTailSpec spec{1.5, 1.0};
  const double closed = ralpha_integral_infty(table1(), spec);
  EXPECT_LT(closed, 0.0);
  const double rho = 0.98 / 2.15;
  EXPECT_NEAR(closed / ralpha_integral_by_quadrature(1.25, 1.17, rho, 1.5, 1.0), 1.0, 1e-6);
  // service faster and slower than the kernel-induced decay
  for (double mu : {0.4, 3.0}) {
    const auto cfg = table1().with_service(ServiceDistribution::exponential(mu));
    for (double alpha : {1.2, 1.8}) {
      const HeavyTailSpec s{alpha, 0.7};
      const double v = ralpha_integral_infty(cfg, s);
      EXPECT_LT(v, 0.0);
      EXPECT_NEAR(v / ralpha_integral_by_quadrature(mu, 1.17, rho, alpha, 0.7), 1.0, 1e-6) << mu << " " << alpha;
    }
  }
  EXPECT_THROW(ralpha_integral_infty(table1().with_service(ServiceDistribution::exponential(1.17)), spec),
               precondition_error);
}

TEST(RAlpha, BetaRecurrence) {
  const double r0 = 1.17, mu = 1.25, a = 1.5;
  const double p = a * r0 / (mu - r0), q = a + 1.0;
  EXPECT_NEAR(p * std::beta(p, q) / ((p + q) * std::beta(p + 1.0, q)), 1.0, 1e-12);
}

TEST(RAlpha, VolterraSignAndIntegral) {
  const HeavyTailSpec spec{1.5, 1.0};
  const double horizon = 40.0 / 1.17;
  const auto sol = ralpha_volterra(table1(), spec, horizon, 2e-3);
  for (double v : sol.values) EXPECT_LE(v, 0.0);
  EXPECT_NEAR(trapezoid(sol.grid, sol.values) / ralpha_integral_infty(table1(), spec), 1.0, 1e-3);
}

TEST(RAlpha, NoOffspringForcingOnly) {
  const HeavyTailSpec spec{1.5, 1.0};
  const auto cfg = table1().with_marks(MarkDistribution::none());
  const auto sol = ralpha_volterra(cfg, spec, 5.0, 1e-2);
  const double c = std::tgamma(-0.5);
  for (std::size_t i = 0; i < sol.values.size(); i += 50) {
    const double u = sol.grid.point(i);
    const double hj = (std::exp(-1.25 * u) - std::exp(-2.15 * u)) / (2.15 - 1.25);
    EXPECT_NEAR(sol.values[i], c * std::pow(hj, 1.5), 1e-4) << u;
  }
}

TEST(TailExpansion, LinearCoefficientIsIntegralOfR1) {
  const auto cfg = ModelConfig(1.45, ExcitationKernel::exponential(6.0), MarkDistribution::pareto(1.5, 1.0),
                               ServiceDistribution::exponential(1.25));
  const auto spec = HeavyTailSpec::from_marks(cfg.marks());
  const auto ex = tail_pgf_expansion(cfg, spec, 10.0, 1e-3);
  const auto r1 = r1_volterra(cfg, 10.0, 1e-3);
  EXPECT_NEAR(ex.linear_coeff, 1.45 * trapezoid(r1.grid, r1.values), 1e-14);
  EXPECT_LE(ex.alpha_coeff, 0.0);
  EXPECT_EQ(ex.alpha, 1.5);
  // first moment of N(t): d/dz PGF at 1 equals linear_coeff
  EXPECT_NEAR(ex.linear_coeff, first_moments_closed(cfg, 10.0).mean_n, 1e-4);
}

TEST(HeavyTraffic, GammaParameters) {
  const auto g = heavy_traffic_gamma(table1(), HeavyTrafficTarget::lambda);
  EXPECT_NEAR(g.shape, 6.4919, 2e-4);
  EXPECT_NEAR(g.rate, 4.4773, 2e-4);
  EXPECT_NEAR(g.mean(), 1.45, 1e-14);
  const auto n = heavy_traffic_gamma(table1(), HeavyTrafficTarget::occupancy);
  EXPECT_DOUBLE_EQ(n.rate, 1.25 * g.rate);
  EXPECT_EQ(n.shape, g.shape);
  EXPECT_THROW(heavy_traffic_gamma(table1().with_marks(MarkDistribution::pareto(1.5, 0.3)), HeavyTrafficTarget::lambda),
               moment_unavailable_error);
}

TEST(HeavyTraffic, GammaMomentsMatchStationaryLimits) {
  const auto cfg = with_load(table1(), 1.0 - 1e-6);
  const double rho = load_summary(cfg).rho;
  EXPECT_NEAR(rho, 1.0 - 1e-6, 1e-15);
  const auto st = stationary_summary(cfg);
  const auto g = heavy_traffic_gamma(cfg, HeavyTrafficTarget::lambda);
  EXPECT_NEAR((1.0 - rho) * st.mean_lambda / g.mean(), 1.0, 1e-8);
  EXPECT_NEAR((1.0 - rho) * (1.0 - rho) * st.var_lambda / g.variance(), 1.0, 1e-8);
}

TEST(StationaryLst, Basics) {
  EXPECT_EQ(stationary_lambda_lst(table1(), 0.0), 1.0);
  const double h = 1e-4;
  const double d = -(-3.0 + 4.0 * stationary_lambda_lst(table1(), h) - stationary_lambda_lst(table1(), 2.0 * h)) /
                   (2.0 * h);
  EXPECT_NEAR(d / 2.66453, 1.0, 1e-4);
  const double u = 1e-6;
  const double value = u / (2.15 * u - table1().marks().one_minus_lst(u).real());
  EXPECT_NEAR(value * 1.17, 1.0, 1e-4);
  EXPECT_THROW(stationary_lambda_lst(table1(), -1.0), precondition_error);
  EXPECT_THROW(stationary_lambda_lst(table1().with_marks(MarkDistribution::deterministic(3.0)), 1.0),
               instability_error);
}

// Second derivative at 0 (one-sided, second order) against the stationary variance.
TEST(StationaryLst, SecondDerivativeGivesVariance) {
  const double h = 1e-3;
  const double f0 = 1.0, f1 = stationary_lambda_lst(table1(), h), f2 = stationary_lambda_lst(table1(), 2.0 * h),
               f3 = stationary_lambda_lst(table1(), 3.0 * h);
  const double second = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h);
  const double m1 = stationary_lambda_moment(table1(), 1);
  EXPECT_NEAR((second - m1 * m1) / stationary_summary(table1()).var_lambda, 1.0, 1e-3);
}

TEST(HeavyTraffic, LambdaGapShrinks) {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.05 * i);
  const double g90 = lambda_heavy_traffic_gap(with_load(table1(), 0.9), grid);
  const double g99 = lambda_heavy_traffic_gap(with_load(table1(), 0.99), grid);
  EXPECT_LT(g99, g90);
  EXPECT_LE(g99, 0.02);
}
