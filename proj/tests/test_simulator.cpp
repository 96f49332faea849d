#include <gtest/gtest.h>

#include <cmath>

#include "hawkesq/moments.hpp"
#include "hawkesq/simulator.hpp"
#include "support.hpp"

using namespace hawkesq;

namespace {

const ModelConfig& table1() {
  static const ModelConfig cfg = table1_config();
  return cfg;
}

void expect_valid_trace(const ArrivalTrace& tr) {
  for (std::size_t i = 0; i < tr.epochs.size(); ++i) {
    EXPECT_GE(tr.epochs[i], 0.0);
    EXPECT_LE(tr.epochs[i], tr.horizon);
    if (i > 0) EXPECT_LE(tr.epochs[i - 1], tr.epochs[i]);
    if (tr.parent[i] < 0) {
      EXPECT_EQ(tr.generation[i], 0);
    } else {
      const auto p = static_cast<std::size_t>(tr.parent[i]);
      EXPECT_LT(p, i);
      EXPECT_LE(tr.epochs[p], tr.epochs[i]);
      EXPECT_EQ(tr.generation[i], tr.generation[p] + 1);
    }
  }
  EXPECT_EQ(tr.marks.size(), tr.epochs.size());
}

std::vector<std::size_t> arrival_counts(const ModelConfig& cfg, double t, std::size_t runs, std::uint64_t seed,
                                        Backend backend) {
  std::vector<std::size_t> out;
  for (const auto& r : sample_runs(cfg, t, runs, seed, backend)) out.push_back(r.arrivals);
  return out;
}

}  // namespace

TEST(Streams, SeededAndDistinct) {
  auto a = stream_rng(1, 2, 3), b = stream_rng(1, 2, 3), c = stream_rng(1, 2, 4), d = stream_rng(1, 3, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(ClusterArrivals, VanishingBackgroundRate) {
  const auto cfg = table1().with_lambda(1e-12);
  auto rng = stream_rng(5, 0, 0);
  EXPECT_TRUE(simulate_cluster_arrivals(cfg, 10.0, rng).epochs.empty());
  EXPECT_TRUE(simulate_thinning_arrivals(cfg, 10.0, rng).epochs.empty());
}

TEST(ClusterArrivals, TraceInvariants) {
  for (Backend b : {Backend::cluster, Backend::thinning}) {
    for (std::uint64_t run = 0; run < 50; ++run) {
      auto rng = stream_rng(17, 0, run);
      expect_valid_trace(simulate_arrivals(table1(), 10.0, rng, b));
    }
  }
}

TEST(ClusterArrivals, WithoutMarksArrivalsArePoisson) {
  const auto cfg = table1().with_marks(MarkDistribution::none());
  const auto counts = arrival_counts(cfg, 10.0, 100000, 99, Backend::cluster);
  EXPECT_GT(oracle::poisson_chi_square_pvalue(counts, 14.5), 0.01);
}

TEST(ThinningArrivals, WithoutMarksArrivalsArePoisson) {
  const auto cfg = table1().with_marks(MarkDistribution::none());
  const auto counts = arrival_counts(cfg, 10.0, 100000, 98, Backend::thinning);
  EXPECT_GT(oracle::poisson_chi_square_pvalue(counts, 14.5), 0.01);
}

// E M(T) = int_0^T E Lambda(u) du.
TEST(ClusterArrivals, MeanArrivalCount) {
  const double lam = 1.45, r = 2.15, b1 = 0.98, r0 = r - b1, t = 10.0;
  const double want = lam * r / r0 * t - lam * b1 / (r0 * r0) * (1.0 - std::exp(-r0 * t));
  const std::size_t batches = 50, per = 1000;
  const auto counts = arrival_counts(table1(), t, batches * per, 7, Backend::cluster);
  std::vector<double> means(batches, 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) means[i / per] += static_cast<double>(counts[i]) / per;
  double mean = 0.0, ss = 0.0;
  for (double m : means) mean += m / batches;
  for (double m : means) ss += (m - mean) * (m - mean);
  const double se = std::sqrt(ss / (batches - 1) / batches);
  EXPECT_LE(std::abs(mean - want), 3.0 * se);
}

TEST(Backends, KolmogorovSmirnovEquivalence) {
  const auto a = arrival_counts(table1(), 10.0, 10000, 11, Backend::cluster);
  const auto b = arrival_counts(table1(), 10.0, 10000, 12, Backend::thinning);
  EXPECT_GT(oracle::ks_pvalue({a.begin(), a.end()}, {b.begin(), b.end()}), 0.01);
}

TEST(ThinningArrivals, ExponentialDecayBetweenEvents) {
  auto rng = stream_rng(3, 0, 0);
  const auto tr = simulate_thinning_arrivals(table1(), 10.0, rng);
  ASSERT_GT(tr.epochs.size(), 3u);
  for (std::size_t i = 0; i + 1 < tr.epochs.size(); ++i) {
    const double ti = tr.epochs[i];
    const double after = intensity_at(tr, table1(), ti) + tr.marks[i];
    const double mid = 0.5 * (ti + tr.epochs[i + 1]);
    const double decayed = 1.45 + (after - 1.45) * std::exp(-2.15 * (mid - ti));
    EXPECT_NEAR(intensity_at(tr, table1(), mid), decayed, 1e-12);
  }
}

TEST(ThinningArrivals, MeanIntensityLaw) {
  const std::size_t batches = 20, per = 500;
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i);
  std::vector<std::vector<double>> means(grid.size(), std::vector<double>(batches, 0.0));
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t i = 0; i < per; ++i) {
      auto rng = stream_rng(44, b, i);
      const auto tr = simulate_thinning_arrivals(table1(), 10.0, rng);
      for (std::size_t k = 0; k < grid.size(); ++k) means[k][b] += intensity_at(tr, table1(), grid[k]) / per;
    }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double mean = 0.0, ss = 0.0;
    for (double m : means[k]) mean += m / batches;
    for (double m : means[k]) ss += (m - mean) * (m - mean);
    const double std_batch = std::sqrt(ss / (batches - 1));
    EXPECT_LE(std::abs(mean - first_moments_closed(table1(), grid[k]).mean_lambda), 3.0 * std_batch) << grid[k];
  }
}

TEST(ThinningArrivals, NeedsMonotoneKernel) {
  const auto cfg = table1().with_lambda(1.0);
  const ModelConfig bumpy(1.0, ExcitationKernel::tabulated({0.5, 1.0, 0.2}, 0.5), MarkDistribution::deterministic(0.5),
                          ServiceDistribution::exponential(1.0));
  auto rng = stream_rng(1, 0, 0);
  EXPECT_THROW(simulate_thinning_arrivals(bumpy, 5.0, rng), precondition_error);
  EXPECT_NO_THROW(simulate_cluster_arrivals(bumpy, 5.0, rng));
  EXPECT_THROW(simulate_cluster_arrivals(cfg, 0.0, rng), config_error);
}

TEST(Occupancy, Basics) {
  auto rng = stream_rng(8, 0, 0);
  const auto tr = simulate_cluster_arrivals(table1(), 10.0, rng);
  ASSERT_FALSE(tr.epochs.empty());
  EXPECT_EQ(occupancy(tr, table1(), {0.5 * tr.epochs.front()}, rng)[0], 0u);
  const auto forever = table1().with_service(ServiceDistribution::exponential(0.0));
  const auto n = occupancy(tr, forever, {10.0}, rng);
  EXPECT_EQ(n[0], tr.epochs.size());
  EXPECT_THROW(occupancy(tr, table1(), {11.0}, rng), precondition_error);
}

TEST(BatchPmf, DeterministicAcrossCallsAndWorkers) {
  const auto a = batch_pmf(table1(), 10.0, 10, 200, 8, 123, Backend::cluster, default_event_cap, 1);
  const auto b = batch_pmf(table1(), 10.0, 10, 200, 8, 123, Backend::cluster, default_event_cap, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  EXPECT_EQ(a.batch_means, b.batch_means);
  const auto c = batch_pmf(table1(), 10.0, 10, 200, 8, 124);
  EXPECT_NE(a.mean, c.mean);
}

TEST(BatchPmf, MinimalBatching) {
  const auto r = batch_pmf(table1(), 10.0, 5, 1, 2, 1);
  double total = 0.0;
  for (std::size_t k = 0; k <= 5; ++k) {
    EXPECT_GE(r.mean[k], 0.0);
    EXPECT_LE(r.mean[k], 1.0);
    EXPECT_GE(r.std[k], 0.0);
    EXPECT_TRUE(std::isfinite(r.std[k]));
    total += r.mean[k];
  }
  EXPECT_LE(total, 1.0 + 1e-15);
  EXPECT_THROW(batch_pmf(table1(), 10.0, 5, 0, 2, 1), config_error);
  EXPECT_THROW(batch_pmf(table1(), 10.0, 5, 10, 1, 1), config_error);
}

TEST(BatchPmf, EmptyProbabilityAtTableSettings) {
  const auto r = batch_pmf(table1(), 10.0, 10, 10000, 100, 20190301);
  EXPECT_LE(std::abs(r.mean[0] - 0.183), 3.0 * r.std[0]);
  EXPECT_EQ(r.runs, 10000u);
  EXPECT_EQ(r.batches, 100u);
}

TEST(BatchPmf, SupercriticalGuard) {
  const auto hot = table1().with_marks(MarkDistribution::deterministic(1.2 * 2.15));
  int fired = 0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    auto rng = stream_rng(2, 0, run);
    try {
      simulate_cluster_arrivals(hot, 50.0, rng, 10000);
    } catch (const numeric_error&) {
      ++fired;
    }
  }
  EXPECT_EQ(fired, 10);
  EXPECT_THROW(batch_pmf(hot, 50.0, 5, 5, 2, 1, Backend::thinning, 10000), numeric_error);
}
