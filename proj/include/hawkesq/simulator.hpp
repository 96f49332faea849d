#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace hawkesq {

enum class Backend { cluster, thinning };

inline std::string to_string(Backend b) { return b == Backend::cluster ? "cluster" : "thinning"; }

inline constexpr std::size_t default_event_cap = 10'000'000;

struct ArrivalTrace {
  double horizon = 0.0;
  std::vector<double> epochs;      // sorted ascending
  std::vector<double> marks;
  std::vector<int> generation;     // 0 for immigrants
  std::vector<std::int64_t> parent;  // index into epochs, -1 for immigrants
};

struct SimBatchResult {
  double t = 0.0;
  std::size_t k_max = 0;
  std::vector<std::vector<double>> batch_means;  // [batch][k]
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation across batch means
  std::size_t runs = 0;     // per batch
  std::size_t batches = 0;
  std::uint64_t seed = 0;
  Backend backend = Backend::cluster;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for run `run` of batch `batch`: the three indices are
// folded through splitmix64 and the result seeds a 64-bit Mersenne twister.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t batch, std::uint64_t run) {
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ batch) ^ run);
  return std::mt19937_64(key);
}

namespace detail {

inline void sort_trace(ArrivalTrace& tr) {
  const std::size_t n = tr.epochs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tr.epochs[a] < tr.epochs[b]; });
  std::vector<std::int64_t> where(n);
  for (std::size_t i = 0; i < n; ++i) where[order[i]] = static_cast<std::int64_t>(i);
  ArrivalTrace out;
  out.horizon = tr.horizon;
  out.epochs.resize(n);
  out.marks.resize(n);
  out.generation.resize(n);
  out.parent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    out.epochs[i] = tr.epochs[src];
    out.marks[i] = tr.marks[src];
    out.generation[i] = tr.generation[src];
    out.parent[i] = tr.parent[src] < 0 ? -1 : where[static_cast<std::size_t>(tr.parent[src])];
  }
  tr = std::move(out);
}

[[noreturn]] inline void runaway(const ModelConfig& cfg, std::size_t cap) {
  throw numeric_error("event cap of " + std::to_string(cap) + " exceeded; the branching looks supercritical (rho = " +
                      std::to_string(load_summary(cfg).rho) + ")");
}

}  // namespace detail

// Branching construction: Poisson immigrants, each event spawning
// Poisson(B H(T - tau)) children at offsets drawn from h(s)/H(T - tau).
template <class Rng>
ArrivalTrace simulate_cluster_arrivals(const ModelConfig& cfg, double horizon, Rng& rng,
                                       std::size_t cap = default_event_cap) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw config_error("simulation horizon must be finite and > 0");
  ArrivalTrace tr;
  tr.horizon = horizon;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto immigrants =
      static_cast<std::size_t>(std::poisson_distribution<std::int64_t>(cfg.lambda_inf() * horizon)(rng));
  if (immigrants > cap) detail::runaway(cfg, cap);
  for (std::size_t i = 0; i < immigrants; ++i) {
    tr.epochs.push_back(horizon * unif(rng));
    tr.generation.push_back(0);
    tr.parent.push_back(-1);
  }
  const ExcitationKernel& kernel = cfg.kernel();
  for (std::size_t i = 0; i < tr.epochs.size(); ++i) {
    const double mark = cfg.marks().sample(rng);
    tr.marks.push_back(mark);
    if (mark <= 0.0) continue;
    const double tau = tr.epochs[i];
    const double mass = kernel.cumulative(horizon - tau);
    if (mass <= 0.0) continue;
    const auto children = std::poisson_distribution<std::int64_t>(mark * mass)(rng);
    if (tr.epochs.size() + static_cast<std::size_t>(children) > cap) detail::runaway(cfg, cap);
    for (std::int64_t c = 0; c < children; ++c) {
      const double offset = kernel.inverse_cumulative(unif(rng) * mass);
      tr.epochs.push_back(std::min(tau + offset, horizon));
      tr.generation.push_back(tr.generation[i] + 1);
      tr.parent.push_back(static_cast<std::int64_t>(i));
    }
  }
  detail::sort_trace(tr);
  return tr;
}

// lambda_inf + sum_{t_i < t} B_i h(t - t_i)
inline double intensity_at(const ArrivalTrace& tr, const ModelConfig& cfg, double t) {
  double out = cfg.lambda_inf();
  for (std::size_t i = 0; i < tr.epochs.size() && tr.epochs[i] < t; ++i)
    out += tr.marks[i] * cfg.kernel().density(t - tr.epochs[i]);
  return out;
}

// Accept/reject on the running intensity; the intensity right after the
// current epoch dominates everything until the next event because h is
// nonincreasing.
template <class Rng>
ArrivalTrace simulate_thinning_arrivals(const ModelConfig& cfg, double horizon, Rng& rng,
                                        std::size_t cap = default_event_cap) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw config_error("simulation horizon must be finite and > 0");
  if (!cfg.kernel().nonincreasing()) throw precondition_error("thinning needs a nonincreasing excitation kernel");
  const ExcitationKernel& kernel = cfg.kernel();
  const double lam = cfg.lambda_inf();
  const bool expo = kernel.is_exponential();
  const double r = expo ? kernel.rate() : 0.0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ArrivalTrace tr;
  tr.horizon = horizon;
  double t = 0.0;
  double excess = 0.0;  // exponential kernel: sum B_i e^{-r (t - t_i)} at time t
  auto excitation = [&](double at) {
    if (expo) return excess * std::exp(-r * (at - t));
    double acc = 0.0;
    for (std::size_t i = 0; i < tr.epochs.size(); ++i) acc += tr.marks[i] * kernel.density(at - tr.epochs[i]);
    return acc;
  };
  double bound = lam;  // intensity at t+
  for (;;) {
    const double w = std::exponential_distribution<double>(bound)(rng);
    const double cand = t + w;
    if (cand > horizon) break;
    const double exc = excitation(cand);
    const double intensity = lam + exc;
    if (expo) excess = exc;
    t = cand;
    if (unif(rng) * bound <= intensity) {
      // attribute the event to the background or to one earlier event
      std::vector<double> weights(tr.epochs.size() + 1);
      weights[0] = lam;
      for (std::size_t i = 0; i < tr.epochs.size(); ++i) weights[i + 1] = tr.marks[i] * kernel.density(t - tr.epochs[i]);
      double total = 0.0;
      for (double v : weights) total += v;
      double pick = unif(rng) * total;
      std::size_t who = 0;
      for (; who + 1 < weights.size(); ++who) {
        if (pick < weights[who]) break;
        pick -= weights[who];
      }
      const double mark = cfg.marks().sample(rng);
      tr.epochs.push_back(t);
      tr.marks.push_back(mark);
      tr.generation.push_back(who == 0 ? 0 : tr.generation[who - 1] + 1);
      tr.parent.push_back(who == 0 ? -1 : static_cast<std::int64_t>(who - 1));
      if (tr.epochs.size() > cap) detail::runaway(cfg, cap);
      if (expo) excess += mark;
      bound = lam + (expo ? excess : exc + mark * kernel.density(0.0));
    } else {
      bound = intensity;
    }
  }
  return tr;
}

template <class Rng>
ArrivalTrace simulate_arrivals(const ModelConfig& cfg, double horizon, Rng& rng, Backend backend,
                               std::size_t cap = default_event_cap) {
  return backend == Backend::cluster ? simulate_cluster_arrivals(cfg, horizon, rng, cap)
                                     : simulate_thinning_arrivals(cfg, horizon, rng, cap);
}

// N(t) = #{i : t_i <= t < t_i + J_i} for each t in t_obs, one J_i per customer.
template <class Rng>
std::vector<std::size_t> occupancy(const ArrivalTrace& tr, const ModelConfig& cfg, const std::vector<double>& t_obs,
                                   Rng& rng) {
  for (double t : t_obs)
    if (t < 0.0 || t > tr.horizon) throw precondition_error("observation time outside the simulated horizon");
  std::vector<std::size_t> out(t_obs.size(), 0);
  for (std::size_t i = 0; i < tr.epochs.size(); ++i) {
    const double leave = tr.epochs[i] + cfg.service().sample(rng);
    for (std::size_t k = 0; k < t_obs.size(); ++k)
      if (tr.epochs[i] <= t_obs[k] && t_obs[k] < leave) ++out[k];
  }
  return out;
}

struct RunSample {
  std::size_t arrivals = 0;   // M(t)
  std::size_t occupancy = 0;  // N(t)
};

template <class Rng>
RunSample simulate_run(const ModelConfig& cfg, double t, Rng& rng, Backend backend,
                       std::size_t cap = default_event_cap) {
  const auto tr = simulate_arrivals(cfg, t, rng, backend, cap);
  return {tr.epochs.size(), occupancy(tr, cfg, {t}, rng)[0]};
}

// One sample per run, run i of the single batch 0.
inline std::vector<RunSample> sample_runs(const ModelConfig& cfg, double t, std::size_t runs, std::uint64_t seed,
                                          Backend backend, std::size_t cap = default_event_cap,
                                          std::size_t workers = default_workers()) {
  std::vector<RunSample> out(runs);
  parallel_for(
      runs,
      [&](std::size_t i) {
        auto rng = stream_rng(seed, 0, i);
        out[i] = simulate_run(cfg, t, rng, backend, cap);
      },
      workers);
  return out;
}

inline SimBatchResult batch_pmf(const ModelConfig& cfg, double t, std::size_t k_max, std::size_t runs_per_batch,
                                std::size_t batches, std::uint64_t seed, Backend backend = Backend::cluster,
                                std::size_t cap = default_event_cap, std::size_t workers = default_workers()) {
  if (runs_per_batch < 1) throw config_error("runs per batch must be >= 1");
  if (batches < 2) throw config_error("at least two batches are needed for a standard deviation");
  std::vector<std::vector<std::uint64_t>> counts(batches, std::vector<std::uint64_t>(k_max + 1, 0));
  parallel_for(
      batches,
      [&](std::size_t b) {
        for (std::size_t i = 0; i < runs_per_batch; ++i) {
          auto rng = stream_rng(seed, b, i);
          const auto n = simulate_run(cfg, t, rng, backend, cap).occupancy;
          if (n <= k_max) ++counts[b][n];
        }
      },
      workers);
  SimBatchResult out;
  out.t = t;
  out.k_max = k_max;
  out.runs = runs_per_batch;
  out.batches = batches;
  out.seed = seed;
  out.backend = backend;
  out.batch_means.assign(batches, std::vector<double>(k_max + 1));
  out.mean.assign(k_max + 1, 0.0);
  out.std.assign(k_max + 1, 0.0);
  for (std::size_t k = 0; k <= k_max; ++k) {
    std::uint64_t total = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      out.batch_means[b][k] = static_cast<double>(counts[b][k]) / static_cast<double>(runs_per_batch);
      total += counts[b][k];
    }
    out.mean[k] = static_cast<double>(total) / static_cast<double>(runs_per_batch * batches);
    double ss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) ss += (out.batch_means[b][k] - out.mean[k]) * (out.batch_means[b][k] - out.mean[k]);
    out.std[k] = std::sqrt(ss / static_cast<double>(batches - 1));
  }
  return out;
}

}  // namespace hawkesq
