#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "inversion.hpp"
#include "moments.hpp"
#include "simulator.hpp"

namespace hawkesq {

inline constexpr const char* version = "0.1.0";

enum class ExitCode : int { ok = 0, usage = 1, config = 2, precondition = 3, numeric = 4, io = 5 };

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
  }
};

struct CommandOutput {
  std::vector<std::pair<std::string, CsvTable>> files;  // file stem -> table
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"transient-moments", "stationary", "pmf-markov", "pmf-cluster",
                                                  "simulate", "heavy-traffic", "tail", "reproduce-table2"};
  return names;
}

inline InversionSettings inversion_settings(const ExperimentConfig& c) {
  InversionSettings s;
  s.gamma = c.number("gamma_digits");
  s.k_max = c.count("k_max");
  s.lattice_size = c.count("lattice_size");
  s.validate();
  return s;
}

inline ClusterSettings cluster_settings(const ExperimentConfig& c) {
  ClusterSettings s;
  s.grid_exponent = static_cast<unsigned>(c.count("grid_exponent"));
  s.n_iter = c.count("cluster_iterations");
  return s;
}

// Reference PMF rows bundled with the default parameter set, k = 0..13.
struct ReferenceTable {
  std::vector<double> cluster_upper, cluster_lower, cluster_point, diff_eqn, simulation, simulation_std;
};

inline const ReferenceTable& reference_table() {
  static const ReferenceTable t{
      {1.83e-1, 2.54e-1, 2.19e-1, 1.51e-1, 9.22e-2, 5.24e-2, 2.87e-2, 1.56e-2, 8.69e-3, 5.23e-3, 3.53e-3, 2.73e-3,
       2.34e-3, 2.16e-3},
      {1.83e-1, 2.53e-1, 2.17e-1, 1.48e-1, 8.91e-2, 4.89e-2, 2.49e-2, 1.17e-2, 4.74e-3, 1.23e-3, 0, 0, 0, 0},
      {1.83e-1, 2.54e-1, 2.18e-1, 1.50e-1, 9.08e-2, 5.07e-2, 2.68e-2, 1.36e-2, 6.73e-3, 3.24e-3, 1.53e-3, 7.12e-4,
       3.27e-4, 1.48e-4},
      {1.83e-1, 2.54e-1, 2.18e-1, 1.50e-1, 9.09e-2, 5.09e-2, 2.70e-2, 1.38e-2, 6.81e-3, 3.29e-3, 1.56e-3, 7.20e-4,
       3.34e-4, 1.53e-4},
      {1.83e-1, 2.54e-1, 2.18e-1, 1.50e-1, 9.10e-2, 5.09e-2, 2.70e-2, 1.37e-2, 6.8e-3, 3.3e-3, 1.6e-3, 7.4e-4, 3.4e-4,
       1.6e-4},
      {0.01e-1, 0.01e-1, 0.01e-1, 0.01e-1, 0.09e-2, 0.07e-2, 0.05e-2, 0.04e-2, 0.3e-3, 0.2e-3, 0.1e-3, 0.8e-4, 0.6e-4,
       0.4e-4}};
  return t;
}

struct ComparisonReport {
  std::vector<double> cluster_upper, cluster_lower, cluster_point, diff_eqn, simulation_mean, simulation_std;
  std::vector<std::string> failures;  // "method: message" for methods that did not complete
  CsvTable table;
};

namespace detail {

inline CsvTable pmf_table(const std::vector<double>& point, const std::vector<double>& lower,
                          const std::vector<double>& upper, const std::string& method) {
  CsvTable t{{"k", "point", "lower", "upper", "method"}, {}};
  for (std::size_t k = 0; k < point.size(); ++k)
    t.rows.push_back({std::to_string(k), fmt(point[k]), fmt(lower[k]), fmt(upper[k]), method});
  return t;
}

// Deviation from a bundled value beyond 1% relative or one unit of its last
// printed digit (the reference rows carry three significant figures).
inline bool deviates(double ours, double ref) {
  if (ref == 0.0) return ours > 5e-4;
  const double unit = std::pow(10.0, std::floor(std::log10(std::abs(ref))) - 2.0);
  return std::abs(ours - ref) > std::max(0.01 * std::abs(ref), unit);
}

}  // namespace detail

inline ComparisonReport reproduce_table2(const ExperimentConfig& c, bool paper_exact = false) {
  const ModelConfig cfg = c.model();
  const double t = c.number("horizon_time");
  const auto inv = inversion_settings(c);
  const auto cs = cluster_settings(c);
  const std::size_t n = inv.k_max + 1;
  ComparisonReport rep;
  const double nan = std::nan("");
  rep.cluster_upper.assign(n, nan);
  rep.cluster_lower.assign(n, nan);
  rep.cluster_point.assign(n, nan);
  rep.diff_eqn.assign(n, nan);
  rep.simulation_mean.assign(n, nan);
  rep.simulation_std.assign(n, nan);

  auto attempt = [&](const std::string& name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      rep.failures.push_back(name + ": " + e.what());
    }
  };
  attempt("cluster", [&] {
    const auto b = pmf_cluster(cfg, t, cs.n_iter, inv, cs);
    rep.cluster_point = b.point.mass;
    rep.cluster_lower = b.lower;
    rep.cluster_upper = b.upper;
  });
  attempt("diff_eqn", [&] { rep.diff_eqn = pmf_markov(cfg, t, inv, c.number("ode_step_time")).mass; });
  attempt("simulation", [&] {
    const std::size_t runs = paper_exact ? 100000 : c.count("runs_per_batch");
    const auto sim = batch_pmf(cfg, t, inv.k_max, runs, c.count("batches"), c.count("seed"), c.backend(),
                                c.count("sim_event_cap"));
    rep.simulation_mean = sim.mean;
    rep.simulation_std = sim.std;
  });

  const auto& ref = reference_table();
  rep.table.header = {"k", "cluster_upper", "cluster_lower", "cluster_point", "diff_eqn", "simulation_mean",
                      "simulation_std", "flags"};
  for (std::size_t k = 0; k < n; ++k) {
    std::string flags;
    auto flag = [&](const std::string& what) { flags += (flags.empty() ? "" : ";") + what; };
    if (k < ref.diff_eqn.size()) {
      auto check = [&](double ours, double r, const std::string& name) {
        if (std::isnan(ours)) flag(name + "_failed");
        else if (detail::deviates(ours, r)) flag(name + "_deviates");
      };
      check(rep.cluster_upper[k], ref.cluster_upper[k], "cluster_upper");
      check(rep.cluster_lower[k], ref.cluster_lower[k], "cluster_lower");
      check(rep.cluster_point[k], ref.cluster_point[k], "cluster_point");
      check(rep.diff_eqn[k], ref.diff_eqn[k], "diff_eqn");
      if (std::isnan(rep.simulation_mean[k])) flag("simulation_failed");
      else if (!std::isnan(rep.diff_eqn[k]) &&
               std::abs(rep.simulation_mean[k] - rep.diff_eqn[k]) > 3.0 * rep.simulation_std[k])
        flag("simulation_outside_3std");
    }
    rep.table.rows.push_back({std::to_string(k), fmt(rep.cluster_upper[k]), fmt(rep.cluster_lower[k]),
                              fmt(rep.cluster_point[k]), fmt(rep.diff_eqn[k]), fmt(rep.simulation_mean[k]),
                              fmt(rep.simulation_std[k]), flags.empty() ? "ok" : flags});
  }
  return rep;
}

// Runs one command and returns its tables. Throws the library exceptions.
inline CommandOutput compute_command(const std::string& command, const ExperimentConfig& c, bool paper_exact = false) {
  c.validate();
  const ModelConfig cfg = c.model();
  const double t = c.number("horizon_time");
  CommandOutput out;

  if (command == "transient-moments") {
    const int q = static_cast<int>(c.count("moment_order"));
    const double step = c.number("ode_step_time");
    CsvTable hier{{"t", "q", "k", "moment"}, {}};
    CsvTable closed{{"t", "mean_lambda", "mean_n", "lambda_sq", "lambda_n", "n_sq"}, {}};
    for (double tt : c.list("moment_times")) {
      const auto mv = transient_moments(cfg, q, tt, step);
      for (const auto& v : mv)
        for (std::size_t k = 0; k < v.entries.size(); ++k)
          hier.rows.push_back({fmt(tt), std::to_string(v.q), std::to_string(k), fmt(v.entries[k])});
      const auto f = first_moments_closed(cfg, tt);
      const auto s = second_moments_closed(cfg, tt);
      closed.rows.push_back({fmt(tt), fmt(f.mean_lambda), fmt(f.mean_n), fmt(s.lambda_sq), fmt(s.lambda_times_n),
                             fmt(s.n_sq)});
    }
    out.files.push_back({"transient_moments", hier});
    out.files.push_back({"closed_form_moments", closed});
  } else if (command == "stationary") {
    const auto s = stationary_summary(cfg);
    CsvTable tab{{"quantity", "value"}, {}};
    tab.rows = {{"rho", fmt(load_summary(cfg).rho)},   {"mean_lambda", fmt(s.mean_lambda)},
                {"mean_n", fmt(s.mean_n)},             {"var_lambda", fmt(s.var_lambda)},
                {"var_n", fmt(s.var_n)},               {"cov_n_lambda", fmt(s.cov_n_lambda)},
                {"corr_n_lambda", fmt(s.corr_n_lambda)}};
    out.files.push_back({"stationary", tab});
  } else if (command == "pmf-markov") {
    const auto inv = inversion_settings(c);
    const auto p = pmf_markov(cfg, t, inv, c.number("ode_step_time"));
    std::vector<double> lo(p.mass.size()), up(p.mass.size());
    for (std::size_t k = 0; k < p.mass.size(); ++k) {
      lo[k] = std::max(0.0, p.mass[k] - p.aliasing_bound);
      up[k] = p.mass[k] + p.aliasing_bound;
    }
    out.files.push_back({"pmf_markov", detail::pmf_table(p.mass, lo, up, p.method)});
  } else if (command == "pmf-cluster") {
    const auto inv = inversion_settings(c);
    const auto cs = cluster_settings(c);
    const auto b = pmf_cluster(cfg, t, cs.n_iter, inv, cs);
    out.files.push_back({"pmf_cluster", detail::pmf_table(b.point.mass, b.lower, b.upper, "cluster")});
  } else if (command == "simulate") {
    const std::size_t runs = paper_exact ? 100000 : c.count("runs_per_batch");
    const auto sim = batch_pmf(cfg, t, c.count("k_max"), runs, c.count("batches"), c.count("seed"), c.backend(),
                               c.count("sim_event_cap"));
    CsvTable tab{{"k", "mean", "std"}, {}};
    for (std::size_t k = 0; k < sim.mean.size(); ++k)
      tab.rows.push_back({std::to_string(k), fmt(sim.mean[k]), fmt(sim.std[k])});
    out.files.push_back({"simulation", tab});
  } else if (command == "heavy-traffic") {
    const double s_max = c.number("ht_s_max");
    const auto points = std::max<std::uint64_t>(2, c.count("ht_s_points"));
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) grid[i] = s_max * static_cast<double>(i) / static_cast<double>(points - 1);
    const auto sim_runs = c.count("ht_sim_runs");
    CsvTable tab{{"rho", "b2", "shape", "rate_lambda", "rate_n", "gap_lambda", "gap_n_sim", "gap_n_se"}, {}};
    for (double rho : c.list("rho_sweep")) {
      const ModelConfig m = with_load(cfg, rho);
      const auto gl = heavy_traffic_gamma(m, HeavyTrafficTarget::lambda);
      const auto gn = heavy_traffic_gamma(m, HeavyTrafficTarget::occupancy);
      const double gap = lambda_heavy_traffic_gap(m, grid);
      double gap_n = std::nan(""), se_n = std::nan("");
      if (sim_runs > 0) {
        const double horizon = 10.0 / std::min(m.service().rate(), *load_summary(m).r0);
        const auto samples = sample_runs(m, horizon, sim_runs, c.count("seed"), c.backend(), c.count("sim_event_cap"));
        gap_n = 0.0;
        se_n = 0.0;
        for (double s : grid) {
          double acc = 0.0, acc2 = 0.0;
          for (const auto& r : samples) {
            const double v = std::exp(-s * (1.0 - rho) * static_cast<double>(r.occupancy));
            acc += v;
            acc2 += v * v;
          }
          const double nn = static_cast<double>(samples.size());
          const double mean = acc / nn;
          const double se = std::sqrt(std::max(0.0, acc2 / nn - mean * mean) / nn);
          gap_n = std::max(gap_n, std::abs(mean - gn.lst(s)));
          se_n = std::max(se_n, se);
        }
      }
      tab.rows.push_back({fmt(rho), fmt(m.marks().require_moment(2)), fmt(gl.shape), fmt(gl.rate), fmt(gn.rate),
                          fmt(gap), fmt(gap_n), fmt(se_n)});
    }
    out.files.push_back({"heavy_traffic", tab});
  } else if (command == "tail") {
    if (cfg.marks().kind() != MarkDistribution::Kind::pareto)
      throw precondition_error("tail expansion needs regularly varying (pareto) marks");
    const auto spec = HeavyTailSpec::from_marks(cfg.marks());
    const auto cs = cluster_settings(c);
    const double step = t / std::ldexp(1.0, static_cast<int>(cs.grid_exponent));
    const auto ex = tail_pgf_expansion(cfg, spec, t, step);
    CsvTable tab{{"one_minus_z", "residual_ratio", "target", "relative_error", "linear_coeff", "alpha_coeff"}, {}};
    for (double j : c.list("tail_z_exponents")) {
      const double w = std::pow(10.0, -j);
      const double ratio = tail_residual_ratio(cfg, spec, t, w, ex, cs.grid_exponent);
      const double target = -ex.alpha_coeff;
      tab.rows.push_back({fmt(w), fmt(ratio), fmt(target), fmt(std::abs(ratio - target) / std::abs(target)),
                          fmt(ex.linear_coeff), fmt(ex.alpha_coeff)});
    }
    out.files.push_back({"tail", tab});
  } else if (command == "reproduce-table2") {
    const auto rep = reproduce_table2(c, paper_exact);
    out.files.push_back({"table2", rep.table});
    if (!rep.failures.empty()) {
      CsvTable f{{"method_failure"}, {}};
      for (const auto& s : rep.failures) f.rows.push_back({"\"" + s + "\""});
      out.files.push_back({"table2_failures", f});
    }
  } else {
    throw config_error("unknown command '" + command + "'");
  }
  return out;
}

struct CommandOptions {
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool paper_exact = false;
};

// Full command: load, validate, compute, then write CSV files plus a sidecar
// "<stem>.meta" in config syntax. Nothing is written unless the computation
// succeeded.
inline int run_command(const CommandOptions& opt, std::ostream& err = std::cerr) {
  try {
    bool known = false;
    for (const auto& name : commands()) known = known || name == opt.command;
    if (!known) {
      err << "unknown command '" << opt.command << "'\n";
      return static_cast<int>(ExitCode::usage);
    }
    ExperimentConfig c = ExperimentConfig::load(opt.config_path);
    if (opt.seed) c.set("seed", std::to_string(*opt.seed));
    if (opt.paper_exact) c.set("runs_per_batch", "100000");
    c.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto result = compute_command(opt.command, c, opt.paper_exact);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      std::filesystem::create_directories(opt.out_dir);
      for (const auto& [stem, table] : result.files) {
        const auto base = std::filesystem::path(opt.out_dir) / stem;
        std::ofstream csv(base.string() + ".csv");
        csv << table.to_string();
        std::ofstream meta(base.string() + ".meta");
        meta << "# hawkesq " << version << "\n# command = " << opt.command << "\n# wall_time_seconds = " << wall
             << "\n"
             << c.to_text();
        if (!csv || !meta) throw std::runtime_error("write failed for " + base.string());
      }
    } catch (const std::exception& e) {
      err << "I/O error: " << e.what() << "\n";
      return static_cast<int>(ExitCode::io);
    }
    return static_cast<int>(ExitCode::ok);
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config);
  } catch (const precondition_error& e) {
    err << "precondition violated: " << e.what() << "\n";
    return static_cast<int>(ExitCode::precondition);
  } catch (const numeric_error& e) {
    err << "numeric failure: " << e.what() << "\n";
    return static_cast<int>(ExitCode::numeric);
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return static_cast<int>(ExitCode::numeric);
  }
}

}  // namespace hawkesq
