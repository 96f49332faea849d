#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "simulator.hpp"

namespace hawkesq {

// Flat "key = value" experiment description. Lines starting with '#' (or the
// part of a line after '#') are comments. Unknown keys are rejected. Key
// suffixes carry units: *_per_time is a rate, *_time a duration.
class ExperimentConfig {
 public:
  static const std::vector<std::pair<std::string, std::string>>& schema() {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"lambda_inf_per_time", "1.45"},
        {"kernel", "exponential"},
        {"kernel_rate_per_time", "2.15"},
        {"kernel_samples", ""},
        {"kernel_sample_step_time", "0.01"},
        {"kernel_tail_mass", "0"},
        {"marks", "deterministic"},
        {"mark_size", "0.98"},
        {"mark_rate", "1"},
        {"mark_pareto_alpha", "1.5"},
        {"mark_pareto_scale", "1"},
        {"service", "exponential"},
        {"service_rate_per_time", "1.25"},
        {"service_duration_time", "1"},
        {"service_survival_samples", ""},
        {"service_sample_step_time", "0.01"},
        {"horizon_time", "10"},
        {"k_max", "13"},
        {"gamma_digits", "4"},
        {"lattice_size", "0"},
        {"ode_step_time", "1e-4"},
        {"cluster_iterations", "10"},
        {"grid_exponent", "12"},
        {"runs_per_batch", "10000"},
        {"batches", "100"},
        {"seed", "20190301"},
        {"backend", "cluster"},
        {"sim_event_cap", "10000000"},
        {"moment_order", "1"},
        {"moment_times", "0, 0.1, 1, 5, 10"},
        {"rho_sweep", "0.9, 0.99"},
        {"ht_s_max", "5"},
        {"ht_s_points", "101"},
        {"ht_sim_runs", "0"},
        {"tail_z_exponents", "2, 3, 4, 5"},
    };
    return keys;
  }

  ExperimentConfig() {
    for (const auto& [k, v] : schema()) values_[k] = v;
  }

  static ExperimentConfig parse(std::istream& in, const std::string& source = "<config>") {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!cfg.values_.count(key)) throw config_error(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
      cfg.values_[key] = value;
    }
    cfg.validate();
    return cfg;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw config_error("unknown key '" + key + "'");
    values_[key] = value;
  }

  const std::string& raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw config_error("unknown key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const { return to_double(key, raw(key)); }

  std::uint64_t count(const std::string& key) const {
    const std::string& s = raw(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw config_error("key '" + key + "' needs a nonnegative integer, got '" + s + "'");
    return v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_double(key, item));
    }
    return out;
  }

  ModelConfig model() const {
    const double lam = number("lambda_inf_per_time");
    const std::string& kk = raw("kernel");
    ExcitationKernel kernel = [&] {
      if (kk == "exponential") return ExcitationKernel::exponential(number("kernel_rate_per_time"));
      if (kk == "tabulated")
        return ExcitationKernel::tabulated(list("kernel_samples"), number("kernel_sample_step_time"),
                                           number("kernel_tail_mass"));
      throw config_error("kernel must be 'exponential' or 'tabulated', got '" + kk + "'");
    }();
    const std::string& mk = raw("marks");
    MarkDistribution marks = [&] {
      if (mk == "deterministic") return MarkDistribution::deterministic(number("mark_size"));
      if (mk == "exponential") return MarkDistribution::exponential(number("mark_rate"));
      if (mk == "pareto") return MarkDistribution::pareto(number("mark_pareto_alpha"), number("mark_pareto_scale"));
      throw config_error("marks must be 'deterministic', 'exponential' or 'pareto', got '" + mk + "'");
    }();
    const std::string& sk = raw("service");
    ServiceDistribution service = [&] {
      if (sk == "exponential") return ServiceDistribution::exponential(number("service_rate_per_time"));
      if (sk == "deterministic") return ServiceDistribution::deterministic(number("service_duration_time"));
      if (sk == "tabulated")
        return ServiceDistribution::tabulated(list("service_survival_samples"), number("service_sample_step_time"));
      throw config_error("service must be 'exponential', 'deterministic' or 'tabulated', got '" + sk + "'");
    }();
    return ModelConfig(lam, std::move(kernel), std::move(marks), std::move(service));
  }

  Backend backend() const {
    const std::string& b = raw("backend");
    if (b == "cluster") return Backend::cluster;
    if (b == "thinning") return Backend::thinning;
    throw config_error("backend must be 'cluster' or 'thinning', got '" + b + "'");
  }

  // Everything that can be checked without running a computation.
  void validate() const {
    (void)model();
    (void)backend();
    if (!(number("horizon_time") > 0.0)) throw config_error("horizon_time must be > 0");
    if (!(number("gamma_digits") > 0.0)) throw config_error("gamma_digits must be > 0");
    if (!(number("ode_step_time") > 0.0)) throw config_error("ode_step_time must be > 0");
    const auto k_max = count("k_max");
    const auto lattice = count("lattice_size");
    if (lattice != 0 && lattice < std::max<std::uint64_t>(k_max, 1)) throw config_error("lattice_size must be >= k_max");
    (void)count("cluster_iterations");
    if (count("grid_exponent") > 20) throw config_error("grid_exponent must be <= 20");
    if (count("runs_per_batch") < 1) throw config_error("runs_per_batch must be >= 1");
    if (count("batches") < 2) throw config_error("batches must be >= 2");
    (void)count("seed");
    if (count("sim_event_cap") < 1) throw config_error("sim_event_cap must be >= 1");
    (void)count("moment_order");
    (void)count("ht_s_points");
    (void)count("ht_sim_runs");
    for (double t : list("moment_times"))
      if (!(t >= 0.0)) throw config_error("moment_times must be >= 0");
    for (double r : list("rho_sweep"))
      if (!(r > 0.0 && r < 1.0)) throw config_error("rho_sweep entries must lie in (0, 1)");
    if (!(number("ht_s_max") > 0.0)) throw config_error("ht_s_max must be > 0");
    for (double j : list("tail_z_exponents"))
      if (!(j > 0.0)) throw config_error("tail_z_exponents must be > 0");
  }

  // Canonical text form, parseable by parse().
  std::string to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : schema()) os << k << " = " << values_.at(k) << "\n";
    return os.str();
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static double to_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      throw config_error("key '" + key + "' needs a number, got '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace hawkesq
