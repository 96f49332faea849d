// Occupancy distribution at t = 10 for the default parameter set, computed by
// the characteristic-ODE route and bracketed by the cluster fixed point.
#include <cstdio>

#include "hawkesq/hawkesq.hpp"

int main() {
  const auto cfg = hawkesq::table1_config();
  hawkesq::InversionSettings inv;
  inv.k_max = 10;

  const auto markov = hawkesq::pmf_markov(cfg, 10.0, inv);
  const auto cluster = hawkesq::pmf_cluster(cfg, 10.0, 10, inv);
  const auto st = hawkesq::stationary_summary(cfg);

  std::printf("load rho = %.6f, stationary E N = %.6f, Var N = %.6f\n", hawkesq::load_summary(cfg).rho, st.mean_n,
              st.var_n);
  std::printf("%3s %12s %12s %12s\n", "k", "ode", "lower", "upper");
  for (std::size_t k = 0; k <= inv.k_max; ++k)
    std::printf("%3zu %12.4e %12.4e %12.4e\n", k, markov.mass[k], cluster.lower[k], cluster.upper[k]);
  return 0;
}
