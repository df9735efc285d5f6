#pragma once

#include "duonet/core.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace duonet {

struct SolverConfig {
  double eps = 0.0;
  double delta = 0.05;
  std::uint64_t seed = 0;
  double c_N = 1.0;   // multiplier of the iteration-count rule
  double c_r = 1.0;   // multiplier of the batch-size rule
  std::optional<double> L_psi;
  std::optional<double> mu;
  std::optional<double> M_F_sq;
  double sigma_x_sq = 0.0;
  std::optional<long> N_override;
  long batch_cap = 10'000'000;
  int trials = 1;

  // Throws ConfigError naming the offending field.
  void validate() const {
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (!(delta > 0.0 && delta < 0.25)) throw ConfigError("delta must lie in (0, 0.25)");
    if (!(c_N > 0.0)) throw ConfigError("c-n must be > 0");
    if (!(c_r > 0.0)) throw ConfigError("c-r must be > 0");
    if (L_psi && !(*L_psi > 0.0)) throw ConfigError("L-psi must be > 0");
    if (mu && !(*mu > 0.0)) throw ConfigError("mu must be > 0");
    if (M_F_sq && !(*M_F_sq >= 0.0)) throw ConfigError("M-F-sq must be >= 0");
    if (!(sigma_x_sq >= 0.0)) throw ConfigError("sigma-x-sq must be >= 0");
    if (N_override && *N_override < 1) throw ConfigError("iterations must be >= 1");
    if (batch_cap < 1) throw ConfigError("batch-cap must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
  }
};

// Side condition ln(N/δ) >= 3 of the high-probability bound.
inline bool log_horizon_ok(long N, double delta) {
  return std::log(static_cast<double>(N) / delta) >= 3.0;
}

}  // namespace duonet
