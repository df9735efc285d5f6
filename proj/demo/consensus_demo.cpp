// Averaging over a ring: every node holds a private center, the network
// agrees on their mean. Runs both methods and prints the final errors.

#include "duonet.hpp"

#include <cstdio>

using namespace duonet;

int main() {
  const int m = 8, n = 3;
  const auto g = build_graph(Topology::cycle(), m);
  const auto oracles = make_quadratic_oracles(ramp_centers(m, n), 1.0, 0.5);
  const auto ref = quadratic_reference(g, oracles);
  std::printf("cycle m=%d: lambda_max %.4f, lambda_min+ %.4f, chi %.3f\n", m, g.lambda_max(),
              g.lambda_min_plus(), g.chi());

  const double eps = 0.05;
  const long N = predict_iterations_det(ref.M_F_sq, 1.0, g.chi(), eps, 4.0);
  const auto det = solve_deterministic(g, oracles, g.lambda_max(), N);
  std::printf("det   N=%ld  F-F*=%+.2e  ||sqrt(W)x||=%.2e\n", N,
              primal_objective(oracles, det.x) - ref.F_star, consensus_residual(g, det.x));

  SolverConfig cfg;
  cfg.eps = eps;
  cfg.seed = 7;
  cfg.sigma_x_sq = 0.5;
  cfg.M_F_sq = ref.M_F_sq;
  cfg.c_N = 4.0;
  const auto st = solve_stochastic(g, oracles, cfg);
  std::printf("stoch N=%ld  F-F*=%+.2e  ||sqrt(W)x||=%.2e  oracle calls/node=%lld\n",
              st.iterations, primal_objective(oracles, st.x) - ref.F_star,
              consensus_residual(g, st.x), st.total_oracle_calls);
  std::printf("target residual eps/R_y = %.2e\n", eps / ref.R_y);
  for (int i = 0; i < m; i += 3) {
    std::printf("node %d: ", i);
    for (int j = 0; j < n; ++j) std::printf("%8.4f ", st.x(i, j));
    std::printf("(mean %8.4f ...)\n", ref.x_star(0, 0));
  }
}
