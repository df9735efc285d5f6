#pragma once

#include "duonet/config.hpp"
#include "duonet/core.hpp"
#include "duonet/diagnostics.hpp"
#include "duonet/graph.hpp"
#include "duonet/oracles.hpp"
#include "duonet/solver_det.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace duonet {

// Positive root of 2 L α² - α - A = 0, so that A + α = 2 L α².
inline double next_alpha(double A, double L_psi) {
  return (1.0 + std::sqrt(1.0 + 8.0 * L_psi * A)) / (4.0 * L_psi);
}

// ⌈c_r max{1, σ_ψ² α ln(N/δ) / ε}⌉, saturating at LONG_MAX.
inline long batch_size(double alpha, double sigma_psi_sq, long N, double delta, double eps,
                       double c_r) {
  const double raw =
      sigma_psi_sq * alpha * std::log(static_cast<double>(N) / delta) / eps;
  const double target = c_r * std::max(1.0, raw);
  if (!(target < static_cast<double>(std::numeric_limits<long>::max()))) {
    return std::numeric_limits<long>::max();
  }
  return std::max(1L, detail::ceil_count(target));
}

inline long predict_iterations_stoch(double M_F_sq, double mu, double chi, double eps,
                                     double c_N) {
  return predict_iterations_det(M_F_sq, mu, chi, eps, c_N);
}

struct AlphaSequenceReport {
  double max_rel_residual = 0.0;  // max |2Lα² - α - A| / (2Lα²)
  bool bound_holds = true;        // α_{k+1} <= (k+2)/(2L) for every k
  double A_final = 0.0;
  double alpha_sum = 0.0;
};

// Runs the α/A recurrence for `steps` iterations and checks it.
inline AlphaSequenceReport check_alpha_sequence(double L_psi, long steps) {
  AlphaSequenceReport rep;
  double A = 0.0;
  for (long k = 0; k < steps; ++k) {
    const double alpha = next_alpha(A, L_psi);
    const double lhs = 2.0 * L_psi * alpha * alpha;
    const double resid = std::abs(lhs - alpha - A) / lhs;
    rep.max_rel_residual = std::max(rep.max_rel_residual, resid);
    if (alpha > static_cast<double>(k + 2) / (2.0 * L_psi) * (1.0 + 1e-12)) rep.bound_holds = false;
    A += alpha;
    rep.alpha_sum += alpha;
  }
  rep.A_final = A;
  return rep;
}

struct StochState {
  long k = 0;
  double alpha = 0.0;
  double A = 0.0;
  long r = 0;
  BlockVector lambda;
  BlockVector zeta;
  BlockVector y;
  BlockVector x_batch;         // x(√W λ^k, {ξ}) of the latest iteration
  BlockVector x_weighted_sum;  // Σ α_{t} x(√W λ^{t}, {ξ})
  long long oracle_calls = 0;  // Σ r_t, per node
  long long comm_rounds = 0;
};

struct StochOptions {
  std::function<void(const StochState&)> observer;
  // Known optimum of the test instance; switches the trace gap to F(x^k) - F*.
  std::optional<double> F_star;
  // Known dual solution; enables the radius column ||ζ^k - y*||.
  std::optional<BlockVector> y_star;
  // Record every `trace_stride`-th iteration (the last one always).
  long trace_stride = 1;
};

struct StochResult {
  BlockVector x;
  BlockVector y;
  std::vector<TraceRecord> trace;
  long long total_oracle_calls = 0;
  long long comm_rounds = 0;
  long iterations = 0;
  double L_psi = 0.0;
  double sigma_psi_sq = 0.0;
  std::vector<std::string> warnings;
};

struct ResolvedConstants {
  double mu = 0.0;
  double L_psi = 0.0;
  long N = 0;
  StochasticDualConfig noise;
};

// Fills L_ψ = λ_max(W)/μ and the horizon N from the config and oracles.
inline ResolvedConstants resolve_constants(const NetworkGraph& g, const OracleSet& oracles,
                                           const SolverConfig& cfg) {
  ResolvedConstants rc;
  auto mu = cfg.mu ? cfg.mu : common_strong_convexity(oracles);
  if (cfg.L_psi) {
    rc.L_psi = *cfg.L_psi;
  } else {
    if (!mu) throw ConfigError("L-psi or mu is required: oracles do not advertise mu");
    if (!(g.lambda_max() > 0.0)) throw ConfigError("L-psi is required on a single-node graph");
    rc.L_psi = g.lambda_max() / *mu;
  }
  rc.mu = mu.value_or(0.0);
  if (cfg.N_override) {
    rc.N = *cfg.N_override;
  } else {
    if (!cfg.M_F_sq) throw ConfigError("M-F-sq or iterations is required to pick the horizon");
    if (!mu) throw ConfigError("mu is required to pick the horizon");
    rc.N = predict_iterations_stoch(*cfg.M_F_sq, *mu, g.chi(), cfg.eps, cfg.c_N);
  }
  rc.noise = StochasticDualConfig::from_graph(g, cfg.sigma_x_sq);
  return rc;
}

// Accelerated method driven by batched stochastic dual gradients. The ergodic
// output is x^N = (1/A_N) Σ_{k<N} α_{k+1} x(√W λ^{k+1}, {ξ}).
inline StochResult solve_stochastic(const NetworkGraph& g, const OracleSet& oracles,
                                    const SolverConfig& cfg, const StochOptions& opts = {}) {
  cfg.validate();
  check_oracles(oracles, g.m());
  const ResolvedConstants rc = resolve_constants(g, oracles, cfg);
  const SqrtLaplacian sqrt_w(g);
  const auto n = block_dim(oracles);
  const long N = rc.N;
  const long stride = std::max(1L, opts.trace_stride);

  StochResult res;
  res.iterations = N;
  res.L_psi = rc.L_psi;
  res.sigma_psi_sq = rc.noise.sigma_psi_sq;
  if (!log_horizon_ok(N, cfg.delta)) {
    res.warnings.push_back("ln(N/delta) = " +
                           std::to_string(std::log(static_cast<double>(N) / cfg.delta)) +
                           " < 3; the high-probability bound does not apply");
  }

  StochState st;
  st.lambda = BlockVector::Zero(g.m(), n);
  st.zeta = BlockVector::Zero(g.m(), n);
  st.y = BlockVector::Zero(g.m(), n);
  st.x_weighted_sum = BlockVector::Zero(g.m(), n);

  for (long k = 0; k < N; ++k) {
    const double alpha = next_alpha(st.A, rc.L_psi);
    const double A_prev = st.A;
    const double A_next = A_prev + alpha;
    const long r = batch_size(alpha, rc.noise.sigma_psi_sq, N, cfg.delta, cfg.eps, cfg.c_r);
    if (r > cfg.batch_cap) {
      throw BatchOverflow("batch size " + std::to_string(r) + " at iteration " +
                          std::to_string(k + 1) + " exceeds the cap " +
                          std::to_string(cfg.batch_cap));
    }

    st.lambda = (alpha * st.zeta + A_prev * st.y) / A_next;
    st.x_batch = batched_primal(oracles, sqrt_w, st.lambda, r,
                                BatchKey{cfg.seed, static_cast<std::uint64_t>(k)});
    st.zeta -= alpha * apply_sqrtW(sqrt_w, st.x_batch);
    st.y = (alpha * st.zeta + A_prev * st.y) / A_next;
    st.x_weighted_sum += alpha * st.x_batch;

    st.alpha = alpha;
    st.A = A_next;
    st.r = r;
    st.k = k + 1;
    st.oracle_calls += r;
    ++st.comm_rounds;
    detail::require_finite(st.y, "dual iterate", st.k);
    detail::require_finite(st.x_batch, "primal batch", st.k);

    if (st.k % stride == 0 || st.k == N) {
      const BlockVector x_avg = st.x_weighted_sum / st.A;
      TraceRecord rec;
      rec.k = st.k;
      const double F = primal_objective(oracles, x_avg);
      rec.gap = opts.F_star ? F - *opts.F_star : F + dual_value(oracles, sqrt_w, st.y);
      rec.consensus_residual = consensus_residual(g, x_avg);
      if (opts.y_star) rec.radius = (st.zeta - *opts.y_star).norm();
      rec.r_k = r;
      rec.cum_oracle_calls = st.oracle_calls;
      rec.cum_comm_rounds = st.comm_rounds;
      rec.alpha_k = alpha;
      rec.A_k = st.A;
      res.trace.push_back(rec);
    }
    if (opts.observer) opts.observer(st);
  }
  res.x = st.x_weighted_sum / st.A;
  res.y = st.y;
  res.total_oracle_calls = st.oracle_calls;
  res.comm_rounds = st.comm_rounds;
  return res;
}

}  // namespace duonet
