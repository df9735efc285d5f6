#pragma once

#include "duonet/core.hpp"
#include "duonet/diagnostics.hpp"
#include "duonet/graph.hpp"
#include "duonet/oracles.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace duonet {

// Iterate of the deterministic method. All block vectors live in the image
// of √W (the "barred" variables), which is what each node stores.
struct DetState {
  long k = 0;
  double alpha = 0.0;
  double A = 0.0;
  BlockVector lambda_bar;
  BlockVector zeta_bar;
  BlockVector y_bar;
  BlockVector x_weighted_sum;  // Σ α_t x(λ̄^t)
  long long comm_rounds = 0;
};

struct DetOptions {
  // Called after every iteration with the updated state.
  std::function<void(const DetState&)> observer;
};

struct DetResult {
  BlockVector x;      // ergodic primal average x^N
  BlockVector y_bar;  // ȳ^N
  std::vector<TraceRecord> trace;
  long long comm_rounds = 0;
};

namespace detail {

inline long ceil_count(double v) {
  // Absorb rounding noise so exact integers are not bumped up by one.
  return static_cast<long>(std::ceil(v * (1.0 - 1e-12)));
}

inline void require_finite(const BlockVector& v, const char* what, long k) {
  if (!v.allFinite()) {
    throw NonFiniteIterate(std::string(what) + " became non-finite at iteration " +
                           std::to_string(k) + " (is L_psi too small?)");
  }
}

}  // namespace detail

// Accelerated dual method with α_{k+1} = (k+2)/(4L). Each iteration applies
// W once (one neighbour exchange) and queries every x_i once.
inline DetResult solve_deterministic(const NetworkGraph& g, const OracleSet& oracles, double L_psi,
                                     long N, const DetOptions& opts = {}) {
  check_oracles(oracles, g.m());
  if (N < 1) throw InputError("iterations must be >= 1");
  if (!(L_psi > 0.0)) throw InputError("L_psi must be > 0");
  const auto n = block_dim(oracles);

  DetState st;
  st.lambda_bar = BlockVector::Zero(g.m(), n);
  st.zeta_bar = BlockVector::Zero(g.m(), n);
  st.y_bar = BlockVector::Zero(g.m(), n);
  st.x_weighted_sum = BlockVector::Zero(g.m(), n);

  DetResult res;
  res.trace.reserve(static_cast<std::size_t>(N));
  for (long k = 0; k < N; ++k) {
    const double alpha = static_cast<double>(k + 2) / (4.0 * L_psi);
    const double A_prev = st.A;
    const double A_next = A_prev + alpha;

    st.lambda_bar = (alpha * st.zeta_bar + A_prev * st.y_bar) / A_next;
    const BlockVector x = primal_argmax(oracles, st.lambda_bar);
    st.zeta_bar -= alpha * apply_W(g, x);
    ++st.comm_rounds;
    st.y_bar = (alpha * st.zeta_bar + A_prev * st.y_bar) / A_next;
    st.x_weighted_sum += alpha * x;
    st.alpha = alpha;
    st.A = A_next;
    st.k = k + 1;
    detail::require_finite(st.y_bar, "dual iterate", st.k);
    detail::require_finite(x, "primal iterate", st.k);

    const BlockVector x_avg = st.x_weighted_sum / st.A;
    TraceRecord rec;
    rec.k = st.k;
    rec.gap = primal_objective(oracles, x_avg) + conjugate_sum(oracles, st.y_bar);
    rec.consensus_residual = consensus_residual(g, x_avg);
    rec.r_k = 1;
    rec.cum_oracle_calls = st.k;
    rec.cum_comm_rounds = st.comm_rounds;
    rec.alpha_k = alpha;
    rec.A_k = st.A;
    res.trace.push_back(rec);

    if (opts.observer) opts.observer(st);
  }
  res.x = st.x_weighted_sum / st.A;
  res.y_bar = st.y_bar;
  res.comm_rounds = st.comm_rounds;
  return res;
}

// ⌈c_N sqrt(M_F² χ / (μ ε))⌉.
inline long predict_iterations_det(double M_F_sq, double mu, double chi, double eps, double c_N) {
  if (!(M_F_sq > 0.0 && mu > 0.0 && chi > 0.0 && eps > 0.0 && c_N > 0.0)) {
    throw InputError("predict_iterations: all inputs must be positive");
  }
  return std::max(1L, detail::ceil_count(c_N * std::sqrt(M_F_sq * chi / (mu * eps))));
}

}  // namespace duonet
