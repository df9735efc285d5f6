#pragma once

#include "duonet/config.hpp"
#include "duonet/diagnostics.hpp"
#include "duonet/graph.hpp"
#include "duonet/oracles.hpp"
#include "duonet/solver_stoch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace duonet {

// Runs fn(0), ..., fn(trials - 1) on up to `threads` workers. Results come
// back ordered by trial index; the first failing trial (by index) rethrows.
template <class Fn>
auto run_trials(int trials, Fn&& fn, unsigned threads = 1)
    -> std::vector<std::invoke_result_t<Fn&, int>> {
  using R = std::invoke_result_t<Fn&, int>;
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(std::max(trials, 0)));
  std::vector<std::exception_ptr> errors(slots.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        slots[t].emplace(fn(t));
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const unsigned n_workers = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::max(trials, 1)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  std::vector<R> out;
  out.reserve(slots.size());
  for (std::size_t t = 0; t < slots.size(); ++t) {
    if (errors[t]) std::rethrow_exception(errors[t]);
    out.push_back(std::move(*slots[t]));
  }
  return out;
}

// Outcome of one stochastic run on an instance with known optimum.
struct TrialOutcome {
  std::uint64_t seed = 0;
  double objective_error = 0.0;     // F(x^N) - F*
  double consensus_residual = 0.0;  // ||√W x^N||
  long long oracle_calls = 0;
  long iterations = 0;
  bool success = false;             // both at most eps and eps / R_y
};

inline TrialOutcome evaluate_trial(const NetworkGraph& g, const OracleSet& oracles,
                                   const StochResult& res, double F_star, double R_y, double eps,
                                   std::uint64_t seed) {
  TrialOutcome out;
  out.seed = seed;
  out.objective_error = primal_objective(oracles, res.x) - F_star;
  out.consensus_residual = consensus_residual(g, res.x);
  out.oracle_calls = res.total_oracle_calls;
  out.iterations = res.iterations;
  out.success = out.objective_error <= eps && out.consensus_residual <= eps / R_y;
  return out;
}

// Seed sweep of the stochastic solver on a quadratic instance; trial t uses
// seed = cfg.seed + t.
inline std::vector<TrialOutcome> quadratic_trials(const NetworkGraph& g, const OracleSet& oracles,
                                                  const SolverConfig& cfg, int trials,
                                                  unsigned threads = 1) {
  const QuadraticReference ref = quadratic_reference(g, oracles);
  SolverConfig base = cfg;
  if (!base.M_F_sq) base.M_F_sq = ref.M_F_sq;
  return run_trials(
      trials,
      [&](int t) {
        SolverConfig c = base;
        c.seed = base.seed + static_cast<std::uint64_t>(t);
        StochOptions opts;
        opts.trace_stride = std::numeric_limits<long>::max();
        const StochResult res = solve_stochastic(g, oracles, c, opts);
        return evaluate_trial(g, oracles, res, ref.F_star, ref.R_y, c.eps, c.seed);
      },
      threads);
}

inline double success_fraction(const std::vector<TrialOutcome>& outcomes) {
  if (outcomes.empty()) return 0.0;
  const auto ok = std::count_if(outcomes.begin(), outcomes.end(),
                                [](const TrialOutcome& o) { return o.success; });
  return static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

}  // namespace duonet
