#pragma once

#include "duonet/core.hpp"
#include "duonet/graph.hpp"
#include "duonet/oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace duonet {

// One row of a solver trace.
struct TraceRecord {
  long k = 0;
  double gap = 0.0;
  double consensus_residual = 0.0;
  std::optional<double> radius;
  long r_k = 0;
  long long cum_oracle_calls = 0;
  long long cum_comm_rounds = 0;
  double alpha_k = 0.0;
  double A_k = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline nlohmann::ordered_json trace_row_json(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["k"] = r.k;
  j["gap"] = r.gap;
  j["consensus_residual"] = r.consensus_residual;
  j["radius"] = r.radius ? nlohmann::ordered_json(*r.radius) : nlohmann::ordered_json();
  j["r_k"] = r.r_k;
  j["cum_oracle_calls"] = r.cum_oracle_calls;
  j["cum_comm_rounds"] = r.cum_comm_rounds;
  j["alpha_k"] = r.alpha_k;
  j["A_k"] = r.A_k;
  return j;
}

inline void from_json(const nlohmann::json& j, TraceRecord& r) {
  j.at("k").get_to(r.k);
  j.at("gap").get_to(r.gap);
  j.at("consensus_residual").get_to(r.consensus_residual);
  const auto& rad = j.at("radius");
  r.radius = rad.is_null() ? std::nullopt : std::optional<double>(rad.get<double>());
  j.at("r_k").get_to(r.r_k);
  j.at("cum_oracle_calls").get_to(r.cum_oracle_calls);
  j.at("cum_comm_rounds").get_to(r.cum_comm_rounds);
  j.at("alpha_k").get_to(r.alpha_k);
  j.at("A_k").get_to(r.A_k);
}

inline void write_ndjson(std::ostream& out, std::span<const TraceRecord> trace) {
  for (const auto& r : trace) out << trace_row_json(r).dump() << '\n';
}

inline std::vector<TraceRecord> read_ndjson(std::istream& in) {
  std::vector<TraceRecord> trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRecord r;
    from_json(nlohmann::json::parse(line), r);
    trace.push_back(r);
  }
  return trace;
}

// F(x) + ψ(y). Upper-bounds F(x) - F(x*) when x is consensus-feasible.
inline double duality_gap(const OracleSet& oracles, const SqrtLaplacian& s, const BlockVector& x,
                          const BlockVector& y) {
  require_shape(oracles, x, "duality_gap");
  require_shape(oracles, y, "duality_gap");
  return primal_objective(oracles, x) + dual_value(oracles, s, y);
}

// Closed-form saddle point of the consensus problem with quadratic oracles
// f_i(x) = (mu_i/2)||x - b_i||².
struct QuadraticReference {
  BlockVector x_star;     // every block equals the weighted mean of the centers
  double F_star = 0.0;
  BlockVector ybar_star;  // √W y*: ybar_i = mu_i (x̄ - b_i)
  BlockVector y_star;     // minimum-norm solution of √W y = ybar_star
  double R_y = 0.0;       // ||y*||₂
  double M_F_sq = 0.0;    // ||∇F(x*)||²
};

inline QuadraticReference quadratic_reference(const NetworkGraph& g, const OracleSet& oracles) {
  check_oracles(oracles, g.m());
  const auto n = block_dim(oracles);
  std::vector<const QuadraticOracle*> quad;
  for (const auto& o : oracles) {
    const auto* q = dynamic_cast<const QuadraticOracle*>(o.get());
    if (!q) throw InputError("quadratic_reference needs quadratic oracles");
    quad.push_back(q);
  }
  Vector mean = Vector::Zero(n);
  double mu_sum = 0.0;
  for (const auto* q : quad) {
    mean += q->mu() * q->center();
    mu_sum += q->mu();
  }
  mean /= mu_sum;

  QuadraticReference ref;
  ref.x_star = BlockVector(g.m(), n);
  ref.ybar_star = BlockVector(g.m(), n);
  for (int i = 0; i < g.m(); ++i) {
    ref.x_star.row(i) = mean.transpose();
    ref.ybar_star.row(i) = (quad[i]->mu() * (mean - quad[i]->center())).transpose();
  }
  ref.F_star = primal_objective(oracles, ref.x_star);
  ref.M_F_sq = ref.ybar_star.squaredNorm();

  // Least squares in the eigenbasis: divide by the nonzero square-root eigenvalues.
  const SqrtLaplacian s(g);
  Vector inv = Vector::Zero(g.m());
  for (int i = 0; i < g.m(); ++i)
    if (s.sqrt_eigenvalues(i) > 0.0) inv(i) = 1.0 / s.sqrt_eigenvalues(i);
  Matrix coeffs = s.eigenvectors.transpose() * ref.ybar_star;
  ref.y_star = s.eigenvectors * (inv.asDiagonal() * coeffs);
  ref.R_y = ref.y_star.norm();
  return ref;
}

struct RecurrenceLemmaReport {
  bool holds_premise = false;
  double bound_C = 0.0;
  bool holds_conclusion = false;
};

// C = max{1, B + sqrt(B² + 2A)}: the smallest C with C² >= max{1, 2A + 2BC}.
inline double recurrence_bound(double A, double B) {
  return std::max(1.0, B + std::sqrt(B * B + 2.0 * A));
}

// Checks, for l = 1..N,
//   ½ r_l² <= A r_0² + B (r_0/N) sqrt(Σ_{k<l} (k+2) r_k²),
// and whether r_l <= C r_0 follows.
inline RecurrenceLemmaReport check_recurrence_lemma(double A, double B, std::span<const double> r,
                                                    long N) {
  if (r.empty() || !(r[0] > 0.0)) throw InputError("recurrence lemma needs r_0 > 0");
  if (A < 0.0 || B < 0.0) throw InputError("recurrence lemma needs A, B >= 0");
  if (N < 1 || static_cast<long>(r.size()) < N + 1) {
    throw InputError("recurrence lemma needs N >= 1 and N + 1 sequence entries");
  }
  constexpr double kRel = 1e-12;
  RecurrenceLemmaReport rep;
  rep.bound_C = recurrence_bound(A, B);
  rep.holds_premise = true;
  rep.holds_conclusion = true;
  const double r0 = r[0];
  double weighted = 0.0;  // Σ_{k<l} (k+2) r_k²
  for (long l = 1; l <= N; ++l) {
    weighted += static_cast<double>(l + 1) * r[l - 1] * r[l - 1];
    const double lhs = 0.5 * r[l] * r[l];
    const double rhs = A * r0 * r0 + B * (r0 / static_cast<double>(N)) * std::sqrt(weighted);
    if (lhs > rhs * (1.0 + kRel)) rep.holds_premise = false;
    if (r[l] > rep.bound_C * r0 * (1.0 + kRel)) rep.holds_conclusion = false;
  }
  return rep;
}

struct TailReport {
  std::vector<double> gamma;
  std::vector<double> empirical;  // fraction of samples with deviation >= gamma
  std::vector<double> bound;      // 2 exp(-gamma² / (2 sigma²))
  double slack = 1.5;
  bool pass = false;
};

inline constexpr std::size_t kMinTailSamples = 1000;

// Light-tail surrogate: P̂{||dev|| >= γ} <= slack * 2 exp(-γ²/(2σ²)) on the grid
// γ = σ/4, σ/2, ..., 4σ.
inline TailReport empirical_tail_check(std::span<const double> deviations, double sigma_sq,
                                       double slack = 1.5) {
  if (deviations.size() < kMinTailSamples) {
    throw TooFewSamples("tail check needs at least " + std::to_string(kMinTailSamples) +
                        " samples, got " + std::to_string(deviations.size()));
  }
  if (!(sigma_sq > 0.0)) throw InputError("tail check needs sigma_sq > 0");
  std::vector<double> sorted(deviations.begin(), deviations.end());
  std::sort(sorted.begin(), sorted.end());
  const double sigma = std::sqrt(sigma_sq);
  const double count = static_cast<double>(sorted.size());

  TailReport rep;
  rep.slack = slack;
  rep.pass = true;
  for (int j = 1; j <= 16; ++j) {
    const double gamma = 0.25 * j * sigma;
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), gamma) - sorted.begin();
    const double frac = (count - static_cast<double>(below)) / count;
    const double bound = 2.0 * std::exp(-gamma * gamma / (2.0 * sigma_sq));
    rep.gamma.push_back(gamma);
    rep.empirical.push_back(frac);
    rep.bound.push_back(bound);
    if (frac > slack * bound) rep.pass = false;
  }
  return rep;
}

// Least-squares slope of log(y) against log(x). Pairs with a nonpositive
// coordinate are skipped.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double cnt = 0.0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    cnt += 1.0;
  }
  const double denom = cnt * sxx - sx * sx;
  if (cnt < 2.0 || denom == 0.0) return std::nan("");
  return (cnt * sxy - sx * sy) / denom;
}

}  // namespace duonet
