#pragma once

#include "duonet/core.hpp"
#include "duonet/graph.hpp"
#include "duonet/oracles.hpp"
#include "duonet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace duonet {

namespace detail {

// log Σ_i exp(v_i), shifted by the max entry.
inline double log_sum_exp(const Vector& v) {
  const double c = v.maxCoeff();
  if (!std::isfinite(c)) return c;
  return c + std::log((v.array() - c).exp().sum());
}

inline Vector softmax(const Vector& v) {
  Vector e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace detail

inline constexpr double kSimplexTol = 1e-12;

inline bool on_simplex(VectorCRef q, double tol = kSimplexTol) {
  return q.size() > 0 && q.minCoeff() >= 0.0 && std::abs(q.sum() - 1.0) <= tol;
}

// Dual oracle of the entropic optimal transport cost
//   W_{μ,q}(p) = min { <C, π> + μ <π, ln π> : π 1 = p, πᵀ 1 = q, π >= 0 },
// whose conjugate is
//   W*(u) = μ Σ_j q_j ln( (1/q_j) Σ_i exp((u_i - C_ij)/μ) ).
// Columns of C with q_j = 0 drop out of every sum.
class EntropicOTOracle final : public ConjugateOracle {
 public:
  EntropicOTOracle(Matrix cost, Vector q, double mu_reg)
      : C_(std::move(cost)), q_(std::move(q)), mu_(mu_reg) {
    if (C_.rows() != C_.cols()) throw NonSquareCost("cost matrix must be square");
    if (C_.rows() != q_.size()) throw NonSquareCost("cost matrix size does not match histogram");
    if (C_.size() > 0 && C_.minCoeff() < 0.0) throw InputError("cost matrix must be nonnegative");
    if (!on_simplex(q_)) throw NotASimplex("reference histogram is not on the simplex");
    if (!(mu_ > 0.0)) throw InputError("entropic regularization must be > 0");
    cumulative_.resize(q_.size());
    double run = 0.0;
    for (Eigen::Index j = 0; j < q_.size(); ++j) {
      run += q_(j);
      cumulative_[j] = run;
    }
  }

  Eigen::Index dim() const override { return q_.size(); }
  const Matrix& cost() const { return C_; }
  const Vector& histogram() const { return q_; }
  double mu_reg() const { return mu_; }

  double value(VectorCRef u) const override {
    check(u);
    double total = 0.0;
    for (Eigen::Index j = 0; j < q_.size(); ++j) {
      if (q_(j) <= 0.0) continue;
      total += q_(j) * (detail::log_sum_exp(column_logits(u, j)) - std::log(q_(j)));
    }
    return mu_ * total;
  }

  // Σ_j q_j softmax((u - C_{·j})/μ): a mixture of simplex points.
  Vector primal_argmax(VectorCRef u) const override {
    check(u);
    Vector g = Vector::Zero(dim());
    for (Eigen::Index j = 0; j < q_.size(); ++j) {
      if (q_(j) <= 0.0) continue;
      g += q_(j) * detail::softmax(column_logits(u, j));
    }
    return g;
  }

  // W_{μ,q}(p) by Newton ascent on the concave dual <u, p> - W*(u).
  double primal_value(VectorCRef p) const override { return solve_primal(p).value; }

  struct PrimalSolution {
    double value = 0.0;
    // Maximising dual potential u*(p), a gradient of W_{μ,q} at p (defined up
    // to a constant shift). Entries outside the support of p are -inf.
    Vector potential;
  };

  PrimalSolution solve_primal(VectorCRef p) const;

  std::optional<double> strong_convexity() const override { return mu_; }

  bool has_sampler() const override { return true; }

  // Column j ~ Categorical(q), returns softmax((u - C_{·j})/μ).
  Vector sample_primal(VectorCRef u, KeyedEngine& eng) const override {
    check(u);
    return detail::softmax(column_logits(u, sample_column(eng)));
  }

  Eigen::Index sample_column(KeyedEngine& eng) const {
    std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
    const double t = unif(eng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
    auto j = static_cast<Eigen::Index>(it - cumulative_.begin());
    j = std::min<Eigen::Index>(j, q_.size() - 1);
    // Skip zero-mass columns that share a cumulative value with their predecessor.
    while (q_(j) <= 0.0 && j + 1 < q_.size()) ++j;
    return j;
  }

 private:
  Vector column_logits(VectorCRef u, Eigen::Index j) const { return (u - C_.col(j)) / mu_; }

  void check(VectorCRef v) const {
    if (v.size() != q_.size()) throw DimensionMismatch("entropic OT oracle: wrong vector size");
  }

  Matrix C_;
  Vector q_;
  double mu_;
  std::vector<double> cumulative_;
};

inline Vector ot_conjugate_grad(const EntropicOTOracle& o, VectorCRef u) {
  return o.primal_argmax(u);
}

inline Vector ot_conjugate_grad_sampled(const EntropicOTOracle& o, VectorCRef u,
                                        KeyedEngine& eng) {
  return o.sample_primal(u, eng);
}

namespace detail {

// Concave objective h(v) = <u, p_S> - W*_S(u) restricted to the support S of
// p, with the gauge u_last = 0; v holds the free coordinates.
struct RestrictedDual {
  Matrix C;   // |S| x n
  Vector q;
  Vector p;
  double mu;

  Vector full(const Vector& v) const {
    Vector u(p.size());
    u.head(v.size()) = v;
    u(p.size() - 1) = 0.0;
    return u;
  }

  double value(const Vector& u) const {
    double conj = 0.0;
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      if (q(j) <= 0.0) continue;
      conj += q(j) * (log_sum_exp((u - C.col(j)) / mu) - std::log(q(j)));
    }
    return u.dot(p) - mu * conj;
  }

  // Gradient and (negated) Hessian with respect to the full u.
  void derivatives(const Vector& u, Vector& grad, Matrix& neg_hess) const {
    const auto k = p.size();
    grad = p;
    neg_hess = Matrix::Zero(k, k);
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      if (q(j) <= 0.0) continue;
      Vector s = softmax((u - C.col(j)) / mu);
      grad -= q(j) * s;
      neg_hess.diagonal() += (q(j) / mu) * s;
      neg_hess.noalias() -= (q(j) / mu) * s * s.transpose();
    }
  }
};

}  // namespace detail

inline EntropicOTOracle::PrimalSolution EntropicOTOracle::solve_primal(VectorCRef p) const {
  check(p);
  if (p.minCoeff() < -1e-12 || std::abs(p.sum() - 1.0) > 1e-9) {
    return {std::numeric_limits<double>::infinity(), Vector()};
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) support.push_back(i);

  detail::RestrictedDual dual;
  const auto k = static_cast<Eigen::Index>(support.size());
  dual.C.resize(k, C_.cols());
  dual.p.resize(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    dual.C.row(a) = C_.row(support[a]);
    dual.p(a) = p(support[a]);
  }
  dual.p /= dual.p.sum();
  dual.q = q_;
  dual.mu = mu_;

  // Start from the exact solution for C = 0 (u = μ ln p), gauge-shifted.
  Vector v(k - 1);
  for (Eigen::Index a = 0; a + 1 < k; ++a) v(a) = mu_ * std::log(dual.p(a) / dual.p(k - 1));

  double h = dual.value(dual.full(v));
  Vector grad;
  Matrix neg_hess;
  // Curvature of h is at most 1/μ, and it flattens out far from the optimum;
  // steps longer than a few μ are not trusted.
  const double max_step = 4.0 * mu_;
  auto try_direction = [&](Vector dir, const Vector& g) {
    const double len = dir.lpNorm<Eigen::Infinity>();
    if (len > max_step) dir *= max_step / len;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      Vector trial = v + t * dir;
      const double ht = dual.value(dual.full(trial));
      if (ht >= h + 1e-4 * t * dir.dot(g)) {
        v = std::move(trial);
        h = ht;
        return true;
      }
      t *= 0.5;
    }
    return false;
  };
  for (int iter = 0; iter < 500 && k > 1; ++iter) {
    dual.derivatives(dual.full(v), grad, neg_hess);
    const Vector g = grad.head(k - 1);
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
    const Matrix H = neg_hess.topLeftCorner(k - 1, k - 1);
    Vector step = H.ldlt().solve(g);
    const bool newton_ok = step.allFinite() && step.dot(g) > 0.0;
    if (newton_ok && try_direction(step, g)) continue;
    if (!try_direction(mu_ * g, g)) break;
  }
  PrimalSolution sol{h, Vector::Constant(p.size(), -std::numeric_limits<double>::infinity())};
  const Vector u = dual.full(v);
  for (Eigen::Index a = 0; a < k; ++a) sol.potential(support[a]) = u(a);
  return sol;
}

// ‖C‖_∞ as the largest absolute entry.
inline double max_abs_entry(const Matrix& C) { return C.cwiseAbs().maxCoeff(); }

struct BarycenterProblem {
  OracleSet oracles;
  Matrix cost;
  double mu_reg = 0.0;
  double M_F_sq = 0.0;               // 2 n m ||C||²_∞
  StochasticDualConfig noise;        // σ_x², σ_ψ² = λ_max(W) σ_x²
};

// Simplex diameter bound: any two simplex points are within ℓ2 distance √2,
// so a single column sample deviates from its mean by at most 2.
inline constexpr double kSimplexSigmaXSq = 4.0;

// Rows of `histograms` are the node histograms q_1..q_m.
// With `paper_constants`, σ_ψ² = m λ_max(W) replaces the simplex bound.
inline BarycenterProblem build_barycenter_problem(const Matrix& histograms, const Matrix& cost,
                                                  double mu_reg, const NetworkGraph& graph,
                                                  double sigma_x_sq = kSimplexSigmaXSq,
                                                  bool paper_constants = false) {
  if (cost.rows() != cost.cols()) throw NonSquareCost("cost matrix must be square");
  if (histograms.cols() != cost.rows()) {
    throw NonSquareCost("cost matrix is " + std::to_string(cost.rows()) + "x" +
                        std::to_string(cost.cols()) + " but histograms have " +
                        std::to_string(histograms.cols()) + " bins");
  }
  if (histograms.rows() != graph.m()) {
    throw DimensionMismatch("expected " + std::to_string(graph.m()) + " histograms, got " +
                            std::to_string(histograms.rows()));
  }
  BarycenterProblem prob;
  prob.cost = cost;
  prob.mu_reg = mu_reg;
  for (Eigen::Index i = 0; i < histograms.rows(); ++i) {
    Vector q = histograms.row(i).transpose();
    if (!on_simplex(q)) {
      throw NotASimplex("histogram " + std::to_string(i) + " is not on the simplex");
    }
    prob.oracles.push_back(std::make_shared<EntropicOTOracle>(cost, std::move(q), mu_reg));
  }
  const double n = static_cast<double>(cost.rows());
  const double m = static_cast<double>(graph.m());
  const double cinf = max_abs_entry(cost);
  prob.M_F_sq = 2.0 * n * m * cinf * cinf;
  prob.noise = StochasticDualConfig::from_graph(graph, paper_constants ? m : sigma_x_sq);
  return prob;
}

// Σ_i W_{μ,q_i}(p_i) for per-node estimates p (rows).
inline double barycenter_objective(const OracleSet& oracles, const BlockVector& p) {
  return primal_objective(oracles, p);
}

// Σ_i W_{μ,q_i}(p) at a single common point p.
inline double barycenter_objective_at(const OracleSet& oracles, VectorCRef p) {
  double total = 0.0;
  for (const auto& o : oracles) total += o->primal_value(p);
  return total;
}

// Reference minimiser of Σ_i W_{μ,q_i}(p) over the simplex for small n.
// Mirror descent (exponentiated gradient) with backtracking, using the dual
// potentials u*_i(p) as gradients. Iterates stay in the relative interior.
inline Vector reference_barycenter(const std::vector<const EntropicOTOracle*>& oracles,
                                   int max_iter = 5000, double tol = 1e-15) {
  const auto n = oracles.front()->dim();
  Vector p = Vector::Constant(n, 1.0 / static_cast<double>(n));
  auto evaluate = [&](const Vector& x, Vector* grad) {
    double f = 0.0;
    if (grad) grad->setZero(n);
    for (const auto* o : oracles) {
      auto sol = o->solve_primal(x);
      f += sol.value;
      if (grad) *grad += sol.potential;
    }
    return f;
  };

  Vector g(n);
  double f = evaluate(p, &g);
  double eta = 1.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      Vector trial = detail::softmax(p.array().log().matrix() - eta * g);
      const double ft = evaluate(trial, nullptr);
      if (ft <= f) {
        const double gain = f - ft;
        p = std::move(trial);
        f = evaluate(p, &g);
        accepted = true;
        eta *= 1.5;
        if (gain < tol) return p;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;
  }
  return p;
}

// Numeric CSV: one row per line, comma separated. Blank lines are skipped.
inline Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError(path + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("'" + path + "' is empty");
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

// Rows summing to within [0.999, 1.001] are renormalised; anything else is
// rejected.
inline Matrix normalize_histograms(Matrix h) {
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    if (h.row(i).minCoeff() < 0.0) {
      throw NotASimplex("histogram row " + std::to_string(i) + " has a negative entry");
    }
    const double s = h.row(i).sum();
    if (s < 0.999 || s > 1.001) {
      throw NotASimplex("histogram row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
    h.row(i) /= s;
  }
  return h;
}

}  // namespace duonet
