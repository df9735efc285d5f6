#pragma once

#include "duonet/core.hpp"
#include "duonet/graph.hpp"
#include "duonet/rng.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace duonet {

// Per-node dual oracle. For f_i(x) = max_y {<y, x> - φ_i(y)} it exposes φ_i,
// the maximiser x_i(y) = ∇φ_i(y), f_i itself, and optionally a stochastic
// draw x_i(y, ξ) with E_ξ x_i(y, ξ) = x_i(y).
class ConjugateOracle {
 public:
  virtual ~ConjugateOracle() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(VectorCRef y) const = 0;
  virtual Vector primal_argmax(VectorCRef y) const = 0;
  virtual double primal_value(VectorCRef x) const = 0;

  // Modulus of strong convexity of f_i in the Euclidean norm, when known.
  virtual std::optional<double> strong_convexity() const { return std::nullopt; }

  virtual bool has_sampler() const { return false; }

  virtual Vector sample_primal(VectorCRef, KeyedEngine&) const {
    throw NoStochasticSupport("oracle has no stochastic sampler");
  }

  // Mean of r draws; draw s uses the stream `base` with sample index s.
  // Summation runs in sample order so the result is reproducible.
  virtual Vector sample_mean(VectorCRef y, StreamKey base, long r) const {
    Vector acc = Vector::Zero(dim());
    for (long s = 0; s < r; ++s) {
      base.sample = static_cast<std::uint64_t>(s);
      KeyedEngine eng(base);
      acc += sample_primal(y, eng);
    }
    return acc / static_cast<double>(r);
  }
};

using OraclePtr = std::shared_ptr<const ConjugateOracle>;
using OracleSet = std::vector<OraclePtr>;

// f(x) = (mu/2) ||x - b||², so φ(y) = <y, b> + ||y||²/(2 mu) and
// x(y) = b + y/mu. With `sigma_x_sq` set, the sampler adds N(0, sigma_x_sq/n)
// noise to every coordinate of x(y).
class QuadraticOracle final : public ConjugateOracle {
 public:
  QuadraticOracle(double mu, Vector center, std::optional<double> sigma_x_sq = std::nullopt)
      : mu_(mu), b_(std::move(center)), sigma_x_sq_(sigma_x_sq) {
    if (!(mu_ > 0.0)) throw InputError("quadratic oracle needs mu > 0");
    if (sigma_x_sq_ && !(*sigma_x_sq_ >= 0.0)) throw InputError("sigma_x_sq must be >= 0");
    if (sigma_x_sq_) coord_sd_ = std::sqrt(*sigma_x_sq_ / static_cast<double>(b_.size()));
  }

  Eigen::Index dim() const override { return b_.size(); }
  double mu() const { return mu_; }
  const Vector& center() const { return b_; }

  double value(VectorCRef y) const override {
    check(y);
    return y.dot(b_) + y.squaredNorm() / (2.0 * mu_);
  }

  Vector primal_argmax(VectorCRef y) const override {
    check(y);
    return b_ + y / mu_;
  }

  double primal_value(VectorCRef x) const override {
    check(x);
    return 0.5 * mu_ * (x - b_).squaredNorm();
  }

  std::optional<double> strong_convexity() const override { return mu_; }

  bool has_sampler() const override { return sigma_x_sq_.has_value(); }

  Vector sample_primal(VectorCRef y, KeyedEngine& eng) const override {
    if (!sigma_x_sq_) return ConjugateOracle::sample_primal(y, eng);
    Vector x = primal_argmax(y);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += coord_sd_ * noise(eng);
    return x;
  }

  // Draws only the noise and adds its mean to x(y) once.
  Vector sample_mean(VectorCRef y, StreamKey base, long r) const override {
    if (!sigma_x_sq_) throw NoStochasticSupport("quadratic oracle built without a sampler");
    Vector noise_sum = Vector::Zero(dim());
    std::normal_distribution<double> noise(0.0, 1.0);
    for (long s = 0; s < r; ++s) {
      base.sample = static_cast<std::uint64_t>(s);
      KeyedEngine eng(base);
      for (Eigen::Index j = 0; j < noise_sum.size(); ++j) noise_sum(j) += coord_sd_ * noise(eng);
      noise.reset();
    }
    return primal_argmax(y) + noise_sum / static_cast<double>(r);
  }

 private:
  void check(VectorCRef v) const {
    if (v.size() != b_.size()) throw DimensionMismatch("quadratic oracle: wrong vector size");
  }

  double mu_;
  Vector b_;
  std::optional<double> sigma_x_sq_;
  double coord_sd_ = 0.0;
};

// Noise level of the stochastic dual oracle: σ_ψ² = λ_max(W) σ_x².
struct StochasticDualConfig {
  double sigma_x_sq = 0.0;
  double sigma_psi_sq = 0.0;

  static StochasticDualConfig from_graph(const NetworkGraph& g, double sigma_x_sq) {
    if (!(sigma_x_sq >= 0.0)) throw InputError("sigma_x_sq must be >= 0");
    return {sigma_x_sq, g.lambda_max() * sigma_x_sq};
  }
};

inline void check_oracles(const OracleSet& oracles, int m) {
  if (static_cast<int>(oracles.size()) != m) {
    throw DimensionMismatch("expected " + std::to_string(m) + " oracles, got " +
                            std::to_string(oracles.size()));
  }
  for (const auto& o : oracles) {
    if (!o) throw InputError("null oracle");
    if (o->dim() != oracles.front()->dim()) throw DimensionMismatch("oracle dimensions differ");
  }
}

inline Eigen::Index block_dim(const OracleSet& oracles) {
  return oracles.empty() ? 0 : oracles.front()->dim();
}

inline void require_shape(const OracleSet& oracles, const BlockVector& x, const char* what) {
  require_blocks(x, static_cast<Eigen::Index>(oracles.size()), what);
  if (x.cols() != block_dim(oracles)) {
    throw DimensionMismatch(std::string(what) + ": block dimension " + std::to_string(x.cols()) +
                            " does not match oracle dimension " +
                            std::to_string(block_dim(oracles)));
  }
}

// Σ_i φ_i(ybar_i) for ybar already in the image of √W.
inline double conjugate_sum(const OracleSet& oracles, const BlockVector& ybar) {
  require_shape(oracles, ybar, "conjugate_sum");
  double total = 0.0;
  for (std::size_t i = 0; i < oracles.size(); ++i) {
    total += oracles[i]->value(ybar.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return total;
}

// ψ(y) = Σ_i φ_i([√W y]_i).
inline double dual_value(const OracleSet& oracles, const SqrtLaplacian& s, const BlockVector& y) {
  require_shape(oracles, y, "dual_value");
  return conjugate_sum(oracles, apply_sqrtW(s, y));
}

// F(x) = Σ_i f_i(x_i).
inline double primal_objective(const OracleSet& oracles, const BlockVector& x) {
  require_shape(oracles, x, "primal_objective");
  double total = 0.0;
  for (std::size_t i = 0; i < oracles.size(); ++i) {
    total += oracles[i]->primal_value(x.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return total;
}

// Blocks x_i(ybar_i).
inline BlockVector primal_argmax(const OracleSet& oracles, const BlockVector& ybar) {
  require_shape(oracles, ybar, "primal_argmax");
  BlockVector x(ybar.rows(), ybar.cols());
  for (std::size_t i = 0; i < oracles.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    x.row(row) = oracles[i]->primal_argmax(ybar.row(row).transpose()).transpose();
  }
  return x;
}

// ∇ψ(y) = √W x(√W y).
inline BlockVector dual_grad(const OracleSet& oracles, const SqrtLaplacian& s,
                             const BlockVector& y) {
  return apply_sqrtW(s, primal_argmax(oracles, apply_sqrtW(s, y)));
}

// Identifies the random draws of one batched oracle call.
struct BatchKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

// x(√W λ, {ξ_s}) = (1/r) Σ_s x(√W λ, ξ_s), node by node.
inline BlockVector batched_primal(const OracleSet& oracles, const SqrtLaplacian& s,
                                  const BlockVector& lambda, long r, BatchKey key) {
  require_shape(oracles, lambda, "batched_primal");
  if (r < 1) throw InputError("batch size must be >= 1");
  for (const auto& o : oracles) {
    if (!o->has_sampler()) throw NoStochasticSupport("oracle has no stochastic sampler");
  }
  const BlockVector ybar = apply_sqrtW(s, lambda);
  BlockVector x(lambda.rows(), lambda.cols());
  for (std::size_t i = 0; i < oracles.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    StreamKey base{key.seed, key.iteration, static_cast<std::uint64_t>(i), 0};
    x.row(row) = oracles[i]->sample_mean(ybar.row(row).transpose(), base, r).transpose();
  }
  return x;
}

// ∇^r ψ(λ, {ξ_s}) = √W x(√W λ, {ξ_s}).
inline BlockVector batched_dual_grad(const OracleSet& oracles, const SqrtLaplacian& s,
                                     const BlockVector& lambda, long r, BatchKey key) {
  return apply_sqrtW(s, batched_primal(oracles, s, lambda, r, key));
}

// Strong-convexity modulus shared by all oracles (the minimum), if every
// oracle advertises one.
inline std::optional<double> common_strong_convexity(const OracleSet& oracles) {
  std::optional<double> mu;
  for (const auto& o : oracles) {
    auto mi = o->strong_convexity();
    if (!mi) return std::nullopt;
    mu = mu ? std::min(*mu, *mi) : *mi;
  }
  return mu;
}

// Default instance centers: b_{i,j} = 3 i / (j + 1). For n = 1 this is the
// ramp (0, 3, 6, ...).
inline Matrix ramp_centers(int m, int n) {
  Matrix b(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = 3.0 * i / (j + 1);
  return b;
}

// One quadratic oracle per row of `centers`.
inline OracleSet make_quadratic_oracles(const Matrix& centers, double mu,
                                        std::optional<double> sigma_x_sq = std::nullopt) {
  OracleSet set;
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    set.push_back(
        std::make_shared<QuadraticOracle>(mu, Vector(centers.row(i).transpose()), sigma_x_sq));
  }
  return set;
}

}  // namespace duonet
