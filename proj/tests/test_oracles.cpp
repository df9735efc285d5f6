#include "duonet/oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace duonet;

namespace {

OracleSet random_quadratics(std::mt19937_64& gen, int m, int n, std::optional<double> sigma) {
  std::uniform_real_distribution<double> mu(0.2, 3.0);
  OracleSet set;
  for (int i = 0; i < m; ++i) {
    set.push_back(std::make_shared<QuadraticOracle>(mu(gen), testkit::random_matrix(gen, n, 1, -5, 5),
                                                    sigma));
  }
  return set;
}

}  // namespace

TEST(QuadraticOracle, ClosedForms) {
  Vector b(2);
  b << 1, -2;
  const QuadraticOracle o(2.0, b);
  Vector y(2);
  y << 4, 2;
  EXPECT_DOUBLE_EQ(o.value(y), 4 - 4 + 20.0 / 4.0);
  EXPECT_EQ(o.primal_argmax(y), Vector((Vector(2) << 3, -1).finished()));
  EXPECT_DOUBLE_EQ(o.primal_value(b), 0.0);
  EXPECT_FALSE(o.has_sampler());
  EXPECT_THROW(QuadraticOracle(0.0, b), InputError);
  EXPECT_THROW(o.value(Vector::Zero(3)), DimensionMismatch);
}

TEST(QuadraticOracle, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto set = random_quadratics(gen, 1, 4, std::nullopt);
    const auto& o = *set.front();
    const Vector y = testkit::random_matrix(gen, 4, 1, -3, 3);
    const Vector fd = testkit::central_difference([&](const Vector& v) { return o.value(v); }, y);
    const Vector g = o.primal_argmax(y);
    EXPECT_LE((fd - g).norm(), 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST(QuadraticOracle, Fenchel) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto set = random_quadratics(gen, 1, 3, std::nullopt);
    const auto& o = *set.front();
    const Vector y = testkit::random_matrix(gen, 3, 1, -4, 4);
    const Vector xy = o.primal_argmax(y);
    EXPECT_NEAR(o.primal_value(xy) + o.value(y), y.dot(xy), 1e-10 * (1 + std::abs(y.dot(xy))));
    for (int s = 0; s < 5; ++s) {
      const Vector x = testkit::random_matrix(gen, 3, 1, -6, 6);
      EXPECT_GE(o.value(y), y.dot(x) - o.primal_value(x) - 1e-12);
    }
  }
}

TEST(DualValue, ZeroAtOrigin) {
  const auto g = build_graph(Topology::path(), 4);
  const auto set = make_quadratic_oracles(ramp_centers(4, 2), 1.5);
  EXPECT_EQ(dual_value(set, SqrtLaplacian(g), BlockVector::Zero(4, 2)), 0.0);
}

TEST(DualValue, CompleteTwoNodeHandValue) {
  const auto g = build_graph(Topology::complete(), 2);
  const auto set = make_quadratic_oracles((Matrix(2, 1) << 0, 2).finished(), 1.0);
  BlockVector y(2, 1);
  y << 1, -1;
  EXPECT_NEAR(dual_value(set, SqrtLaplacian(g), y), 2.0 - 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(DualValue, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(3);
  for (const auto& topo : {Topology::path(), Topology::star(), Topology::cycle()}) {
    const auto g = build_graph(topo, 5);
    const SqrtLaplacian s(g);
    const auto set = random_quadratics(gen, 5, 2, std::nullopt);
    const BlockVector y = testkit::random_matrix(gen, 5, 2);
    const BlockVector grad = dual_grad(set, s, y);
    // Flatten row-major to match the block layout.
    Vector flat = Eigen::Map<const Vector>(y.data(), y.size());
    auto f = [&](const Vector& v) {
      return dual_value(set, s, Eigen::Map<const BlockVector>(v.data(), 5, 2));
    };
    const Vector fd = testkit::central_difference(f, flat);
    const Vector g_flat = Eigen::Map<const Vector>(grad.data(), grad.size());
    EXPECT_LE((fd - g_flat).norm(), 1e-5 * std::max(1.0, g_flat.norm()));
  }
}

TEST(DualValue, DimensionMismatch) {
  const auto g = build_graph(Topology::path(), 3);
  const auto set = make_quadratic_oracles(ramp_centers(3, 2), 1.0);
  EXPECT_THROW(dual_value(set, SqrtLaplacian(g), BlockVector::Zero(3, 3)), DimensionMismatch);
  EXPECT_THROW(dual_value(set, SqrtLaplacian(g), BlockVector::Zero(2, 2)), DimensionMismatch);
}

TEST(StochasticDualConfig, ScalesByLambdaMax) {
  const auto g = build_graph(Topology::star(), 4);
  const auto c = StochasticDualConfig::from_graph(g, 0.7);
  EXPECT_EQ(c.sigma_psi_sq, g.lambda_max() * 0.7);
  EXPECT_THROW(StochasticDualConfig::from_graph(g, -1.0), InputError);
}

TEST(BatchedPrimal, ZeroVarianceMatchesExact) {
  const auto g = build_graph(Topology::path(), 3);
  const SqrtLaplacian s(g);
  const auto set = make_quadratic_oracles(ramp_centers(3, 2), 1.0, 0.0);
  std::mt19937_64 gen(4);
  const BlockVector lambda = testkit::random_matrix(gen, 3, 2);
  const BlockVector exact = primal_argmax(set, apply_sqrtW(s, lambda));
  EXPECT_EQ(batched_primal(set, s, lambda, 1, {9, 0}), exact);
}

TEST(BatchedPrimal, RequiresSampler) {
  const auto g = build_graph(Topology::path(), 3);
  const auto set = make_quadratic_oracles(ramp_centers(3, 1), 1.0);
  EXPECT_THROW(batched_primal(set, SqrtLaplacian(g), BlockVector::Zero(3, 1), 4, {}),
               NoStochasticSupport);
  const auto noisy = make_quadratic_oracles(ramp_centers(3, 1), 1.0, 1.0);
  EXPECT_THROW(batched_primal(noisy, SqrtLaplacian(g), BlockVector::Zero(3, 1), 0, {}), InputError);
}

TEST(BatchedPrimal, BatchMeanWithinClt) {
  const auto g = build_graph(Topology::path(), 3);
  const SqrtLaplacian s(g);
  // n = 1 and σ_x² = 1 give unit per-coordinate standard deviation.
  const auto set = make_quadratic_oracles(ramp_centers(3, 1), 1.0, 1.0);
  BlockVector lambda(3, 1);
  lambda << 0.5, -1.0, 2.0;
  const long r = 10'000;
  const BlockVector exact = primal_argmax(set, apply_sqrtW(s, lambda));
  const BlockVector batch = batched_primal(set, s, lambda, r, {123, 7});
  EXPECT_LE((batch - exact).cwiseAbs().maxCoeff(), 4.0 / std::sqrt(static_cast<double>(r)));
}

TEST(BatchedPrimal, Deterministic) {
  const auto g = build_graph(Topology::cycle(), 5);
  const SqrtLaplacian s(g);
  const auto set = make_quadratic_oracles(ramp_centers(5, 3), 0.5, 2.0);
  std::mt19937_64 gen(5);
  const BlockVector lambda = testkit::random_matrix(gen, 5, 3);
  const BlockVector a = batched_primal(set, s, lambda, 17, {42, 3});
  const BlockVector b = batched_primal(set, s, lambda, 17, {42, 3});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, batched_primal(set, s, lambda, 17, {43, 3}));
  EXPECT_NE(a, batched_primal(set, s, lambda, 17, {42, 4}));
}

TEST(BatchedPrimal, GenericSampleMeanAgreesWithSpecialisation) {
  // The quadratic oracle's fast path must reproduce the generic per-sample loop.
  Vector b(3);
  b << 1, 2, 3;
  const QuadraticOracle o(1.3, b, 0.8);
  Vector y(3);
  y << 0.1, -0.2, 0.3;
  const StreamKey key{5, 6, 7, 0};
  const Vector fast = o.sample_mean(y, key, 25);
  const Vector slow = o.ConjugateOracle::sample_mean(y, key, 25);
  EXPECT_LE((fast - slow).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BatchedDualGrad, IsSqrtWOfBatchedPrimal) {
  const auto g = build_graph(Topology::star(), 6);
  const SqrtLaplacian s(g);
  const auto set = make_quadratic_oracles(ramp_centers(6, 2), 1.0, 1.0);
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    const BlockVector lambda = testkit::random_matrix(gen, 6, 2);
    const BatchKey key{static_cast<std::uint64_t>(trial), 2};
    const BlockVector lhs = batched_dual_grad(set, s, lambda, 8, key);
    const BlockVector rhs = apply_sqrtW(s, batched_primal(set, s, lambda, 8, key));
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BatchedDualGrad, ConsensusCentersGiveZero) {
  const auto g = build_graph(Topology::path(), 4);
  const SqrtLaplacian s(g);
  Matrix centers(4, 2);
  centers.rowwise() = Eigen::RowVector2d(1.0, -1.0);
  const auto set = make_quadratic_oracles(centers, 1.0, 0.0);
  BlockVector lambda(4, 2);
  lambda.rowwise() = Eigen::RowVector2d(0.3, 0.7);
  EXPECT_LE(batched_dual_grad(set, s, lambda, 3, {}).norm(), 1e-8);
}

TEST(BatchedDualGrad, VarianceBound) {
  const auto g = build_graph(Topology::path(), 3);
  const SqrtLaplacian s(g);
  const double sigma_x_sq = 1.0;
  const auto set = make_quadratic_oracles(ramp_centers(3, 2), 1.0, sigma_x_sq);
  const auto noise = StochasticDualConfig::from_graph(g, sigma_x_sq);
  BlockVector lambda(3, 2);
  lambda << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6;
  const BlockVector exact = dual_grad(set, s, lambda);
  const long r = 16;
  double acc = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    acc += (batched_dual_grad(set, s, lambda, r, {77, static_cast<std::uint64_t>(t)}) - exact)
               .squaredNorm();
  }
  EXPECT_LE(acc / trials, 3.0 * noise.sigma_psi_sq / r);
}

TEST(GaussianSampler, Unbiased) {
  Vector b(3);
  b << 1, -1, 2;
  const QuadraticOracle o(0.5, b, 3.0);
  Vector y(3);
  y << 0.2, 0.1, -0.4;
  const Vector exact = o.primal_argmax(y);
  const int samples = 100'000;
  Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
  for (int s = 0; s < samples; ++s) {
    KeyedEngine eng(StreamKey{11, 0, 0, static_cast<std::uint64_t>(s)});
    const Vector x = o.sample_primal(y, eng);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  const Vector mean = sum / samples;
  const Vector var = sq / samples - mean.cwiseProduct(mean);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LE(std::abs(mean(j) - exact(j)), 5.0 * std::sqrt(var(j) / samples));
    EXPECT_NEAR(var(j), 1.0, 0.05);  // σ_x²/n per coordinate
  }
}

TEST(GaussianSampler, LightTailSurrogate) {
  for (int n : {1, 2}) {
    const double sigma_x_sq = 2.0;
    const QuadraticOracle o(1.0, Vector::Zero(n), sigma_x_sq);
    const Vector y = Vector::Zero(n);
    const int samples = 20'000;
    int exceed_total = 0;
    const double sigma = std::sqrt(sigma_x_sq);
    for (int j = 1; j <= 16; ++j) {
      const double gamma = 0.25 * j * sigma;
      int exceed = 0;
      for (int s = 0; s < samples; ++s) {
        KeyedEngine eng(StreamKey{3, static_cast<std::uint64_t>(n), 0, static_cast<std::uint64_t>(s)});
        if (o.sample_primal(y, eng).norm() >= gamma) ++exceed;
      }
      exceed_total += exceed;
      const double bound = 2.0 * std::exp(-gamma * gamma / (2.0 * sigma_x_sq));
      EXPECT_LE(static_cast<double>(exceed) / samples, 1.5 * bound) << "gamma " << gamma;
    }
    EXPECT_GT(exceed_total, 0);
  }
}

TEST(KeyedEngine, StreamsDiffer) {
  KeyedEngine a(StreamKey{1, 2, 3, 4}), b(StreamKey{1, 2, 3, 5}), c(StreamKey{1, 2, 3, 4});
  const auto va = a();
  EXPECT_NE(va, b());
  EXPECT_EQ(va, c());
  EXPECT_NE(a(), va);
}
