#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the code paths it is used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace duonet::testkit {

// Cyclic Jacobi rotations on a dense symmetric matrix; sorted eigenvalues.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const auto n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (Eigen::Index i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Entropic OT cost between p = (p1, 1 - p1) and q for a 2x2 cost matrix,
// minimising directly over the one free entry s = π_11 of the plan
// [[s, p1 - s], [q1 - s, q2 - p1 + s]] by golden-section search.
inline double entropic_ot_2x2(double p1, const Eigen::Vector2d& q, const Eigen::Matrix2d& C,
                              double mu) {
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
  auto cost = [&](double s) {
    const double pi[4] = {s, p1 - s, q(0) - s, q(1) - p1 + s};
    const double c[4] = {C(0, 0), C(0, 1), C(1, 0), C(1, 1)};
    double total = 0.0;
    for (int i = 0; i < 4; ++i) total += c[i] * std::max(pi[i], 0.0) + mu * xlogx(std::max(pi[i], 0.0));
    return total;
  };
  double lo = std::max(0.0, p1 - q(1));
  double hi = std::min(p1, q(0));
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = cost(x2);
    }
  }
  return std::min({cost(lo), cost(hi), cost(0.5 * (a + b))});
}

struct GridOptimum {
  double t = 0.0;
  double value = 0.0;
};

// Minimises Σ_i W_{μ,q_i}((t, 1 - t)) over a uniform grid on [0, 1], then
// refines on a finer grid around the best cell.
inline GridOptimum grid_search_barycenter_2(const std::vector<Eigen::Vector2d>& qs,
                                            const Eigen::Matrix2d& C, double mu,
                                            int points = 2000) {
  auto objective = [&](double t) {
    double total = 0.0;
    for (const auto& q : qs) total += entropic_ot_2x2(t, q, C, mu);
    return total;
  };
  GridOptimum best{0.0, objective(0.0)};
  for (int i = 1; i <= points; ++i) {
    const double t = static_cast<double>(i) / points;
    const double v = objective(t);
    if (v < best.value) best = {t, v};
  }
  const double lo = std::max(0.0, best.t - 1.0 / points);
  const double hi = std::min(1.0, best.t + 1.0 / points);
  for (int i = 0; i <= points; ++i) {
    const double t = lo + (hi - lo) * i / points;
    const double v = objective(t);
    if (v < best.value) best = {t, v};
  }
  return best;
}

inline Eigen::VectorXd random_simplex(std::mt19937_64& gen, Eigen::Index n) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = e(gen);
  return q / q.sum();
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(gen);
  return m;
}

}  // namespace duonet::testkit
