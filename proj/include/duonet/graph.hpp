#pragma once

#include "duonet/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace duonet {

struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Descriptor of a network topology. Only the fields relevant to `kind` are read.
struct Topology {
  enum class Kind { Path, Cycle, Star, Complete, ErdosRenyi, EdgeList };

  Kind kind = Kind::Path;
  double p = 0.5;              // erdos_renyi edge probability
  std::uint64_t seed = 0;      // erdos_renyi generator seed
  std::vector<Edge> edges;     // edge_list

  static Topology path() { return {Kind::Path}; }
  static Topology cycle() { return {Kind::Cycle}; }
  static Topology star() { return {Kind::Star}; }
  static Topology complete() { return {Kind::Complete}; }
  static Topology erdos_renyi(double p, std::uint64_t seed) {
    return {Kind::ErdosRenyi, p, seed, {}};
  }
  static Topology edge_list(std::vector<Edge> e) {
    return {Kind::EdgeList, 0.0, 0, std::move(e)};
  }
};

inline std::string to_string(Topology::Kind k) {
  switch (k) {
    case Topology::Kind::Path: return "path";
    case Topology::Kind::Cycle: return "cycle";
    case Topology::Kind::Star: return "star";
    case Topology::Kind::Complete: return "complete";
    case Topology::Kind::ErdosRenyi: return "erdos_renyi";
    case Topology::Kind::EdgeList: return "edge_list";
  }
  return "unknown";
}

inline Topology::Kind parse_topology_kind(const std::string& name) {
  if (name == "path") return Topology::Kind::Path;
  if (name == "cycle") return Topology::Kind::Cycle;
  if (name == "star") return Topology::Kind::Star;
  if (name == "complete") return Topology::Kind::Complete;
  if (name == "erdos_renyi") return Topology::Kind::ErdosRenyi;
  if (name == "edge_list") return Topology::Kind::EdgeList;
  throw InputError("unknown topology '" + name + "'");
}

// Eigenvalues below this are treated as exact zeros.
inline constexpr double kSpectralZero = 1e-12;

// Undirected connected graph together with its Laplacian and spectrum.
// Immutable after construction.
class NetworkGraph {
 public:
  NetworkGraph(int m, std::vector<Edge> edges) : m_(m) {
    if (m < 1) throw InputError("graph needs at least one node");
    for (auto& e : edges) {
      if (e.u < 0 || e.u >= m || e.v < 0 || e.v >= m) {
        throw InvalidEdge("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                          ") has an endpoint outside [0, " + std::to_string(m) + ")");
      }
      if (e.u == e.v) throw InvalidEdge("self-loop at node " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    neighbors_.assign(m_, {});
    for (const auto& e : edges_) {
      neighbors_[e.u].push_back(e.v);
      neighbors_[e.v].push_back(e.u);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

    if (!connected()) throw DisconnectedGraph("graph is not connected");

    laplacian_ = Matrix::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) laplacian_(i, i) = static_cast<double>(neighbors_[i].size());
    for (const auto& e : edges_) {
      laplacian_(e.u, e.v) = -1.0;
      laplacian_(e.v, e.u) = -1.0;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(laplacian_);
    eigenvectors_ = es.eigenvectors();
    eigenvalues_ = es.eigenvalues();
    for (auto& ev : eigenvalues_) {
      if (ev < kSpectralZero) ev = 0.0;
    }
    lambda_max_ = eigenvalues_(m_ - 1);
    lambda_min_plus_ = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (eigenvalues_(i) > 0.0) {
        lambda_min_plus_ = eigenvalues_(i);
        break;
      }
    }
    // A single node has no nonzero eigenvalue; treat it as perfectly conditioned.
    chi_ = lambda_min_plus_ > 0.0 ? lambda_max_ / lambda_min_plus_ : 1.0;
  }

  int m() const { return m_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }
  const Matrix& laplacian() const { return laplacian_; }

  // Ascending, clipped at kSpectralZero.
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }

  double lambda_max() const { return lambda_max_; }
  double lambda_min_plus() const { return lambda_min_plus_; }
  double chi() const { return chi_; }

 private:
  bool connected() const {
    std::vector<char> seen(m_, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
      int i = q.front();
      q.pop();
      for (int j : neighbors_[i]) {
        if (!seen[j]) {
          seen[j] = 1;
          ++count;
          q.push(j);
        }
      }
    }
    return count == m_;
  }

  int m_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  Matrix laplacian_;
  Matrix eigenvectors_;
  Vector eigenvalues_;
  double lambda_max_ = 0.0;
  double lambda_min_plus_ = 0.0;
  double chi_ = 1.0;
};

inline constexpr int kErdosRenyiRetries = 100;

inline NetworkGraph build_graph(const Topology& topo, int m) {
  if (m < 2) throw InputError("topologies need m >= 2");
  std::vector<Edge> edges;
  switch (topo.kind) {
    case Topology::Kind::Path:
      for (int i = 0; i + 1 < m; ++i) edges.push_back({i, i + 1});
      break;
    case Topology::Kind::Cycle:
      for (int i = 0; i < m; ++i) edges.push_back({i, (i + 1) % m});
      break;
    case Topology::Kind::Star:
      for (int i = 1; i < m; ++i) edges.push_back({0, i});
      break;
    case Topology::Kind::Complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.push_back({i, j});
      break;
    case Topology::Kind::ErdosRenyi: {
      if (!(topo.p > 0.0 && topo.p <= 1.0)) throw InputError("erdos_renyi needs p in (0, 1]");
      std::mt19937_64 gen(topo.seed);
      std::bernoulli_distribution coin(topo.p);
      for (int attempt = 0; attempt < kErdosRenyiRetries; ++attempt) {
        edges.clear();
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j)
            if (coin(gen)) edges.push_back({i, j});
        try {
          return NetworkGraph(m, edges);
        } catch (const DisconnectedGraph&) {
        }
      }
      throw DisconnectedGraph("erdos_renyi: no connected sample after " +
                              std::to_string(kErdosRenyiRetries) + " attempts");
    }
    case Topology::Kind::EdgeList:
      edges = topo.edges;
      break;
  }
  return NetworkGraph(m, std::move(edges));
}

// Reads `i j` pairs, one per line, 0-indexed. Blank lines and lines starting
// with '#' are skipped.
inline std::vector<Edge> read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list '" + path + "'");
  std::vector<Edge> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    Edge e;
    if (!(ss >> e.u >> e.v)) {
      throw InputError(path + ":" + std::to_string(lineno) + ": expected two node indices");
    }
    edges.push_back(e);
  }
  return edges;
}

// Node count implied by an edge list (largest endpoint + 1).
inline int implied_node_count(const std::vector<Edge>& edges) {
  int m = 0;
  for (const auto& e : edges) m = std::max({m, e.u + 1, e.v + 1});
  return m;
}

// Block application of W = W̄ ⊗ I_n. Node i reads only its own block and the
// blocks of its neighbours, so one call is one communication round.
inline BlockVector apply_W(const NetworkGraph& g, const BlockVector& x) {
  require_blocks(x, g.m(), "apply_W");
  BlockVector out(x.rows(), x.cols());
  for (int i = 0; i < g.m(); ++i) {
    out.row(i) = static_cast<double>(g.degree(i)) * x.row(i);
    for (int j : g.neighbors(i)) out.row(i) -= x.row(j);
  }
  return out;
}

// Symmetric square root of the Laplacian, kept in its eigenbasis.
struct SqrtLaplacian {
  Matrix eigenvectors;
  Vector sqrt_eigenvalues;
  int rank = 0;

  explicit SqrtLaplacian(const NetworkGraph& g)
      : eigenvectors(g.eigenvectors()), sqrt_eigenvalues(g.eigenvalues().cwiseSqrt()) {
    rank = static_cast<int>((sqrt_eigenvalues.array() > 0.0).count());
  }

  int m() const { return static_cast<int>(eigenvectors.rows()); }

  // Dense m x m matrix √W̄.
  Matrix matrix() const {
    return eigenvectors * sqrt_eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

// Applies √W per coordinate of the blocks. This is a global operator: every
// output block depends on every input block.
inline BlockVector apply_sqrtW(const SqrtLaplacian& s, const BlockVector& x) {
  require_blocks(x, s.m(), "apply_sqrtW");
  Matrix coeffs = s.eigenvectors.transpose() * x;
  coeffs = s.sqrt_eigenvalues.asDiagonal() * coeffs;
  return s.eigenvectors * coeffs;
}

// ‖√W x‖₂ computed as sqrt(<x, W x>), which needs only neighbour exchange.
inline double consensus_residual(const NetworkGraph& g, const BlockVector& x) {
  return std::sqrt(std::max(0.0, dot(x, apply_W(g, x))));
}

}  // namespace duonet
