#ifndef NDM_GRAPH_HPP
#define NDM_GRAPH_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ndm/rng.hpp"

namespace ndm {

// Dense adjacency is fine for the regime this library targets; cap guards
// against accidentally feeding it a graph it was never meant for.
inline constexpr int kMaxVertices = 4000;

struct Network {
  int n = 0;
  Eigen::MatrixXd adjacency;  // symmetric 0/1, zero diagonal
  std::vector<int> blocks;    // optional labels; empty when absent

  double degree(int i) const { return adjacency.row(i).sum(); }
  std::int64_t edge_count() const {
    return static_cast<std::int64_t>(std::llround(adjacency.sum() / 2.0));
  }
};

namespace detail {
inline void check_vertex_count(int n) {
  if (n < 1) throw std::invalid_argument("vertex count must be positive");
  if (n > kMaxVertices)
    throw std::invalid_argument("vertex count exceeds dense-storage cap");
}
}  // namespace detail

// Bernoulli random graph. Pairs are visited in lexicographic order with one
// uniform draw each, so a seed identifies the same graph everywhere.
inline Network gnp(int n, double p, std::uint64_t seed) {
  detail::check_vertex_count(n);
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0,1]");
  Network g;
  g.n = n;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform01() < p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  return g;
}

// Two equal blocks; within-block edge probability 2p(1-p), between-block p.
inline Network two_block_mixture(int block_size, double p, std::uint64_t seed) {
  if (block_size < 1) throw std::invalid_argument("block size must be positive");
  const int n = 2 * block_size;
  detail::check_vertex_count(n);
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0,1]");
  const double within = 2.0 * p * (1.0 - p);
  Network g;
  g.n = n;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  g.blocks.resize(n);
  for (int i = 0; i < n; ++i) g.blocks[i] = i < block_size ? 0 : 1;
  Rng rng(seed);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double prob = g.blocks[i] == g.blocks[j] ? within : p;
      if (rng.uniform01() < prob) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
    }
  return g;
}

enum class SpecialGraph { star, complete };

inline Network special_graph(SpecialGraph kind, int n) {
  if (n < 2) throw std::invalid_argument("special graphs need n >= 2");
  detail::check_vertex_count(n);
  Network g;
  g.n = n;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  if (kind == SpecialGraph::star) {
    for (int j = 1; j < n; ++j) g.adjacency(0, j) = g.adjacency(j, 0) = 1.0;
  } else {
    g.adjacency.setOnes();
    g.adjacency.diagonal().setZero();
  }
  return g;
}

// Largest eigenvalue modulus. Exact dense eigenvalues up to the storage cap;
// beyond that, power iteration on |W| gives an upper bound that is still a
// valid radius for bracketing the admissible interval.
inline double spectral_radius(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("matrix must be square");
  const int n = static_cast<int>(w.rows());
  if (n == 0) return 0.0;
  if (w.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  if (n <= 2000) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(w, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("eigenvalue computation failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  const Eigen::MatrixXd a = w.cwiseAbs();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd av = a * v;
    const double norm = av.norm();
    if (norm == 0.0) return 0.0;
    av /= norm;
    const double next = v.dot(a * v);
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
    v = av;
  }
  throw std::runtime_error("spectral radius iteration did not converge");
}

struct WeightMatrix {
  Eigen::MatrixXd w;            // nonnegative, zero diagonal
  double spectral_radius = 0.0;
  bool row_stochastic = false;  // non-isolated rows sum to 1, isolated rows zero

  int n() const { return static_cast<int>(w.rows()); }
};

inline WeightMatrix make_weight_matrix(Eigen::MatrixXd w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("W must be square");
  if ((w.array() < 0.0).any())
    throw std::invalid_argument("W entries must be nonnegative");
  if (w.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("W must have zero diagonal");
  WeightMatrix wm;
  wm.spectral_radius = spectral_radius(w);
  wm.row_stochastic = true;
  for (int i = 0; i < w.rows(); ++i) {
    const double s = w.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12 && std::abs(s) > 1e-12) {
      wm.row_stochastic = false;
      break;
    }
  }
  wm.w = std::move(w);
  return wm;
}

// W_ij = A_ij / deg(i); isolated vertices keep an all-zero row.
inline WeightMatrix row_normalized_weights(const Network& g) {
  Eigen::MatrixXd w = g.adjacency;
  for (int i = 0; i < g.n; ++i) {
    const double d = g.degree(i);
    if (d >= 1.0) w.row(i) /= d;
  }
  return make_weight_matrix(std::move(w));
}

// --- edge-list text format -------------------------------------------------
//
//   # comment
//   n <count>            optional; declares vertex count (isolated vertices)
//   v <vertex> <block>   optional block label
//   <i> <j>              one edge per line, 0-based indices

inline Network read_edge_list(std::istream& in, const std::string& name = "<stream>") {
  std::vector<std::pair<int, int>> edges;
  std::vector<std::pair<int, int>> labels;
  int declared_n = -1;
  int max_vertex = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    const auto fail = [&](const std::string& expect) {
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": expected " + expect + ", got \"" + line + "\"");
    };
    if (line[first] == 'n') {
      char tag;
      int n;
      if (!(ls >> tag >> n) || n < 1) fail("\"n <count>\" with positive count");
      declared_n = n;
    } else if (line[first] == 'v') {
      char tag;
      int v, b;
      if (!(ls >> tag >> v >> b) || v < 0) fail("\"v <vertex> <block>\"");
      labels.emplace_back(v, b);
      max_vertex = std::max(max_vertex, v);
    } else {
      int i, j;
      if (!(ls >> i >> j) || i < 0 || j < 0)
        fail("two nonnegative vertex indices");
      if (i == j)
        throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                 ": self-loops are not allowed");
      edges.emplace_back(i, j);
      max_vertex = std::max({max_vertex, i, j});
    }
  }
  const int n = declared_n >= 0 ? declared_n : max_vertex + 1;
  if (n < 1) throw std::runtime_error(name + ": empty edge list and no \"n\" header");
  if (max_vertex >= n)
    throw std::runtime_error(name + ": vertex index " + std::to_string(max_vertex) +
                             " out of range for n=" + std::to_string(n));
  detail::check_vertex_count(n);
  Network g;
  g.n = n;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : edges) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  if (!labels.empty()) {
    g.blocks.assign(n, 0);
    for (const auto& [v, b] : labels) g.blocks[v] = b;
  }
  return g;
}

inline void write_edge_list(std::ostream& out, const Network& g) {
  out << "n " << g.n << "\n";
  for (int i = 0; i < g.n; ++i)
    if (!g.blocks.empty()) out << "v " << i << " " << g.blocks[i] << "\n";
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
}

}  // namespace ndm

#endif  // NDM_GRAPH_HPP
