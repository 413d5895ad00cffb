#pragma once

#include "zopro/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zopro {

struct Edge {
  int u = 0;  // u < v after normalization
  int v = 0;
  double weight = 1.0;
};

struct Neighbor {
  int node = 0;
  double weight = 1.0;
};

enum class WeightPolicy { Uniform, Metropolis };

WeightPolicy parse_weight_policy(const std::string& name);
std::string to_string(WeightPolicy policy);

// Connected undirected graph with strictly positive symmetric edge weights.
// Immutable after construction; the constructor rejects self-loops,
// duplicate pairs, non-positive weights and disconnected inputs.
class WeightedGraph {
 public:
  WeightedGraph(int n_nodes, std::vector<Edge> edges);

  int num_nodes() const { return n_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(int i) const;
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  bool has_edge(int i, int j) const;
  double weight(int i, int j) const;  // 0 for non-edges
  double average_degree() const;

  // Content hash over (n, sorted edges, weights).
  std::uint64_t digest() const;

 private:
  int n_nodes_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

// Uniform random labelled spanning tree (Pruefer code) plus uniformly chosen
// extra edges, for floor(n * avg_degree / 2) edges in total.
WeightedGraph random_connected_graph(int n, double avg_degree, std::uint64_t seed,
                                     WeightPolicy policy = WeightPolicy::Uniform);

WeightedGraph ring_graph(int n);
WeightedGraph path_graph(int n);
WeightedGraph complete_graph(int n);

// Same topology, weights recomputed under the given policy.
WeightedGraph reweighted(const WeightedGraph& g, WeightPolicy policy);

// P with [P]_ii = sum_s p_is, [P]_ij = -p_ij on edges.
Matrix weight_matrix(const WeightedGraph& g);

struct SpectralSummary {
  double lambda_w = 0.0;    // smallest nonzero eigenvalue
  double lambda_max = 0.0;
  Vector eigenvalues;       // ascending
  Matrix eigenvectors;      // columns, orthonormal
};

// Eigenvalues of W = P (x) I_d coincide with those of P, so only P is
// decomposed. Eigenvalues <= 1e-9 * lambda_max count as the null space.
SpectralSummary spectral_summary(const Matrix& p);

inline constexpr double kNullSpaceRelativeThreshold = 1e-9;

nlohmann::json to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const nlohmann::json& j);

}  // namespace zopro
