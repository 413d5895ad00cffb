#include "zopro/graph.hpp"

#include "zopro/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <utility>

namespace zopro {

WeightPolicy parse_weight_policy(const std::string& name) {
  if (name == "uniform") return WeightPolicy::Uniform;
  if (name == "metropolis") return WeightPolicy::Metropolis;
  throw ParameterError("unknown weight policy '" + name + "'");
}

std::string to_string(WeightPolicy policy) {
  return policy == WeightPolicy::Uniform ? "uniform" : "metropolis";
}

WeightedGraph::WeightedGraph(int n_nodes, std::vector<Edge> edges)
    : n_nodes_(n_nodes), edges_(std::move(edges)) {
  require(n_nodes_ >= 2, "graph needs at least 2 nodes");
  for (auto& e : edges_) {
    require(e.u >= 0 && e.u < n_nodes_ && e.v >= 0 && e.v < n_nodes_,
            "edge endpoint out of range");
    require(e.u != e.v, "self-loops are not allowed");
    require(std::isfinite(e.weight) && e.weight > 0.0, "edge weights must be positive");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.u, a.v) < std::pair(b.u, b.v);
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    require(edges_[k].u != edges_[k - 1].u || edges_[k].v != edges_[k - 1].v,
            "duplicate edge");
  }

  std::vector<std::vector<Neighbor>> adj(n_nodes_);
  for (const auto& e : edges_) {
    adj[e.u].push_back({e.v, e.weight});
    adj[e.v].push_back({e.u, e.weight});
  }
  offsets_.assign(n_nodes_ + 1, 0);
  for (int i = 0; i < n_nodes_; ++i) {
    std::sort(adj[i].begin(), adj[i].end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    offsets_[i + 1] = offsets_[i] + adj[i].size();
    adjacency_.insert(adjacency_.end(), adj[i].begin(), adj[i].end());
  }

  std::vector<bool> seen(n_nodes_, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (const auto& nb : neighbors(i)) {
      if (!seen[nb.node]) {
        seen[nb.node] = true;
        ++reached;
        frontier.push(nb.node);
      }
    }
  }
  require(reached == n_nodes_, "graph is not connected");
}

std::span<const Neighbor> WeightedGraph::neighbors(int i) const {
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

bool WeightedGraph::has_edge(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_nodes_ || j >= n_nodes_) return false;
  const auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), Neighbor{j, 0.0},
                            [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
}

double WeightedGraph::weight(int i, int j) const {
  for (const auto& nb : neighbors(i))
    if (nb.node == j) return nb.weight;
  return 0.0;
}

double WeightedGraph::average_degree() const {
  return 2.0 * static_cast<double>(edges_.size()) / n_nodes_;
}

std::uint64_t WeightedGraph::digest() const {
  std::uint64_t h = fnv1a(&n_nodes_, sizeof(n_nodes_));
  for (const auto& e : edges_) {
    h = fnv1a(&e.u, sizeof(e.u), h);
    h = fnv1a(&e.v, sizeof(e.v), h);
    h = fnv1a(&e.weight, sizeof(e.weight), h);
  }
  return h;
}

namespace {

std::vector<std::pair<int, int>> pruefer_tree(int n, Rng& rng) {
  if (n == 2) return {{0, 1}};
  std::vector<int> code(n - 2);
  for (auto& c : code) c = static_cast<int>(uniform_index(rng, n));
  std::vector<int> degree(n, 1);
  for (int c : code) ++degree[c];
  std::set<int> leaves;
  for (int i = 0; i < n; ++i)
    if (degree[i] == 1) leaves.insert(i);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(n - 1);
  for (int c : code) {
    const int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(leaf, c);
    if (--degree[c] == 1) leaves.insert(c);
  }
  const int a = *leaves.begin();
  const int b = *std::next(leaves.begin());
  edges.emplace_back(a, b);
  return edges;
}

std::vector<Edge> apply_policy(int n, const std::vector<std::pair<int, int>>& pairs,
                               WeightPolicy policy) {
  std::vector<int> deg(n, 0);
  for (auto [u, v] : pairs) {
    ++deg[u];
    ++deg[v];
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    const double w = policy == WeightPolicy::Uniform
                         ? 1.0
                         : 1.0 / (1.0 + std::max(deg[u], deg[v]));
    edges.push_back({u, v, w});
  }
  return edges;
}

}  // namespace

WeightedGraph random_connected_graph(int n, double avg_degree, std::uint64_t seed,
                                     WeightPolicy policy) {
  require(n >= 2, "random_connected_graph: n must be >= 2");
  require(std::isfinite(avg_degree) && avg_degree > 0.0,
          "random_connected_graph: avg_degree must be positive");
  const auto max_edges = static_cast<long long>(n) * (n - 1) / 2;
  const auto n_edges = static_cast<long long>(std::floor(n * avg_degree / 2.0 + 1e-9));
  require(n_edges >= n - 1 && n_edges <= max_edges,
          "random_connected_graph: average degree " + std::to_string(avg_degree) +
              " infeasible for n=" + std::to_string(n));

  Rng rng = make_rng(seed, "graph");
  auto pairs = pruefer_tree(n, rng);
  std::set<std::pair<int, int>> used;
  for (auto& [u, v] : pairs) {
    if (u > v) std::swap(u, v);
    used.insert({u, v});
  }
  std::vector<std::pair<int, int>> candidates;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (!used.count({u, v})) candidates.emplace_back(u, v);
  const auto extra = static_cast<std::size_t>(n_edges - (n - 1));
  // Partial Fisher-Yates: the first `extra` slots are a uniform subset.
  for (std::size_t k = 0; k < extra; ++k) {
    const auto r = k + uniform_index(rng, candidates.size() - k);
    std::swap(candidates[k], candidates[r]);
    pairs.push_back(candidates[k]);
  }
  return WeightedGraph(n, apply_policy(n, pairs, policy));
}

WeightedGraph ring_graph(int n) {
  require(n >= 3, "ring_graph: n must be >= 3");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  return WeightedGraph(n, std::move(edges));
}

WeightedGraph reweighted(const WeightedGraph& g, WeightPolicy policy) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : g.edges()) pairs.emplace_back(e.u, e.v);
  return WeightedGraph(g.num_nodes(), apply_policy(g.num_nodes(), pairs, policy));
}

Matrix weight_matrix(const WeightedGraph& g) {
  const int n = g.num_nodes();
  Matrix p = Matrix::Zero(n, n);
  for (const auto& e : g.edges()) {
    p(e.u, e.v) = -e.weight;
    p(e.v, e.u) = -e.weight;
  }
  // Diagonal as the negated off-diagonal row sum, so P*1 = 0 bit-exactly
  // in the neighbor summation order.
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& nb : g.neighbors(i)) s += nb.weight;
    p(i, i) = s;
  }
  return p;
}

SpectralSummary spectral_summary(const Matrix& p) {
  require(p.rows() == p.cols() && p.rows() >= 1, "spectral_summary: square matrix required");
  Eigen::SelfAdjointEigenSolver<Matrix> es(p);
  if (es.info() != Eigen::Success) throw SpectralError("eigendecomposition failed");
  SpectralSummary s;
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  s.lambda_max = s.eigenvalues.maxCoeff();
  if (!(s.lambda_max > 0.0)) throw SpectralError("all eigenvalues are zero");
  const double cutoff = kNullSpaceRelativeThreshold * s.lambda_max;
  s.lambda_w = 0.0;
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    if (s.eigenvalues[k] > cutoff) {
      s.lambda_w = s.eigenvalues[k];
      break;
    }
  }
  int null_dim = 0;
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
    if (s.eigenvalues[k] <= cutoff) ++null_dim;
  if (null_dim != 1)
    throw SpectralError("null space has dimension " + std::to_string(null_dim) +
                        " (expected 1 for a connected graph)");
  return s;
}

nlohmann::json to_json(const WeightedGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v, e.weight});
  return {{"n", g.num_nodes()}, {"edges", edges}};
}

WeightedGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
      edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    return WeightedGraph(j.at("n").get<int>(), std::move(edges));
  } catch (const nlohmann::json::exception& ex) {
    throw ParameterError(std::string("malformed graph document: ") + ex.what());
  }
}

}  // namespace zopro
