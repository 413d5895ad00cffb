#pragma once

#include "zopro/common.hpp"
#include "zopro/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace zopro {

struct Delivery {
  std::int64_t round = 0;
  int sender = 0;
  int receiver = 0;
  std::uint64_t digest = 0;
  std::vector<double> payload;  // only with TraceMode::Full
};

enum class TraceMode { Off, Digest, Full };

TraceMode parse_trace_mode(const std::string& name);
std::string to_string(TraceMode mode);

class ExchangeTrace {
 public:
  void append(Delivery d) { deliveries_.push_back(std::move(d)); }
  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  std::size_t size() const { return deliveries_.size(); }

  // One JSON object per line: {"round","sender","receiver","digest"[,"payload"]}.
  void write_jsonl(std::ostream& os) const;

 private:
  std::vector<Delivery> deliveries_;
};

// What node `owner` received in one exchange epoch: exactly its neighbors'
// primal values, with the edge weights needed for the local stencil.
class NeighborView {
 public:
  NeighborView(int owner, std::vector<Neighbor> neighbors, std::vector<Vector> values);

  int owner() const { return owner_; }
  std::size_t size() const { return neighbors_.size(); }
  std::span<const Neighbor> neighbors() const { return neighbors_; }
  const Vector& value(std::size_t k) const { return values_[k]; }
  // Value sent by neighbor j; throws ParameterError when j is not a neighbor.
  const Vector& from(int j) const;

  // y_i = sum_j p_ij (x_i - x_j)
  Vector stencil(const Vector& own) const;

 private:
  int owner_;
  std::vector<Neighbor> neighbors_;
  std::vector<Vector> values_;
};

struct ExchangeResult {
  std::vector<NeighborView> views;
  std::vector<Delivery> deliveries;
};

// Each node sends outgoing[i] to every neighbor; loss-free, same-round delivery.
ExchangeResult exchange(std::span<const Vector> outgoing, const WeightedGraph& g,
                        std::int64_t round, TraceMode mode = TraceMode::Digest);

// Records whose (sender, receiver) is not an edge of g.
std::vector<Delivery> locality_audit(const ExchangeTrace& trace, const WeightedGraph& g);

std::uint64_t payload_digest(const Vector& v);

// Round-synchronous engine: owns the round counter and the trace. Solvers
// see remote state only through the views it hands back.
class SyncNetwork {
 public:
  explicit SyncNetwork(const WeightedGraph& g, TraceMode mode = TraceMode::Digest)
      : graph_(&g), mode_(mode) {}

  std::vector<NeighborView> exchange(std::span<const Vector> outgoing);

  const WeightedGraph& graph() const { return *graph_; }
  const ExchangeTrace& trace() const { return trace_; }
  std::int64_t epochs() const { return epoch_; }

 private:
  const WeightedGraph* graph_;
  TraceMode mode_;
  ExchangeTrace trace_;
  std::int64_t epoch_ = 0;
};

}  // namespace zopro
