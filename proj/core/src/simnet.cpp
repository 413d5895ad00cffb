#include "zopro/simnet.hpp"

#include "zopro/seeding.hpp"

#include <nlohmann/json.hpp>

#include <ostream>

namespace zopro {

TraceMode parse_trace_mode(const std::string& name) {
  if (name == "off") return TraceMode::Off;
  if (name == "digest") return TraceMode::Digest;
  if (name == "full") return TraceMode::Full;
  throw ParameterError("unknown trace mode '" + name + "'");
}

std::string to_string(TraceMode mode) {
  switch (mode) {
    case TraceMode::Off: return "off";
    case TraceMode::Digest: return "digest";
    case TraceMode::Full: return "full";
  }
  return "off";
}

void ExchangeTrace::write_jsonl(std::ostream& os) const {
  for (const auto& d : deliveries_) {
    nlohmann::json j = {{"round", d.round},
                        {"sender", d.sender},
                        {"receiver", d.receiver},
                        {"digest", d.digest}};
    if (!d.payload.empty()) j["payload"] = d.payload;
    os << j.dump() << '\n';
  }
}

NeighborView::NeighborView(int owner, std::vector<Neighbor> neighbors, std::vector<Vector> values)
    : owner_(owner), neighbors_(std::move(neighbors)), values_(std::move(values)) {
  require(neighbors_.size() == values_.size(), "NeighborView: one value per neighbor");
}

const Vector& NeighborView::from(int j) const {
  for (std::size_t k = 0; k < neighbors_.size(); ++k)
    if (neighbors_[k].node == j) return values_[k];
  throw ParameterError("node " + std::to_string(j) + " is not a neighbor of node " +
                       std::to_string(owner_));
}

Vector NeighborView::stencil(const Vector& own) const {
  Vector y = Vector::Zero(own.size());
  for (std::size_t k = 0; k < neighbors_.size(); ++k)
    y += neighbors_[k].weight * (own - values_[k]);
  return y;
}

std::uint64_t payload_digest(const Vector& v) {
  return fnv1a(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

ExchangeResult exchange(std::span<const Vector> outgoing, const WeightedGraph& g,
                        std::int64_t round, TraceMode mode) {
  require(static_cast<int>(outgoing.size()) == g.num_nodes(),
          "exchange: one outgoing value per node");
  ExchangeResult out;
  out.views.reserve(outgoing.size());
  std::vector<std::uint64_t> digests(outgoing.size(), 0);
  if (mode != TraceMode::Off)
    for (std::size_t i = 0; i < outgoing.size(); ++i) digests[i] = payload_digest(outgoing[i]);
  for (int i = 0; i < g.num_nodes(); ++i) {
    const auto nbrs = g.neighbors(i);
    std::vector<Vector> received;
    received.reserve(nbrs.size());
    for (const auto& nb : nbrs) {
      received.push_back(outgoing[nb.node]);
      if (mode != TraceMode::Off) {
        Delivery d{round, nb.node, i, digests[nb.node], {}};
        if (mode == TraceMode::Full)
          d.payload.assign(outgoing[nb.node].begin(), outgoing[nb.node].end());
        out.deliveries.push_back(std::move(d));
      }
    }
    out.views.emplace_back(i, std::vector<Neighbor>(nbrs.begin(), nbrs.end()),
                           std::move(received));
  }
  return out;
}

std::vector<Delivery> locality_audit(const ExchangeTrace& trace, const WeightedGraph& g) {
  std::vector<Delivery> violations;
  for (const auto& d : trace.deliveries())
    if (!g.has_edge(d.sender, d.receiver)) violations.push_back(d);
  return violations;
}

std::vector<NeighborView> SyncNetwork::exchange(std::span<const Vector> outgoing) {
  auto result = zopro::exchange(outgoing, *graph_, epoch_++, mode_);
  for (auto& d : result.deliveries) trace_.append(std::move(d));
  return std::move(result.views);
}

}  // namespace zopro
