#include "zopro/simnet.hpp"
#include "zopro/solvers.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace zopro {
namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

TEST(Exchange, TwoNodeViewsAndStencil) {
  const WeightedGraph g(2, {{0, 1, 1.0}});
  const std::vector<Vector> x{scalar(1), scalar(0)};
  const auto res = exchange(x, g, 0);
  ASSERT_EQ(res.views.size(), 2u);
  ASSERT_EQ(res.views[0].size(), 1u);
  EXPECT_EQ(res.views[0].from(1)(0), 0.0);
  EXPECT_EQ(res.views[1].from(0)(0), 1.0);
  EXPECT_EQ(res.views[0].stencil(x[0])(0), 1.0);
  EXPECT_EQ(res.views[1].stencil(x[1])(0), -1.0);
  EXPECT_THROW(res.views[0].from(0), ParameterError);
}

TEST(Exchange, ConsensusGivesZeroStencil) {
  const auto g = random_connected_graph(7, 3.0, 2, WeightPolicy::Metropolis);
  const std::vector<Vector> x(7, Eigen::Vector3d(0.5, -2, 1));
  const auto res = exchange(x, g, 3);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(res.views[i].stencil(x[i]), Vector::Zero(3));
}

TEST(Exchange, TriangleHasTwoDeliveriesPerEdge) {
  const auto g = complete_graph(3);
  const std::vector<Vector> x{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)};
  const auto res = exchange(x, g, 0);
  EXPECT_EQ(res.deliveries.size(), 6u);
  for (const auto& d : res.deliveries) {
    EXPECT_TRUE(g.has_edge(d.sender, d.receiver));
    EXPECT_EQ(d.digest, payload_digest(x[d.sender]));
    EXPECT_TRUE(d.payload.empty());
  }
  const auto full = exchange(x, g, 0, TraceMode::Full);
  for (const auto& d : full.deliveries) EXPECT_EQ(d.payload.size(), 3u);
  EXPECT_TRUE(exchange(x, g, 0, TraceMode::Off).deliveries.empty());
}

TEST(Exchange, Idempotent) {
  const auto g = random_connected_graph(6, 3.0, 9);
  std::vector<Vector> x;
  for (int i = 0; i < 6; ++i) x.push_back(Eigen::Vector2d(i, -i * 0.5));
  const auto a = exchange(x, g, 4), b = exchange(x, g, 4);
  for (int i = 0; i < 6; ++i) {
    ASSERT_EQ(a.views[i].size(), b.views[i].size());
    for (std::size_t k = 0; k < a.views[i].size(); ++k) EXPECT_EQ(a.views[i].value(k), b.views[i].value(k));
  }
  ASSERT_EQ(a.deliveries.size(), b.deliveries.size());
  for (std::size_t k = 0; k < a.deliveries.size(); ++k) EXPECT_EQ(a.deliveries[k].digest, b.deliveries[k].digest);
}

TEST(LocalityAudit, ExchangeTraceIsClean) {
  const auto g = random_connected_graph(8, 3.0, 1);
  SyncNetwork net(g);
  const std::vector<Vector> x(8, Vector::Ones(2));
  for (int r = 0; r < 3; ++r) net.exchange(x);
  EXPECT_EQ(net.epochs(), 3);
  EXPECT_EQ(net.trace().size(), 3 * 2 * g.num_edges());
  EXPECT_TRUE(locality_audit(net.trace(), g).empty());
}

TEST(LocalityAudit, InjectedNonEdgeIsReported) {
  const auto g = path_graph(4);
  ExchangeTrace trace;
  for (const auto& d : exchange(std::vector<Vector>(4, Vector::Ones(1)), g, 0).deliveries) trace.append(d);
  trace.append(Delivery{0, 0, 3, 42, {}});
  const auto bad = locality_audit(trace, g);
  ASSERT_EQ(bad.size(), 1u);
  EXPECT_EQ(bad[0].sender, 0);
  EXPECT_EQ(bad[0].receiver, 3);
  EXPECT_EQ(bad[0].digest, 42u);
}

TEST(LocalityAudit, FullZoProRunIsClean) {
  const auto g = random_connected_graph(6, 3.0, 4);
  const auto p = make_logistic_problem(6, 3, 5, 1.0, 4);
  AlgoConfig cfg;
  cfg.max_iterations = 200;
  cfg.smoothing.batch = 8;
  cfg.d_policy.tau = 4.0;
  const auto run = run_zopro(p, g, cfg, 1, solve_reference(p));
  ASSERT_EQ(run.rounds(), 200u);
  // Initial exchange plus one per round, two deliveries per edge each.
  EXPECT_EQ(run.trace.size(), 201 * 2 * g.num_edges());
  EXPECT_TRUE(locality_audit(run.trace, g).empty());
}

TEST(TraceExport, JsonLines) {
  const auto g = path_graph(3);
  ExchangeTrace trace;
  for (const auto& d : exchange(std::vector<Vector>(3, Vector::Ones(2)), g, 5, TraceMode::Full).deliveries)
    trace.append(d);
  std::ostringstream os;
  trace.write_jsonl(os);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("round").get<int>(), 5);
    EXPECT_TRUE(g.has_edge(j.at("sender").get<int>(), j.at("receiver").get<int>()));
    EXPECT_TRUE(j.contains("digest"));
    EXPECT_EQ(j.at("payload").size(), 2u);
    ++lines;
  }
  EXPECT_EQ(lines, 4);
}

TEST(TraceModeNames, RoundTrip) {
  for (auto m : {TraceMode::Off, TraceMode::Digest, TraceMode::Full}) EXPECT_EQ(parse_trace_mode(to_string(m)), m);
  EXPECT_THROW(parse_trace_mode("verbose"), ParameterError);
}

}  // namespace
}  // namespace zopro
