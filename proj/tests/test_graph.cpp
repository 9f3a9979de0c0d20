#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "hmd/hmd.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using testutil::graph;

namespace {

std::vector<std::string> ids_of(const hmd::UserGraph& g) { return g.user_ids(); }

}  // namespace

TEST(BuildGraph, DeduplicatesRepeatedEdges) {
  const auto g = graph({{"a", "b"}, {"b", "c"}, {"a", "b"}});
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(BuildGraph, DropsSelfLoopButKeepsNode) {
  const auto g = graph({{"a", "a"}});
  EXPECT_EQ(g.node_count(), 1u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(BuildGraph, ReciprocalPairKeepsBothDirections) {
  const auto g = graph({{"a", "b"}, {"b", "a"}});
  const auto a = g.index_of("a");
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.out_neighbors(a).size(), 1u);
  EXPECT_EQ(g.in_neighbors(a).size(), 1u);
  EXPECT_EQ(g.undirected_edge_count(), 1u);
}

TEST(BuildGraph, MissingEndpointNamesLine) {
  std::vector<hmd::Edge> edges = {{"a", "b", 2}, {"c", "", 3}};
  try {
    hmd::build_graph(edges);
    FAIL() << "expected parse error";
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kParse);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(BuildGraph, AdjacencyIsConsistent) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [g, raw] = testutil::random_graph(rng, 15, 0.2);
    for (hmd::NodeId u = 0; u < g.node_count(); ++u) {
      for (hmd::NodeId v : g.out_neighbors(u)) {
        const auto in = g.in_neighbors(v);
        EXPECT_TRUE(std::find(in.begin(), in.end(), u) != in.end());
        EXPECT_TRUE(g.adjacent(u, v));
        EXPECT_TRUE(g.adjacent(v, u));
      }
    }
    EXPECT_EQ(g.edge_count(), raw.size());
  }
}

TEST(BuildGraph, IndependentOfEdgeOrder) {
  auto edges = testutil::edges({{"x", "y"}, {"b", "x"}, {"y", "a"}, {"a", "b"}});
  const auto g1 = hmd::build_graph(edges);
  std::reverse(edges.begin(), edges.end());
  EXPECT_EQ(g1, hmd::build_graph(edges));
}

TEST(BuildGraph, UnknownUserLookupFails) {
  const auto g = graph({{"a", "b"}});
  EXPECT_FALSE(g.find("zz").has_value());
  try {
    g.index_of("zz");
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kNotFound);
  }
}

TEST(Lcc, PicksLargerOfTwoChains) {
  const auto lcc = hmd::largest_weakly_connected_component(graph({{"a", "b"}, {"c", "d"}, {"d", "e"}}));
  EXPECT_EQ(ids_of(lcc), (std::vector<std::string>{"c", "d", "e"}));
  EXPECT_EQ(lcc.edge_count(), 2u);
}

TEST(Lcc, ConnectedGraphIsIdentity) {
  const auto g = graph({{"a", "b"}, {"c", "b"}, {"c", "a"}});
  EXPECT_EQ(hmd::largest_weakly_connected_component(g), g);
}

TEST(Lcc, StarBeatsIsolatedPair) {
  std::vector<hmd::Edge> edges;
  for (int i = 0; i < 10; ++i) edges.push_back({"leaf" + std::to_string(i), "hub", 0});
  edges.push_back({"p", "q", 0});
  const auto g = hmd::build_graph(edges);
  const auto lcc = hmd::largest_weakly_connected_component(g);
  EXPECT_EQ(lcc.node_count(), 11u);
  EXPECT_TRUE(lcc.find("hub").has_value());
  EXPECT_FALSE(lcc.find("p").has_value());
}

TEST(Lcc, EmptyGraphRejected) {
  try {
    hmd::largest_weakly_connected_component(hmd::UserGraph{});
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kEmptyInput);
  }
}

TEST(Lcc, MatchesBfsOracleAndIsIdempotent) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + trial % 25;
    const auto [g, raw] = testutil::random_graph(rng, n, 1.2 / static_cast<double>(n));
    const auto expected = oracle::largest_component(oracle::undirected_matrix(n, raw));
    const auto nodes = hmd::largest_component_nodes(g);
    ASSERT_EQ(nodes.size(), expected.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) EXPECT_EQ(nodes[i], expected[i]);
    const auto lcc = hmd::largest_weakly_connected_component(g);
    EXPECT_EQ(hmd::largest_weakly_connected_component(lcc), lcc);
  }
}

TEST(Clustering, TriangleIsOne) {
  EXPECT_DOUBLE_EQ(hmd::clustering_coefficient(graph({{"a", "b"}, {"b", "c"}, {"c", "a"}})), 1.0);
}

TEST(Clustering, StarIsZero) {
  EXPECT_DOUBLE_EQ(
      hmd::clustering_coefficient(graph({{"h", "1"}, {"h", "2"}, {"h", "3"}, {"h", "4"}, {"h", "5"}})), 0.0);
}

TEST(Clustering, FourCycleWithChordMatchesEnumeration) {
  // a-b-c-d-a plus chord a-c: a and c see 2 of 3 pairs linked, b and d see 1 of 1.
  const auto g = graph({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}, {"a", "c"}});
  const auto expected = oracle::mean_clustering(
      oracle::undirected_matrix(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}));
  EXPECT_NEAR(hmd::clustering_coefficient(g), expected, 1e-12);
  EXPECT_NEAR(expected, (2.0 / 3 + 1 + 2.0 / 3 + 1) / 4, 1e-15);
}

TEST(Clustering, ReciprocalEdgesCountOnce) {
  const auto g1 = graph({{"a", "b"}, {"b", "c"}, {"c", "a"}, {"c", "d"}});
  const auto g2 = graph({{"a", "b"}, {"b", "a"}, {"b", "c"}, {"c", "b"}, {"c", "a"}, {"c", "d"}, {"d", "c"}});
  EXPECT_DOUBLE_EQ(hmd::clustering_coefficient(g1), hmd::clustering_coefficient(g2));
}

TEST(Clustering, MatchesTriangleOracleAndThreadCount) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + trial % 28;
    const auto [g, raw] = testutil::random_graph(rng, n, 0.15);
    const double expected = oracle::mean_clustering(oracle::undirected_matrix(n, raw));
    const double got = hmd::clustering_coefficient(g);
    EXPECT_NEAR(got, expected, 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
    EXPECT_EQ(got, hmd::clustering_coefficient(g, 4));
  }
}

TEST(Clustering, InvariantUnderRelabeling) {
  std::mt19937_64 rng(5);
  const auto [g, raw] = testutil::random_graph(rng, 25, 0.2);
  // Reverse the id order so every node lands on a different index.
  std::vector<hmd::Edge> relabeled;
  for (auto [a, b] : raw) {
    relabeled.push_back({"z" + std::to_string(1000 - a), "z" + std::to_string(1000 - b), 0});
  }
  std::shuffle(relabeled.begin(), relabeled.end(), rng);
  const auto h = hmd::build_graph(relabeled);
  EXPECT_NEAR(hmd::clustering_coefficient(g), hmd::clustering_coefficient(h), 1e-12);
  EXPECT_DOUBLE_EQ(hmd::powerlaw_gamma(g, 2), hmd::powerlaw_gamma(h, 2));
}

TEST(PowerLaw, DirectFormulaOnSmallSample) {
  const std::vector<std::uint32_t> degrees = {2, 2, 4, 8};
  const double log_sum = 2 * std::log(2 / 1.5) + std::log(4 / 1.5) + std::log(8 / 1.5);
  const auto fit = hmd::powerlaw_mle(degrees, 2);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.gamma, 1.0 + 4.0 / log_sum, 1e-12);
  EXPECT_EQ(fit.tail_size, 4u);
}

TEST(PowerLaw, SingleDistinctDegreeIsDegenerate) {
  const std::vector<std::uint32_t> degrees = {3, 3, 3, 1};
  const auto fit = hmd::powerlaw_mle(degrees, 3);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_TRUE(std::isinf(fit.gamma));
  // Cycle: every degree equals 2.
  EXPECT_TRUE(std::isinf(hmd::powerlaw_gamma(graph({{"a", "b"}, {"b", "c"}, {"c", "a"}}), 2)));
}

TEST(PowerLaw, EmptyTailIsInsufficientData) {
  try {
    hmd::powerlaw_gamma(graph({{"a", "b"}}), 2);
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kInsufficientData);
  }
}

TEST(PowerLaw, PreferentialAttachmentGraphHasScaleFreeExponent) {
  hmd::SynthConfig cfg;
  cfg.n_users = 10000;
  cfg.attach_m = 3;
  cfg.homophily = 0.0;
  const auto g = hmd::generate_graph(cfg, hmd::assign_classes(cfg));
  const auto fit = hmd::fit_powerlaw(hmd::undirected_degrees(g));
  EXPECT_GE(fit.gamma, 2.5);
  EXPECT_LE(fit.gamma, 3.5);
  EXPECT_GE(fit.d_min, 2u);
}

TEST(Stats, ReportsLccFigures) {
  const auto s = hmd::compute_stats(graph({{"a", "b"}, {"b", "c"}, {"c", "a"}}));
  EXPECT_EQ(s.node_count, 3u);
  EXPECT_EQ(s.edge_count, 3u);
  EXPECT_DOUBLE_EQ(s.clustering_coefficient, 1.0);
  EXPECT_EQ(s.component_count, 1u);
}

TEST(Ego, IsolatedNodeExportsItself) {
  std::vector<std::string> extra = {"solo"};
  const auto g = hmd::build_graph(std::vector<hmd::Edge>{{"a", "b", 0}}, extra);
  const auto ego = hmd::ego_network(g, "solo", {});
  ASSERT_EQ(ego.nodes.size(), 1u);
  EXPECT_TRUE(ego.edges.empty());
  EXPECT_FALSE(ego.nodes[0].prob.has_value());
}

TEST(Ego, StarHubExportsAllLeaves) {
  const auto g = graph({{"1", "h"}, {"2", "h"}, {"h", "3"}, {"4", "h"}, {"5", "h"}, {"5", "x"}});
  const auto ego = hmd::ego_network(g, "h", {});
  EXPECT_EQ(ego.nodes.size(), 6u);
  EXPECT_EQ(ego.edges.size(), 5u);
}

TEST(Ego, CarriesProbabilitiesVerbatim) {
  const auto g = graph({{"a", "b"}, {"b", "c"}, {"c", "a"}});
  const auto ego = hmd::ego_network(g, "a", {{"a", 0.9}, {"b", 0.1}, {"c", 0.5}});
  ASSERT_EQ(ego.nodes.size(), 3u);
  EXPECT_EQ(*ego.nodes[0].prob, 0.9);
  EXPECT_EQ(*ego.nodes[1].prob, 0.1);
  EXPECT_EQ(*ego.nodes[2].prob, 0.5);
  EXPECT_EQ(ego.edges.size(), 3u);

  const auto dot = ego.to_dot();
  EXPECT_NE(dot.find("\"a\" [prob=\"0.900\", ego=\"true\"]"), std::string::npos);
  EXPECT_NE(dot.find("\"b\" [prob=\"0.100\"]"), std::string::npos);
  EXPECT_NE(dot.find("\"c\" -> \"a\";"), std::string::npos);

  const auto j = ego.to_json();
  EXPECT_EQ(j["ego"], "a");
  EXPECT_EQ(j["nodes"][1]["prob"].get<double>(), 0.1);
  EXPECT_EQ(j["edges"].size(), 3u);
}

TEST(Ego, UnknownUserIsNotFound) {
  const auto g = graph({{"a", "b"}});
  try {
    hmd::ego_network(g, "nobody", {});
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kNotFound);
  }
}

TEST(Ego, DotEscapesQuotes) {
  const auto g = graph({{"say \"hi\"", "b"}});
  EXPECT_NE(hmd::ego_network(g, "b", {}).to_dot().find("\"say \\\"hi\\\"\""), std::string::npos);
}
