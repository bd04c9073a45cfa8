#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "angio/tracking.hpp"
#include "oracles.hpp"

using namespace angio;

namespace {

VesselnessMap blank_map(int w, int h) {
  return {FloatImage(w, h, 0.0), FloatImage(w, h, 0.0), FloatImage(w, h, 1.0)};
}

void add_blob(VesselnessMap& m, double cx, double cy, double peak) {
  for (int y = 0; y < m.magnitude.height(); ++y)
    for (int x = 0; x < m.magnitude.width(); ++x)
      m.magnitude(x, y) = std::max(m.magnitude(x, y), peak * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 4.0));
}

PixelGraph graph_from(int n, const std::vector<oracle::Edge>& edges) {
  PixelGraph g;
  for (int i = 0; i < n; ++i) g.add_node({i, 0});
  for (const auto& e : edges) g.add_edge(e.a, e.b, e.cost);
  return g;
}

std::vector<oracle::Edge> random_edges(std::mt19937& rng, int n, bool integer_costs) {
  std::bernoulli_distribution keep(0.45);
  std::uniform_int_distribution<int> icost(1, 4);
  std::uniform_real_distribution<double> rcost(0.01, 5.0);
  std::vector<oracle::Edge> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (keep(rng)) edges.push_back({a, b, integer_costs ? static_cast<double>(icost(rng)) : rcost(rng)});
  return edges;
}

}  // namespace

TEST(Nodes, AllZeroMapHasNone) { EXPECT_TRUE(extract_nodes(blank_map(20, 20)).empty()); }

TEST(Nodes, SingleBlobSingleNode) {
  auto m = blank_map(30, 30);
  add_blob(m, 12, 17, 0.9);
  const auto nodes = extract_nodes(m);
  ASSERT_EQ(nodes.size(), 1u);
  EXPECT_EQ(nodes[0].position, (Point{12, 17}));
  EXPECT_DOUBLE_EQ(nodes[0].vesselness, 0.9);
}

TEST(Nodes, TwoBlobsTenApart) {
  auto m = blank_map(40, 20);
  add_blob(m, 10, 10, 0.8);
  add_blob(m, 20, 10, 0.7);
  const auto nodes = extract_nodes(m, 5);
  ASSERT_EQ(nodes.size(), 2u);
  EXPECT_EQ(nodes[0].position, (Point{10, 10}));
  EXPECT_EQ(nodes[1].position, (Point{20, 10}));
}

TEST(Nodes, WindowValidation) {
  EXPECT_THROW(extract_nodes(blank_map(5, 5), 4), Error);
  EXPECT_THROW(extract_nodes(blank_map(5, 5), 1), Error);
}

TEST(Nodes, FromMaskRasterOrder) {
  BinaryMask mask(5, 5);
  mask(3, 1) = mask(1, 2) = mask(0, 4) = 1;
  const auto nodes = nodes_from_mask(mask, blank_map(5, 5));
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[0].position, (Point{3, 1}));
  EXPECT_EQ(nodes[2].position, (Point{0, 4}));
  EXPECT_EQ(nodes[2].id, 2);
}

TEST(Graph, LinkRule) {
  const auto vm = blank_map(20, 20);
  CostWeights w{1, 1, 1, 1e-6};
  EXPECT_EQ(build_graph({{0, {5, 5}, 1, 0}}, vm, w).edge_count(), 0u);
  EXPECT_EQ(build_graph({{0, {2, 2}, 1, 0}, {1, {7, 2}, 1, 0}}, vm, w).edge_count(), 0u);
  const auto g = build_graph({{0, {2, 2}, 1, 0.3}, {1, {5, 2}, 1, 0.3}}, vm, w);
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(g.edges()[0].cost, 3.0);
  EXPECT_EQ(build_graph({{0, {2, 2}, 1, 0}, {1, {6, 6}, 1, 0}}, vm, w).edge_count(), 1u);
}

TEST(Graph, MatchesAllPairsScan) {
  std::mt19937 rng(41);
  std::uniform_int_distribution<int> c(0, 39);
  std::vector<VesselNode> nodes;
  for (int i = 0; i < 150; ++i) nodes.push_back({i, {c(rng), c(rng)}, 0.5, 0.0});
  const auto g = build_graph(nodes, blank_map(40, 40), CostWeights{});
  std::size_t expected = 0;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b)
      expected += chebyshev(nodes[a].position, nodes[b].position) <= 4;
  EXPECT_EQ(g.edge_count(), expected);
  for (const auto& e : g.edges()) {
    EXPECT_NE(e.a, e.b);
    EXPECT_GE(e.cost, 0.0);
    EXPECT_TRUE(g.valid(e.a) && g.valid(e.b));
  }
}

TEST(Graph, CostFormula) {
  const VesselNode a{0, {0, 0}, 0.2, 0.0}, b{1, {3, 4}, 0.6, std::numbers::pi / 3};
  const CostWeights w{1.5, 2.0, 0.5, 1e-6};
  EXPECT_NEAR(link_cost(a, b, w), 1.5 * 5 + 2.0 * 0.6 + 0.5 * 0.5, 1e-12);
  const VesselNode same{1, {0, 0}, 1.0, 0.0};
  const VesselNode here{0, {0, 0}, 1.0, 0.0};
  EXPECT_EQ(link_cost(here, same, w), 1e-6);
}

TEST(Graph, Validation) {
  PixelGraph g;
  g.add_node({0, 0});
  g.add_node({1, 0});
  EXPECT_THROW(g.add_edge(0, 0, 1.0), Error);
  EXPECT_THROW(g.add_edge(0, 5, 1.0), Error);
  EXPECT_THROW(g.add_edge(0, 1, -1.0), Error);
  EXPECT_THROW((CostWeights{0, 0, 0, 1e-6}.validate()), Error);
}

TEST(ShortestPath, Diamond) {
  // a=0, b=1, c=2, d=3
  const auto g = graph_from(4, {{0, 1, 1}, {0, 2, 2}, {1, 3, 2}, {2, 3, 0.5}});
  const auto p = shortest_path(g, 0, 3);
  EXPECT_EQ(p.nodes, (std::vector<NodeId>{0, 2, 3}));
  EXPECT_DOUBLE_EQ(p.cost, 2.5);
  const auto oracle_best = oracle::best_simple_path(4, {{0, 1, 1}, {0, 2, 2}, {1, 3, 2}, {2, 3, 0.5}}, 0, 3);
  EXPECT_EQ(std::vector<int>(p.nodes.begin(), p.nodes.end()), oracle_best->nodes);
}

TEST(ShortestPath, StartEqualsGoal) {
  const auto g = graph_from(3, {{0, 1, 1}});
  const auto p = shortest_path(g, 2, 2);
  EXPECT_EQ(p.nodes, (std::vector<NodeId>{2}));
  EXPECT_EQ(p.cost, 0.0);
  EXPECT_EQ(p.pixels.size(), 1u);
}

TEST(ShortestPath, NoPathAndUnknownNode) {
  const auto g = graph_from(4, {{0, 1, 1}, {2, 3, 1}});
  try {
    shortest_path(g, 0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPath);
  }
  try {
    shortest_path(g, 0, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownNode);
  }
}

TEST(ShortestPath, MatchesEnumeration) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 2 + trial % 8;
    const auto edges = random_edges(rng, n, trial % 2 == 0);
    const auto g = graph_from(n, edges);
    const int s = static_cast<int>(rng() % static_cast<unsigned>(n)), t = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (s == t) continue;
    const auto best = oracle::best_simple_path(n, edges, s, t);
    if (!best) {
      EXPECT_THROW(shortest_path(g, s, t), Error);
      continue;
    }
    const auto p = shortest_path(g, s, t);
    EXPECT_EQ(std::vector<int>(p.nodes.begin(), p.nodes.end()), best->nodes) << trial;
    EXPECT_EQ(p.cost, best->cost) << trial;
  }
}

TEST(ShortestPath, PixelsFollowBresenham) {
  PixelGraph g;
  g.add_node({0, 0});
  g.add_node({3, 1});
  g.add_node({3, 4});
  g.add_edge(0, 1, 1);
  g.add_edge(1, 2, 1);
  const auto p = shortest_path(g, 0, 2);
  ASSERT_EQ(p.pixels.front(), (Point{0, 0}));
  ASSERT_EQ(p.pixels.back(), (Point{3, 4}));
  EXPECT_EQ(p.pixels.size(), 4u + 3u);
  for (std::size_t i = 1; i < p.pixels.size(); ++i) {
    EXPECT_LE(std::abs(p.pixels[i].x - p.pixels[i - 1].x), 1);
    EXPECT_LE(std::abs(p.pixels[i].y - p.pixels[i - 1].y), 1);
  }
}

TEST(Dijkstra, TriangleInequality) {
  std::mt19937 rng(43);
  const int n = 9;
  const auto edges = random_edges(rng, n, false);
  const auto g = graph_from(n, edges);
  std::vector<std::vector<double>> d;
  for (int s = 0; s < n; ++s) d.push_back(dijkstra(g, s));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (std::isfinite(d[a][b]) && std::isfinite(d[b][c])) EXPECT_LE(d[a][c], d[a][b] + d[b][c] + 1e-12);
}

TEST(Snap, RulesAndTies) {
  PixelGraph g;
  for (int i = 0; i < 10; ++i) g.add_node({i * 10, 0});
  EXPECT_EQ(snap_to_node(g, {30, 0}), 3);
  EXPECT_EQ(snap_to_node(g, {35, 0}), 3);   // equidistant from ids 3 and 4
  EXPECT_EQ(snap_to_node(g, {500, 400}), 9);
  EXPECT_THROW(snap_to_node(PixelGraph{}, {0, 0}), Error);
}

TEST(Snap, TieBetweenThreeAndSeven) {
  PixelGraph g;
  for (int i = 0; i < 8; ++i) g.add_node(i == 3 ? Point{10, 0} : i == 7 ? Point{10, 20} : Point{100 + i, 100});
  EXPECT_EQ(snap_to_node(g, {10, 10}), 3);
}
