#ifndef ANGIO_TRACKING_HPP
#define ANGIO_TRACKING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "angio/error.hpp"
#include "angio/filtering.hpp"
#include "angio/geometry.hpp"
#include "angio/raster.hpp"

namespace angio {

using NodeId = std::int32_t;

struct VesselNode {
  NodeId id = 0;
  Point position;
  double vesselness = 0.0;   // [0, 1]
  double orientation = 0.0;  // [0, pi)
};

struct GraphEdge {
  NodeId a = 0, b = 0;
  double cost = 0.0;
};

/// Undirected weighted graph over image positions. build_graph only links
/// nodes within Chebyshev distance kMaxLinkDistance; add_edge itself accepts
/// any pair so that the path search can be exercised on arbitrary graphs.
class PixelGraph {
 public:
  static constexpr int kMaxLinkDistance = 4;  // two overlapping 5x5 windows

  NodeId add_node(Point position, double vesselness = 1.0, double orientation = 0.0) {
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back({id, position, vesselness, orientation});
    adjacency_.emplace_back();
    return id;
  }

  void add_edge(NodeId a, NodeId b, double cost) {
    if (!valid(a) || !valid(b)) throw Error(ErrorCode::UnknownNode, "edge references an unknown node");
    if (a == b) throw Error(ErrorCode::InvalidParams, "self-loops are not allowed");
    if (!(cost >= 0.0) || !std::isfinite(cost))
      throw Error(ErrorCode::InvalidParams, "edge costs must be finite and non-negative");
    edges_.push_back({std::min(a, b), std::max(a, b), cost});
    adjacency_[static_cast<std::size_t>(a)].push_back({b, cost});
    adjacency_[static_cast<std::size_t>(b)].push_back({a, cost});
  }

  bool valid(NodeId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<VesselNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  const VesselNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::pair<NodeId, double>>& neighbors(NodeId id) const {
    return adjacency_.at(static_cast<std::size_t>(id));
  }

  /// Cost of the cheapest direct edge a-b, or +inf.
  double edge_cost(NodeId a, NodeId b) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [n, c] : neighbors(a))
      if (n == b) best = std::min(best, c);
    return best;
  }

 private:
  std::vector<VesselNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::pair<NodeId, double>>> adjacency_;
};

struct CostWeights {
  double w_dist = 1.0;
  double w_vessel = 2.0;
  double w_orient = 0.5;
  double epsilon = 1e-6;

  void validate() const {
    if (!(w_dist >= 0.0 && w_vessel >= 0.0 && w_orient >= 0.0))
      throw Error(ErrorCode::InvalidParams, "cost weights must be non-negative");
    if (!(w_dist > 0.0 || w_vessel > 0.0 || w_orient > 0.0))
      throw Error(ErrorCode::InvalidParams, "at least one cost weight must be positive");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidParams, "cost epsilon must be positive");
  }
};

struct CenterlinePath {
  std::vector<NodeId> nodes;
  std::vector<Point> pixels;  // Bresenham trace through the node positions
  double cost = 0.0;
};

// ---------------------------------------------------------------------------
// Nodes
// ---------------------------------------------------------------------------

/// Nodes at pixels that are the strict maximum of their window x window
/// neighbourhood and exceed `floor`; ids in raster order.
inline std::vector<VesselNode> extract_nodes(const VesselnessMap& vmap, int window = 5, double floor = 0.05) {
  if (window < 3 || window % 2 == 0)
    throw Error(ErrorCode::EvenWindow, "node window must be odd and >= 3");
  if (!(floor >= 0.0 && floor < 1.0)) throw Error(ErrorCode::InvalidParams, "node floor must lie in [0, 1)");
  const auto& mag = vmap.magnitude;
  const int r = window / 2;
  std::vector<VesselNode> nodes;
  for (int y = 0; y < mag.height(); ++y)
    for (int x = 0; x < mag.width(); ++x) {
      const double v = mag(x, y);
      if (!(v > floor)) continue;
      bool strict_max = true;
      for (int dy = -r; dy <= r && strict_max; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if ((dx == 0 && dy == 0) || !mag.contains(x + dx, y + dy)) continue;
          if (mag(x + dx, y + dy) >= v) {
            strict_max = false;
            break;
          }
        }
      if (strict_max)
        nodes.push_back({static_cast<NodeId>(nodes.size()), {x, y}, v, vmap.orientation(x, y)});
    }
  return nodes;
}

/// One node per set pixel of a (skeleton) mask, ids in raster order.
inline std::vector<VesselNode> nodes_from_mask(const BinaryMask& mask, const VesselnessMap& vmap) {
  if (!mask.same_shape(vmap.magnitude))
    throw Error(ErrorCode::InvalidParams, "node mask and vesselness map differ in size");
  std::vector<VesselNode> nodes;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y))
        nodes.push_back({static_cast<NodeId>(nodes.size()), {x, y}, vmap.magnitude(x, y), vmap.orientation(x, y)});
  return nodes;
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

/// w_dist |ab| + w_vessel (1 - (v_a + v_b) / 2) + w_orient (1 - |cos(theta_a - theta_b)|),
/// floored at epsilon.
inline double link_cost(const VesselNode& a, const VesselNode& b, const CostWeights& w) {
  const double dist = std::hypot(static_cast<double>(a.position.x - b.position.x),
                                 static_cast<double>(a.position.y - b.position.y));
  const double vessel = 1.0 - 0.5 * (a.vesselness + b.vesselness);
  const double orient = 1.0 - std::abs(std::cos(a.orientation - b.orientation));
  return std::max(w.epsilon, w.w_dist * dist + w.w_vessel * vessel + w.w_orient * orient);
}

inline int chebyshev(Point a, Point b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

/// Links every node pair within Chebyshev distance 4. Node ids are
/// reassigned to the order of `nodes`.
inline PixelGraph build_graph(const std::vector<VesselNode>& nodes, const VesselnessMap& vmap,
                              const CostWeights& weights) {
  weights.validate();
  PixelGraph graph;
  for (const auto& n : nodes) {
    if (!vmap.magnitude.contains(n.position))
      throw Error(ErrorCode::OutOfBounds, "node position lies outside the vesselness map");
    graph.add_node(n.position, n.vesselness, n.orientation);
  }
  // Bucket nodes into cells of the link distance so that only the 3x3
  // neighbouring cells need checking.
  constexpr int cell = PixelGraph::kMaxLinkDistance;
  std::unordered_map<std::int64_t, std::vector<NodeId>> buckets;
  auto key = [](int cx, int cy) { return (static_cast<std::int64_t>(cy) << 32) ^ static_cast<std::uint32_t>(cx); };
  for (const auto& n : graph.nodes()) buckets[key(n.position.x / cell, n.position.y / cell)].push_back(n.id);
  for (const auto& a : graph.nodes()) {
    const int cx = a.position.x / cell, cy = a.position.y / cell;
    std::vector<NodeId> partners;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (NodeId b : it->second)
          if (b > a.id && chebyshev(a.position, graph.node(b).position) <= PixelGraph::kMaxLinkDistance)
            partners.push_back(b);
      }
    std::sort(partners.begin(), partners.end());
    for (NodeId b : partners) graph.add_edge(a.id, b, link_cost(a, graph.node(b), weights));
  }
  return graph;
}

// ---------------------------------------------------------------------------
// Path search
// ---------------------------------------------------------------------------

/// Costs of the cheapest path from `source` to every node (+inf when
/// unreachable). Queue ties are popped by node id.
inline std::vector<double> dijkstra(const PixelGraph& graph, NodeId source) {
  if (!graph.valid(source)) throw Error(ErrorCode::UnknownNode, "unknown node id " + std::to_string(source));
  std::vector<double> dist(graph.node_count(), std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[static_cast<std::size_t>(source)] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& [v, c] : graph.neighbors(u)) {
      const double nd = d + c;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        queue.push({nd, v});
      }
    }
  }
  return dist;
}

inline std::vector<Point> trace_pixels(const PixelGraph& graph, const std::vector<NodeId>& node_path) {
  std::vector<Point> pixels;
  for (std::size_t i = 0; i < node_path.size(); ++i) {
    const Point p = graph.node(node_path[i]).position;
    if (i == 0) {
      pixels.push_back(p);
      continue;
    }
    const auto seg = bresenham(graph.node(node_path[i - 1]).position, p);
    pixels.insert(pixels.end(), seg.begin() + 1, seg.end());
  }
  return pixels;
}

/// Minimal-cost path. Among equal-cost optima the lexicographically smallest
/// node-id sequence is returned: distances to `goal` are computed once, then
/// the path is grown from `start` taking the smallest-id neighbour that stays
/// on an optimal route.
inline CenterlinePath shortest_path(const PixelGraph& graph, NodeId start, NodeId goal) {
  if (!graph.valid(start) || !graph.valid(goal))
    throw Error(ErrorCode::UnknownNode, "shortest_path: unknown start or goal node");
  CenterlinePath path;
  if (start == goal) {
    path.nodes = {start};
    path.pixels = {graph.node(start).position};
    return path;
  }
  const auto to_goal = dijkstra(graph, goal);
  if (!std::isfinite(to_goal[static_cast<std::size_t>(start)]))
    throw Error(ErrorCode::NoPath, "no path between nodes " + std::to_string(start) + " and " + std::to_string(goal));

  std::vector<char> on_path(graph.node_count(), 0);
  NodeId u = start;
  path.nodes.push_back(u);
  on_path[static_cast<std::size_t>(u)] = 1;
  while (u != goal) {
    const double remaining = to_goal[static_cast<std::size_t>(u)];
    const double tol = 1e-12 * std::max(1.0, remaining);
    NodeId next = -1;
    double next_cost = 0.0;
    for (const auto& [v, c] : graph.neighbors(u)) {
      if (on_path[static_cast<std::size_t>(v)]) continue;
      if (c + to_goal[static_cast<std::size_t>(v)] <= remaining + tol && (next < 0 || v < next ||
                                                                         (v == next && c < next_cost))) {
        next = v;
        next_cost = c;
      }
    }
    if (next < 0) throw Error(ErrorCode::NoPath, "optimal route reconstruction failed");
    path.cost += next_cost;
    u = next;
    path.nodes.push_back(u);
    on_path[static_cast<std::size_t>(u)] = 1;
  }
  path.pixels = trace_pixels(graph, path.nodes);
  return path;
}

/// Nearest node by Euclidean distance; smallest id on ties.
inline NodeId snap_to_node(const PixelGraph& graph, Point click) {
  if (graph.empty()) throw Error(ErrorCode::EmptyGraph, "cannot snap to an empty graph");
  NodeId best = 0;
  std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
  for (const auto& n : graph.nodes()) {
    const std::int64_t dx = n.position.x - click.x, dy = n.position.y - click.y;
    const std::int64_t d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = n.id;
    }
  }
  return best;
}

inline RadiusProfile estimate_radius(const CenterlinePath& path, const BinaryMask& mask, double step = 1.0) {
  return estimate_radius(std::span<const Point>(path.pixels), mask, step);
}

}  // namespace angio

#endif  // ANGIO_TRACKING_HPP
