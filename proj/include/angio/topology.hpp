#ifndef ANGIO_TOPOLOGY_HPP
#define ANGIO_TOPOLOGY_HPP

#include <array>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "angio/raster.hpp"
#include "angio/segmentation.hpp"

namespace angio {

struct Skeleton {
  BinaryMask mask;
  std::vector<Point> endpoints;     // exactly one 8-neighbour
  std::vector<Point> branchpoints;  // three or more 8-neighbours
};

struct PruneParams {
  int m = 0;           // pixels eaten from every free end, then regrown along the lines
  int min_branch = 8;  // spurs shorter than this are deleted outright
};

using PixelRun = std::vector<Point>;

inline int neighbor_count(const BinaryMask& mask, int x, int y) {
  int n = 0;
  for (const auto& d : kNeighbors8) n += mask.get_or(x + d.x, y + d.y, 0) ? 1 : 0;
  return n;
}

/// Fills endpoint and branchpoint lists (raster order) for a thin mask.
inline Skeleton classify_skeleton(BinaryMask mask) {
  Skeleton s{std::move(mask), {}, {}};
  for (int y = 0; y < s.mask.height(); ++y)
    for (int x = 0; x < s.mask.width(); ++x) {
      if (!s.mask(x, y)) continue;
      const int n = neighbor_count(s.mask, x, y);
      if (n == 1) s.endpoints.push_back({x, y});
      if (n >= 3) s.branchpoints.push_back({x, y});
    }
  return s;
}

namespace detail {

// Neighbourhood of p in Zhang-Suen order: P2 = N, P3 = NE, P4 = E, P5 = SE,
// P6 = S, P7 = SW, P8 = W, P9 = NW (stored at indices 0..7).
inline std::array<int, 8> zs_neighbors(const BinaryMask& m, int x, int y) {
  return {m.get_or(x, y - 1, 0) ? 1 : 0,     m.get_or(x + 1, y - 1, 0) ? 1 : 0,
          m.get_or(x + 1, y, 0) ? 1 : 0,     m.get_or(x + 1, y + 1, 0) ? 1 : 0,
          m.get_or(x, y + 1, 0) ? 1 : 0,     m.get_or(x - 1, y + 1, 0) ? 1 : 0,
          m.get_or(x - 1, y, 0) ? 1 : 0,     m.get_or(x - 1, y - 1, 0) ? 1 : 0};
}

// A pixel is simple (deletable without changing 8-connected foreground /
// 4-connected background topology) iff its 8-connectivity number is 1:
// sum over the 4-neighbours k of (~x_k - ~x_k ~x_{k+1} ~x_{k+2}).
inline bool is_simple(const std::array<int, 8>& p) {
  // p indices: 0 N, 1 NE, 2 E, 3 SE, 4 S, 5 SW, 6 W, 7 NW.
  int c = 0;
  for (int k = 0; k < 8; k += 2) {
    const int a = 1 - p[static_cast<std::size_t>(k)];
    const int b = 1 - p[static_cast<std::size_t>((k + 1) % 8)];
    const int d = 1 - p[static_cast<std::size_t>((k + 2) % 8)];
    c += a - a * b * d;
  }
  return c == 1;
}

inline bool zs_candidate(const std::array<int, 8>& p, int pass) {
  int b = 0, a = 0;
  for (int k = 0; k < 8; ++k) {
    b += p[static_cast<std::size_t>(k)];
    a += p[static_cast<std::size_t>(k)] == 0 && p[static_cast<std::size_t>((k + 1) % 8)] == 1;
  }
  if (b < 2 || b > 6 || a != 1) return false;
  const int n = p[0], e = p[2], s = p[4], w = p[6];
  if (pass == 0) return n * e * s == 0 && e * s * w == 0;
  return n * e * w == 0 && n * s * w == 0;
}

inline bool deletable(const BinaryMask& m, int x, int y) {
  const auto p = zs_neighbors(m, x, y);
  int b = 0;
  for (int v : p) b += v;
  return b >= 2 && is_simple(p);
}

inline bool in_full_2x2(const BinaryMask& m, int x, int y) {
  for (int oy = -1; oy <= 0; ++oy)
    for (int ox = -1; ox <= 0; ++ox) {
      bool full = true;
      for (int dy = 0; dy < 2 && full; ++dy)
        for (int dx = 0; dx < 2 && full; ++dx) full = m.get_or(x + ox + dx, y + oy + dy, 0);
      if (full) return true;
    }
  return false;
}

}  // namespace detail

/// Two-subiteration template thinning to a fixpoint. Candidates of each
/// subiteration are selected in parallel with the Zhang-Suen templates and
/// then removed one at a time in raster order, each removal re-checked to be
/// simple in the current mask, so components and holes survive. Line ends are
/// never candidates. Residual 2x2 blocks are then cleared one simple non-end
/// pixel at a time.
inline Skeleton skeletonize(const BinaryMask& mask) {
  BinaryMask s = mask;
  std::vector<Point> candidates;
  bool outer_changed = true;
  while (outer_changed) {
    outer_changed = false;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int pass = 0; pass < 2; ++pass) {
        candidates.clear();
        for (int y = 0; y < s.height(); ++y)
          for (int x = 0; x < s.width(); ++x)
            if (s(x, y) && detail::zs_candidate(detail::zs_neighbors(s, x, y), pass))
              candidates.push_back({x, y});
        for (const auto& p : candidates)
          if (detail::is_simple(detail::zs_neighbors(s, p.x, p.y))) {
            s[p] = 0;
            changed = true;
          }
      }
    }
    bool squares = true;
    while (squares) {
      squares = false;
      for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x)
          if (s(x, y) && detail::in_full_2x2(s, x, y) && detail::deletable(s, x, y)) {
            s(x, y) = 0;
            squares = true;
            outer_changed = true;
          }
    }
  }
  return classify_skeleton(std::move(s));
}

/// Splits a skeleton into maximal simple runs between terminals (end or
/// branch pixels). Runs sharing a terminal both list it; a closed loop
/// without terminals is returned with its first pixel repeated at the end.
/// An isolated pixel is a run of one.
inline std::vector<PixelRun> trace_branches(const Skeleton& skeleton) {
  const auto& m = skeleton.mask;
  std::vector<PixelRun> runs;
  if (m.empty()) return runs;
  Raster<std::int32_t> degree(m.width(), m.height(), 0);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) degree(x, y) = neighbor_count(m, x, y);

  std::unordered_set<std::uint64_t> used;  // undirected pixel-pair edges
  auto edge_key = [&](Point a, Point b) {
    auto ia = static_cast<std::uint64_t>(m.index(a.x, a.y)), ib = static_cast<std::uint64_t>(m.index(b.x, b.y));
    if (ia > ib) std::swap(ia, ib);
    return (ia << 32) | ib;
  };
  BinaryMask visited(m.width(), m.height());
  auto is_terminal = [&](Point p) { return degree[p] != 2; };

  auto walk = [&](Point from, Point to) {
    PixelRun run{from, to};
    used.insert(edge_key(from, to));
    visited[from] = visited[to] = 1;
    Point prev = from, cur = to;
    while (!is_terminal(cur) && !(cur == from && run.size() > 2)) {
      bool advanced = false;
      for (const auto& d : kNeighbors8) {
        const Point next{cur.x + d.x, cur.y + d.y};
        if (next == prev || !m.get_or(next.x, next.y, 0)) continue;
        if (used.contains(edge_key(cur, next))) continue;
        used.insert(edge_key(cur, next));
        run.push_back(next);
        visited[next] = 1;
        prev = cur;
        cur = next;
        advanced = true;
        break;
      }
      if (!advanced) break;
    }
    return run;
  };

  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const Point p{x, y};
      if (!m[p] || !is_terminal(p)) continue;
      if (degree[p] == 0) {
        runs.push_back({p});
        visited[p] = 1;
        continue;
      }
      for (const auto& d : kNeighbors8) {
        const Point q{x + d.x, y + d.y};
        if (!m.get_or(q.x, q.y, 0) || used.contains(edge_key(p, q))) continue;
        runs.push_back(walk(p, q));
      }
    }
  // Whatever is left lies on terminal-free loops.
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const Point p{x, y};
      if (!m[p] || visited[p]) continue;
      for (const auto& d : kNeighbors8) {
        const Point q{x + d.x, y + d.y};
        if (!m.get_or(q.x, q.y, 0) || used.contains(edge_key(p, q))) continue;
        runs.push_back(walk(p, q));
        break;
      }
    }
  return runs;
}

/// Spur removal: runs with a free end and fewer than `min_branch` pixels
/// (branch pixels excluded) are deleted; then `m` pixels are peeled from
/// every end, the new ends are grown back by up to `m` pixels along the
/// spur-free skeleton (3x3 geodesic dilation, m steps), and the result is
/// re-thinned.
inline Skeleton prune(const Skeleton& skeleton, const PruneParams& params) {
  if (params.m < 0 || params.min_branch < 0)
    throw Error(ErrorCode::InvalidParams, "prune parameters must be non-negative");
  if (params.m == 0 && params.min_branch == 0) return skeleton;
  const auto& src = skeleton.mask;
  BinaryMask base = src;

  if (params.min_branch > 0) {
    for (const auto& run : trace_branches(skeleton)) {
      auto deg = [&](Point p) { return neighbor_count(src, p.x, p.y); };
      const bool closed = run.size() > 2 && run.front() == run.back();
      if (closed) continue;
      const bool free_front = deg(run.front()) <= 1, free_back = deg(run.back()) <= 1;
      if (!free_front && !free_back) continue;
      std::size_t length = 0;
      for (const auto& p : run) length += deg(p) < 3;
      if (length >= static_cast<std::size_t>(params.min_branch)) continue;
      for (const auto& p : run)
        if (deg(p) < 3) base[p] = 0;
    }
  }

  BinaryMask peeled = base;
  for (int i = 0; i < params.m; ++i) {
    std::vector<Point> ends;
    for (int y = 0; y < peeled.height(); ++y)
      for (int x = 0; x < peeled.width(); ++x)
        if (peeled(x, y) && neighbor_count(peeled, x, y) == 1) ends.push_back({x, y});
    if (ends.empty()) break;
    for (const auto& p : ends) peeled[p] = 0;
  }

  BinaryMask result = peeled;
  if (params.m > 0) {
    BinaryMask grow(peeled.width(), peeled.height());
    for (int y = 0; y < peeled.height(); ++y)
      for (int x = 0; x < peeled.width(); ++x)
        if (peeled(x, y) && neighbor_count(peeled, x, y) == 1) grow(x, y) = 1;
    const auto se = StructuringElement::square(1);
    for (int i = 0; i < params.m; ++i) {
      grow = dilate(grow, se);
      for (std::size_t k = 0; k < grow.size(); ++k) grow.data()[k] = grow.data()[k] && base.data()[k];
    }
    for (std::size_t k = 0; k < result.size(); ++k)
      result.data()[k] = result.data()[k] || grow.data()[k];
  }
  return skeletonize(result);
}

}  // namespace angio

#endif  // ANGIO_TOPOLOGY_HPP
