#pragma once

// Independent brute-force references used by the tests. None of these call
// into the library beyond its plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "percap/geometry.hpp"

namespace oracle {

using percap::Point;

inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// O(k^2) Prim over the complete graph; returns the total length.
inline double prim_length(std::span<const Point> pts) {
  const std::size_t k = pts.size();
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  std::vector<char> in(k, 0);
  best[0] = 0.0;
  double total = 0.0;
  for (std::size_t it = 0; it < k; ++it) {
    std::size_t u = k;
    for (std::size_t i = 0; i < k; ++i)
      if (!in[i] && (u == k || best[i] < best[u])) u = i;
    in[u] = 1;
    total += best[u];
    for (std::size_t i = 0; i < k; ++i)
      if (!in[i]) best[i] = std::min(best[i], dist(pts[u], pts[i]));
  }
  return total;
}

// Minimum over every (k-1)-edge subset of the complete graph that spans.
inline double exhaustive_mst_length(std::span<const Point> pts) {
  const int k = static_cast<int>(pts.size());
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) edges.emplace_back(i, j);
  const int m = static_cast<int>(edges.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(k - 1);
  for (int i = 0; i < k - 1; ++i) pick[i] = i;
  for (;;) {
    std::vector<int> comp(k);
    for (int i = 0; i < k; ++i) comp[i] = i;
    double len = 0.0;
    for (int e : pick) {
      auto [a, b] = edges[e];
      len += dist(pts[a], pts[b]);
      const int ca = comp[a], cb = comp[b];
      if (ca != cb)
        for (int& c : comp)
          if (c == cb) c = ca;
    }
    if (std::all_of(comp.begin(), comp.end(), [&](int c) { return c == comp[0]; }))
      best = std::min(best, len);
    int i = k - 2;
    while (i >= 0 && pick[i] == m - (k - 1) + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k - 1; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// Component label per point of the r-disk graph, by BFS over all pairs.
inline std::vector<int> disk_components(std::span<const Point> pts, double r) {
  const std::size_t k = pts.size();
  std::vector<int> comp(k, -1);
  int next = 0;
  for (std::size_t s = 0; s < k; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = next;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < k; ++v)
        if (comp[v] < 0 && dist(pts[u], pts[v]) <= r) {
          comp[v] = next;
          q.push(v);
        }
    }
    ++next;
  }
  return comp;
}

inline std::size_t nearest_scan(std::span<const Point> pts, Point p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (dist(pts[i], p) < dist(pts[best], p)) best = i;
  return best;
}

// Mean over trials of the maximum bin load when m balls go into n bins.
inline double mean_max_load(std::int64_t m, std::int64_t n, int trials, std::uint64_t seed) {
  std::minstd_rand gen(static_cast<std::uint32_t>(seed * 2654435761u + 1));
  std::vector<int> bins(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::fill(bins.begin(), bins.end(), 0);
    int mx = 0;
    for (std::int64_t b = 0; b < m; ++b) {
      const auto i = static_cast<std::size_t>((static_cast<std::uint64_t>(gen()) * n) >> 31);
      mx = std::max(mx, ++bins[std::min<std::size_t>(i, bins.size() - 1)]);
    }
    sum += mx;
  }
  return sum / trials;
}

// Least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// Connected and acyclic check for an edge list over k vertices.
template <class Edges>
bool is_spanning_tree(const Edges& edges, std::size_t k) {
  if (edges.size() + 1 != k) return false;
  std::vector<std::vector<std::uint32_t>> adj(k);
  for (const auto& e : edges) {
    if (e.u >= k || e.v >= k) return false;
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<char> seen(k, 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u])
      if (!seen[v]) seen[v] = 1, ++count, stack.push_back(v);
  }
  return count == k;
}

}  // namespace oracle
