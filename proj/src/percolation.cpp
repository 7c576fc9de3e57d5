#include "percap/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "percap/error.hpp"
#include "percap/union_find.hpp"

namespace percap {

std::size_t ClusterLabeling::largest() const {
  if (sizes.empty()) return 0;
  return *std::max_element(sizes.begin(), sizes.end());
}

ClusterLabeling cluster(const Deployment& d, double r, double giant_fraction) {
  if (!(r > 0.0)) throw ParameterError("cluster radius must be positive");
  const auto& pts = d.points();
  const std::size_t k = pts.size();
  ClusterLabeling cl;
  cl.radius = r;
  cl.gamma = d.lambda() * std::numbers::pi * r * r;
  cl.giant_fraction = giant_fraction;

  UnionFind uf(k);
  if (k > 1) {
    GridIndex grid(pts, d.side(), r);
    for (std::size_t i = 0; i < k; ++i) {
      grid.for_each_within(pts[i], r, [&](NodeId j, double) {
        if (j > i) uf.unite(i, j);
      });
    }
  }
  cl.cluster_of.resize(k);
  std::vector<std::uint32_t> label(k, UINT32_MAX);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t root = uf.find(i);
    if (label[root] == UINT32_MAX) {
      label[root] = static_cast<std::uint32_t>(cl.sizes.size());
      cl.sizes.push_back(0);
    }
    cl.cluster_of[i] = label[root];
    ++cl.sizes[label[root]];
  }
  if (k > 0) {
    const auto it = std::max_element(cl.sizes.begin(), cl.sizes.end());
    if (static_cast<double>(*it) >= giant_fraction * static_cast<double>(k))
      cl.giant_id = static_cast<std::uint32_t>(it - cl.sizes.begin());
  }
  return cl;
}

ExteriorStats exterior_stats(const Deployment& d, const ClusterLabeling& cl) {
  if (!cl.giant_id) throw StateError("exterior_stats needs a giant cluster");
  const auto& pts = d.points();
  std::vector<Point> giant;
  std::vector<NodeId> giant_ids;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (cl.cluster_of[i] == *cl.giant_id) {
      giant.push_back(pts[i]);
      giant_ids.push_back(static_cast<NodeId>(i));
    }
  }
  GridIndex grid(giant, d.side(),
                 d.side() / std::max(1.0, std::floor(std::sqrt(giant.size() / 2.0))));
  ExteriorStats st;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (cl.cluster_of[i] == *cl.giant_id) continue;
    const NodeId j = *grid.nearest(pts[i]);
    const double dist = distance(pts[i], giant[j]);
    st.distances.emplace_back(static_cast<NodeId>(i), dist);
    st.max_distance = std::max(st.max_distance, dist);
  }
  st.scaled_max = d.lambda() * cl.radius * st.max_distance / std::log(d.n());
  return st;
}

bool connectivity_radius_check(const Deployment& d, double r) {
  return cluster(d, r).num_clusters() <= 1;
}

std::size_t BoolGrid::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
}

BoolGrid open_cells(const SchemeLattice& lat, const Deployment& d) {
  BoolGrid g(lat.rows(), lat.cols());
  if (lat.rotated()) {
    for (int r = 0; r < lat.rows(); r += 2)
      for (int c = 0; c < lat.cols(); c += 2) g.set(r, c, true);
  }
  for (const Point& p : d.points()) {
    const auto [r, c] = lat.cell_of(p);
    g.set(r, c, true);
  }
  return g;
}

std::vector<CellPath> disjoint_crossing_paths(const BoolGrid& grid, CellRange slab,
                                              Direction dir) {
  const bool horiz = dir == Direction::horizontal;
  const int across_n = horiz ? grid.rows : grid.cols;
  const int along_n = horiz ? grid.cols : grid.rows;
  if (slab.first < 0 || slab.last >= across_n || slab.first > slab.last)
    throw ParameterError("slab range outside the grid");
  std::vector<CellPath> paths;
  if (along_n == 0) return paths;

  const int h = slab.last - slab.first + 1;
  // Local coordinates: s across the slab (0..h-1), a along the crossing.
  auto open = [&](int s, int a) {
    const int x = slab.first + s;
    return horiz ? grid.at(x, a) : grid.at(a, x);
  };
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(h) * along_n, 0);
  auto idx = [&](int s, int a) { return static_cast<std::size_t>(s) * along_n + a; };
  // Outer side first, then forward, inward, backward.
  const int ds[4] = {1, 0, -1, 0};
  const int da[4] = {0, 1, 0, -1};

  struct Frame {
    int s, a, next;
  };
  std::vector<Frame> stack;
  for (int s0 = h - 1; s0 >= 0; --s0) {
    if (!open(s0, 0) || seen[idx(s0, 0)]) continue;
    stack.clear();
    stack.push_back({s0, 0, 0});
    seen[idx(s0, 0)] = 1;
    bool done = false;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.a == along_n - 1) {
        done = true;
        break;
      }
      if (f.next == 4) {
        stack.pop_back();
        continue;
      }
      const int k = f.next++;
      const int s = f.s + ds[k], a = f.a + da[k];
      if (s < 0 || s >= h || a < 0 || a >= along_n) continue;
      if (seen[idx(s, a)] || !open(s, a)) continue;
      seen[idx(s, a)] = 1;
      stack.push_back({s, a, 0});
    }
    if (!done) continue;
    CellPath p;
    p.reserve(stack.size());
    for (const Frame& f : stack) {
      const int x = slab.first + f.s;
      p.emplace_back(horiz ? x : f.a, horiz ? f.a : x);
    }
    paths.push_back(std::move(p));
  }
  return paths;
}

}  // namespace percap
