#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "percap/geometry.hpp"

namespace percap {

// Uniform bucket grid over [0, side]^2. Keeps its own bucket-ordered copy of
// the points so queries touch contiguous memory.
class GridIndex {
 public:
  GridIndex() = default;
  GridIndex(std::span<const Point> pts, double side, double bucket_side);

  std::size_t size() const { return ids_.size(); }
  double bucket_side() const { return bucket_; }

  // f(id, dist_sq) for every point with distance <= r, in bucket order.
  template <class F>
  void for_each_within(Point p, double r, F&& f) const;

  // Ids with distance <= r, ascending.
  std::vector<NodeId> within(Point p, double r) const;

  // Nearest point accepted by pred; ties go to the lowest id. Stops early
  // once no point closer than stop_dist_sq can remain.
  template <class Pred>
  std::optional<NodeId> nearest_if(Point p, Pred&& pred,
                                   double stop_dist_sq = -1.0) const;

  std::optional<NodeId> nearest(Point p) const {
    return nearest_if(p, [](NodeId) { return true; });
  }

 private:
  int coord(double v) const {
    int c = static_cast<int>(v / bucket_);
    return std::clamp(c, 0, dim_ - 1);
  }

  double side_ = 0.0;
  double bucket_ = 1.0;
  int dim_ = 0;
  std::vector<std::uint32_t> start_;
  std::vector<NodeId> ids_;
  std::vector<Point> pts_;
};

class Deployment {
 public:
  Deployment() = default;

  // Poisson(n) points, i.i.d. uniform over [0, sqrt(n/lambda)]^2.
  static Deployment sample(double n, double lambda, std::uint64_t seed);

  // Wraps given points; all must lie in [0, sqrt(n/lambda)]^2.
  static Deployment from_points(double n, double lambda, std::vector<Point> pts,
                                std::uint64_t seed = 0);

  static Deployment read_csv(std::istream& in);
  void write_csv(std::ostream& out) const;

  double n() const { return n_; }
  double lambda() const { return lambda_; }
  double side() const { return side_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Point>& points() const { return points_; }
  Point operator[](NodeId i) const { return points_[i]; }
  const GridIndex& grid() const { return grid_; }

 private:
  void build_index();

  double n_ = 0.0;
  double lambda_ = 1.0;
  double side_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<Point> points_;
  GridIndex grid_;
};

NodeId nearest_node(const Deployment& d, Point p);

// Axis-aligned (theta = 0) or pi/4-rotated square cells over the region.
//
// Axis-aligned: rows = cols = max(1, floor(side / cell_side)); cells are
// stretched uniformly so they tile the region exactly.
//
// Rotated: the rotated squares are the bonds of an axis-aligned lattice with
// M = max(1, floor(side / (sqrt2 * cell_side))) intervals per side; each square
// has one bond as its diagonal. Cells are indexed on the doubled grid of size
// (2M+1)^2: (even row, odd col) are horizontal bonds, (odd row, even col) are
// vertical bonds, (even, even) are lattice vertices and (odd, odd) are unused.
class SchemeLattice {
 public:
  static constexpr double kRotated = 0.78539816339744830962;

  SchemeLattice() = default;
  SchemeLattice(double region_side, double cell_side, double theta);

  bool rotated() const { return rotated_; }
  double region_side() const { return side_; }
  double cell_side() const { return cell_; }  // effective, after stretching
  double theta() const { return rotated_ ? kRotated : 0.0; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int intervals() const { return intervals_; }
  double spacing() const { return spacing_; }  // bond length when rotated

  bool is_cell(int r, int c) const;
  std::size_t cell_count() const;
  std::pair<int, int> cell_of(Point p) const;
  Point cell_center(int r, int c) const;
  bool contains(int r, int c, Point p) const;
  // Point of cell (r, c) closest to p; boundary cells are not clipped.
  Point nearest_in_cell(int r, int c, Point p) const;
  // Coordinates along the cell axes; used for TDMA coloring.
  std::pair<int, int> lattice_coords(int r, int c) const;
  std::size_t flat(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }

 private:
  bool rotated_ = false;
  double side_ = 0.0;
  double cell_ = 0.0;
  double spacing_ = 0.0;
  int rows_ = 0;
  int cols_ = 0;
  int intervals_ = 0;
};

struct Edge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double length = 0.0;
};

struct EdgeList {
  std::vector<Edge> edges;
  double total_length = 0.0;
};

// Exact Euclidean minimum spanning tree.
EdgeList emst(std::span<const Point> pts);

// Mean EMST length over K uniform sets of set_size points in the region of d.
double emst_length_statistic(const Deployment& d, int K, int set_size,
                             std::uint64_t seed);

template <class F>
void GridIndex::for_each_within(Point p, double r, F&& f) const {
  if (ids_.empty()) return;
  const double r2 = r * r;
  const int x0 = coord(p.x - r), x1 = coord(p.x + r);
  const int y0 = coord(p.y - r), y1 = coord(p.y + r);
  for (int by = y0; by <= y1; ++by) {
    for (int bx = x0; bx <= x1; ++bx) {
      const std::size_t b = static_cast<std::size_t>(by) * dim_ + bx;
      for (std::uint32_t k = start_[b]; k < start_[b + 1]; ++k) {
        const double d2 = distance_sq(p, pts_[k]);
        if (d2 <= r2) f(ids_[k], d2);
      }
    }
  }
}

template <class Pred>
std::optional<NodeId> GridIndex::nearest_if(Point p, Pred&& pred,
                                            double stop_dist_sq) const {
  if (ids_.empty()) return std::nullopt;
  const int cx = coord(p.x), cy = coord(p.y);
  double best = std::numeric_limits<double>::infinity();
  NodeId best_id = 0;
  bool found = false;
  auto scan = [&](int bx, int by) {
    if (bx < 0 || by < 0 || bx >= dim_ || by >= dim_) return;
    const std::size_t b = static_cast<std::size_t>(by) * dim_ + bx;
    for (std::uint32_t k = start_[b]; k < start_[b + 1]; ++k) {
      const double d2 = distance_sq(p, pts_[k]);
      if (d2 > best || (d2 == best && ids_[k] > best_id)) continue;
      if (!pred(ids_[k])) continue;
      best = d2;
      best_id = ids_[k];
      found = true;
    }
  };
  for (int ring = 0; ring < dim_; ++ring) {
    if (ring == 0) {
      scan(cx, cy);
    } else {
      for (int dx = -ring; dx <= ring; ++dx) {
        scan(cx + dx, cy - ring);
        scan(cx + dx, cy + ring);
      }
      for (int dy = -ring + 1; dy <= ring - 1; ++dy) {
        scan(cx - ring, cy + dy);
        scan(cx + ring, cy + dy);
      }
    }
    // Anything in ring+1 or beyond is at least ring*bucket away.
    const double reach = ring * bucket_;
    if (found && best < reach * reach) break;
    if (stop_dist_sq >= 0.0 && stop_dist_sq < reach * reach) break;
  }
  if (!found) return std::nullopt;
  return best_id;
}

}  // namespace percap
