#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "percap/spatial.hpp"

namespace percap {

struct ClusterLabeling {
  double radius = 0.0;
  double gamma = 0.0;
  double giant_fraction = 0.5;
  // Cluster ids are dense and numbered by their lowest member index.
  std::vector<std::uint32_t> cluster_of;
  std::vector<std::uint32_t> sizes;
  std::optional<std::uint32_t> giant_id;

  std::size_t largest() const;
  std::size_t num_clusters() const { return sizes.size(); }
};

struct ExteriorStats {
  std::vector<std::pair<NodeId, double>> distances;
  double max_distance = 0.0;
  double scaled_max = 0.0;
};

// Union-find over the geometric graph with an edge iff distance <= r.
ClusterLabeling cluster(const Deployment& d, double r, double giant_fraction = 0.5);

ExteriorStats exterior_stats(const Deployment& d, const ClusterLabeling& cl);

bool connectivity_radius_check(const Deployment& d, double r);

struct BoolGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  BoolGrid() = default;
  BoolGrid(int r, int c, bool value = false)
      : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, value ? 1 : 0) {}
  bool at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c] != 0; }
  void set(int r, int c, bool v) { cells[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }
  std::size_t count() const;
};

// Occupancy per cell. For a rotated lattice the grid is the doubled bond
// layout of SchemeLattice: vertex sites are open, unused sites closed.
BoolGrid open_cells(const SchemeLattice& lat, const Deployment& d);

enum class Direction { horizontal, vertical };

struct CellRange {
  int first = 0;
  int last = 0;  // inclusive
};

using CellPath = std::vector<std::pair<int, int>>;  // (row, col)

// Vertex-disjoint open crossings confined to the slab: left-right through a
// row range, or bottom-top through a column range. The result is maximal,
// found greedily from the outer edge of the slab inward.
std::vector<CellPath> disjoint_crossing_paths(const BoolGrid& grid, CellRange slab,
                                              Direction dir);

}  // namespace percap
