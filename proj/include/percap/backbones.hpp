#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "percap/channel.hpp"
#include "percap/percolation.hpp"
#include "percap/spatial.hpp"

namespace percap {

inline constexpr std::uint32_t kNone = UINT32_MAX;

struct HighwayParams {
  double c_squared = 3.5835189384561100;  // 2 ln 6, so p = 35/36
  int kappa = 0;                          // 0 picks the smallest admissible value
  bool central_stations = false;          // node nearest the cell center, else uniform
  bool spread_remainder = false;          // leftover rows spread over all slabs, else all in the last
};

// Smallest integer kappa with 2 + kappa log(6(1-p)) < 0.
int default_kappa(double p);

struct Highway {
  Direction dir = Direction::horizontal;
  int slab = 0;
  int slice = 0;
  CellPath sites;                 // doubled-grid path, vertex sites included
  std::vector<NodeId> stations;   // one per bond cell on the path, in order
  std::vector<std::uint32_t> station_cells;  // lattice.flat of each station's cell
  std::vector<std::size_t> station_site;     // index into sites
};

// Where highway h (horizontal) and v (vertical) meet: station indices on
// either side of the first shared lattice vertex along h (-1 if absent).
struct HighwayCrossing {
  int h_before = -1;
  int h_after = -1;
  int v_before = -1;
  int v_after = -1;
};

class HighwaySystem {
 public:
  SchemeLattice lattice;
  double c = 0.0;
  double p = 0.0;
  int kappa = 0;
  int slab_rows = 0;  // minimum lattice vertex rows per slab
  int slab_count = 0;
  int per_slab = 0;   // highways kept per slab and direction
  double eta_est = 0.0;
  bool complete = false;
  std::string diagnostic;
  std::vector<int> crossings_h;  // crossing count per horizontal slab
  std::vector<int> crossings_v;
  std::vector<double> slab_bounds;  // slab_count + 1 coordinates, shared by both directions
  std::vector<Highway> horizontal;  // index = slab * per_slab + slice
  std::vector<Highway> vertical;
  std::vector<NodeId> station_of_cell;  // by lattice.flat, kNone when closed

  int slab_of(double coord) const;
  int slice_of(double coord) const;  // global slice index
  int horizontal_for(Point p) const { return slice_of(p.y); }
  int vertical_for(Point p) const { return slice_of(p.x); }
  const HighwayCrossing& crossing(int h, int v) const {
    return crossing_table[static_cast<std::size_t>(h) * vertical.size() + v];
  }

  std::vector<HighwayCrossing> crossing_table;  // horizontal-major
};

HighwaySystem build_highways(const Deployment& d, const HighwayParams& params,
                             std::uint64_t seed);

enum class ArterialKind { ordinary, parallel };

struct StationRef {
  std::uint32_t cell = 0;
  std::uint32_t rank = 0;
};

class ArterialSystem {
 public:
  ArterialKind kind = ArterialKind::ordinary;
  SchemeLattice lattice;
  int per_cell = 1;
  double station_cell_side = 0.0;
  std::vector<NodeId> stations;              // cell * per_cell + rank
  std::vector<std::uint32_t> cell_of_node;   // lattice.flat
  std::vector<std::int32_t> rank_of_node;    // station rank, -1 for other nodes
  std::vector<std::int32_t> pa_cell_of_node; // parallel only

  NodeId station(int row, int col, int rank) const {
    return stations[(lattice.flat(row, col)) * per_cell + rank];
  }
  NodeId station(StationRef s) const { return stations[s.cell * per_cell + s.rank]; }
  bool is_station(NodeId v) const { return rank_of_node[v] >= 0; }
  StationRef drain_station(NodeId v) const;
  StationRef deliver_station(NodeId v) const;
  std::vector<std::vector<NodeId>> horizontal_roads() const;  // row * per_cell + rank
  std::vector<std::vector<NodeId>> vertical_roads() const;    // col * per_cell + rank
};

ArterialSystem build_arterial(const Deployment& d, ArterialKind kind, std::uint64_t seed);

struct AccessPathSet {
  ArterialKind kind = ArterialKind::ordinary;
  // Ordinary access uses one schedule for both directions; parallel access
  // schedules draining and delivering separately.
  TdmaSchedule draining;
  TdmaSchedule delivering;
};

AccessPathSet build_access(const Deployment& d, const ArterialSystem& ar);

enum class Layer : std::uint8_t { access, ar, highway };
const char* layer_name(Layer l);

// Every link the routing schemes may use, each under exactly one schedule.
class BackboneSystem {
 public:
  enum Sched : int {
    kDrain = 0,
    kDeliver,
    kRoads,
    kHighways,
    kJunctions,  // AR station <-> highway station
    kTurns,      // horizontal highway -> vertical highway
    kTransfers,  // parallel AR station -> another rank in the same cell
    kSchedCount
  };

  BackboneSystem(const Deployment& d, ArterialSystem ar, AccessPathSet access,
                 std::optional<HighwaySystem> hs);
  BackboneSystem(const BackboneSystem&) = delete;
  BackboneSystem& operator=(const BackboneSystem&) = delete;

  const Deployment& deployment() const { return *d_; }
  const ArterialSystem& arterial() const { return ar_; }
  const AccessPathSet& access() const { return access_; }
  bool has_highways() const { return hs_.has_value(); }
  const HighwaySystem& highways() const { return *hs_; }

  const TdmaSchedule& schedule(int s) const { return *scheds_[s]; }
  Layer layer_of_schedule(int s) const;
  std::size_t link_count() const { return offset_[kSchedCount]; }
  std::uint32_t link_id(int sched, std::size_t local) const {
    return static_cast<std::uint32_t>(offset_[sched] + local);
  }
  std::pair<int, std::size_t> locate(std::uint32_t link) const;
  std::uint32_t find_link(int sched, NodeId tx, NodeId rx) const;  // kNone if absent
  Layer layer_of(std::uint32_t link) const { return layer_of_schedule(locate(link).first); }

  // Station path index on highway g (horizontal ids first, then vertical)
  // joined to the given arterial station, or -1.
  int junction(int g, NodeId ar_station) const;
  // Arterial cells (lattice.flat) holding stations of highway g, ascending.
  const std::vector<std::uint32_t>& highway_cells(int g) const { return hw_cells_[g]; }

 private:
  void build_roads();
  void build_highway_links();
  void build_interchanges();
  void finish_offsets();

  const Deployment* d_;
  ArterialSystem ar_;
  AccessPathSet access_;
  std::optional<HighwaySystem> hs_;
  TdmaSchedule roads_, highway_links_, junctions_, turns_, transfers_;
  const TdmaSchedule* scheds_[kSchedCount] = {};
  std::size_t offset_[kSchedCount + 1] = {};
  std::vector<std::vector<std::uint32_t>> hw_cells_;
  std::unordered_map<std::uint64_t, int> junction_index_;
};

struct BackboneAssignment {
  std::uint32_t ar_vertical = 0;   // column * per_cell + rank of u's road
  int highway_horizontal = -1;
  int highway_vertical = -1;
  std::uint32_t ar_horizontal = 0; // row * per_cell + rank of v's road
};

BackboneAssignment assign_backbones(const HighwaySystem* hs, const ArterialSystem& ar,
                                    const Deployment& d, NodeId u, NodeId v);

void write_backbone_csv(std::ostream& out, const BackboneSystem& sys);
void write_assignment_csv(std::ostream& out, const BackboneSystem& sys);

}  // namespace percap
