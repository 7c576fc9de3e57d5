#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "percap/geometry.hpp"
#include "percap/spatial.hpp"

namespace percap {

enum class Attenuation { dense, extended };

// placed: co-scheduled transmitters at their node positions. worst_case:
// transmitters in other cells moved to the point of their cell nearest the
// receiver; needs a schedule built with its lattice.
enum class Interference { placed, worst_case };

struct ChannelParams {
  double P = 1.0;
  double N0 = 1.0;
  double B = 1.0;
  double alpha = 3.0;
  Attenuation mode = Attenuation::extended;
  Interference interference = Interference::worst_case;

  void validate() const;
};

double attenuation(const ChannelParams& params, double dist);

// B log2(1 + SINR) with interference from every point in interferers.
double link_rate(const ChannelParams& params, Point tx, Point rx,
                 std::span<const Point> interferers);

struct Link {
  NodeId tx = 0;
  NodeId rx = 0;
};

struct SchedulingSet {
  int slot = 0;
  int subslot = 0;
  std::vector<Link> links;

  bool valid() const;
};

struct ScheduledLink {
  NodeId tx = 0;
  NodeId rx = 0;
  Point tx_pos;
  Point rx_pos;
  int slot = 0;
  int subslot = 0;
  std::uint32_t tx_cell = UINT32_MAX;  // lattice.flat, set when the schedule has a lattice
  std::uint32_t rx_cell = UINT32_MAX;
  // Half-side of the box around the tx cell center known to hold tx
  // (axis-aligned lattices); negative means anywhere in the cell.
  double tx_extent = -1.0;
};

class TdmaSchedule {
 public:
  TdmaSchedule() = default;
  TdmaSchedule(int period, int subslots_per_slot);

  int period() const { return period_; }
  int subslots_per_slot() const { return subslots_; }
  std::size_t size() const { return links_.size(); }
  const ScheduledLink& link(std::size_t i) const { return links_[i]; }
  const std::vector<ScheduledLink>& links() const { return links_; }

  std::size_t add(const ScheduledLink& l);
  // Cells of later-added links are derived from their positions.
  void set_lattice(const SchemeLattice& lat) { lattice_ = lat; }
  const SchemeLattice* lattice() const { return lattice_ ? &*lattice_ : nullptr; }
  std::optional<std::size_t> find(NodeId tx, NodeId rx) const;

  // Local ids of every link sharing (slot, subslot) with link i, i included.
  const std::vector<std::uint32_t>& group_of(std::size_t i) const;
  std::vector<SchedulingSet> scheduling_sets() const;

 private:
  std::uint64_t group_key(int slot, int subslot) const {
    return static_cast<std::uint64_t>(slot) * 1000003ULL + static_cast<std::uint64_t>(subslot);
  }

  int period_ = 1;
  int subslots_ = 1;
  std::optional<SchemeLattice> lattice_;
  std::vector<ScheduledLink> links_;
  std::unordered_map<std::uint64_t, std::size_t> by_pair_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> groups_;
};

// Periodic sqrt(k) x sqrt(k) coloring over lattice coordinates; indexed by
// lat.flat(r, c), -1 on grid sites that are not cells.
std::vector<int> tdma_color(const SchemeLattice& lat, int k);

struct PendingLink {
  NodeId tx = 0;
  NodeId rx = 0;
  int slot = 0;
  std::uint64_t cell = 0;  // subslots are assigned per (slot, cell)
  double tx_extent = -1.0;
  bool exclusive = false;  // shares its (slot, cell, subslot) with no other link
};

// Greedy subslot assignment: within one (slot, cell) no node is used twice in
// the same subslot, and exclusive links get a subslot to themselves.
// subslots_per_slot is max(min_subslots, subslots needed).
TdmaSchedule build_schedule(int period, std::span<const PendingLink> links,
                            std::span<const Point> positions, int min_subslots = 1,
                            const SchemeLattice* lattice = nullptr);

// Per-link rate under its co-scheduled interferers, time-shared over
// period * subslots_per_slot.
double sustained_rate(const ChannelParams& params, const TdmaSchedule& sched,
                      std::size_t link);

void write_rate_csv(std::ostream& out, const ChannelParams& params,
                    const TdmaSchedule& sched);

}  // namespace percap
