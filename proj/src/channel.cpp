#include "percap/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "percap/error.hpp"

namespace percap {

void ChannelParams::validate() const {
  if (!(alpha > 2.0)) throw ParameterError("alpha must exceed 2");
  if (!(P > 0.0) || !(N0 > 0.0) || !(B > 0.0))
    throw ParameterError("P, N0 and B must be positive");
}

double attenuation(const ChannelParams& params, double dist) {
  const double l = std::pow(dist, -params.alpha);
  return params.mode == Attenuation::extended ? std::min(1.0, l) : l;
}

double link_rate(const ChannelParams& params, Point tx, Point rx,
                 std::span<const Point> interferers) {
  const double d = distance(tx, rx);
  if (!(d > 0.0)) throw ParameterError("zero-length link");
  double noise = params.N0;
  for (const Point& x : interferers) noise += params.P * attenuation(params, distance(x, rx));
  const double sinr = params.P * attenuation(params, d) / noise;
  return params.B * std::log2(1.0 + sinr);
}

bool SchedulingSet::valid() const {
  std::unordered_set<NodeId> tx;
  for (const Link& l : links)
    if (!tx.insert(l.tx).second) return false;
  for (const Link& l : links)
    if (tx.count(l.rx)) return false;
  return true;
}

TdmaSchedule::TdmaSchedule(int period, int subslots_per_slot)
    : period_(period), subslots_(subslots_per_slot) {
  if (period < 1 || subslots_per_slot < 1)
    throw ParameterError("schedule period and subslots must be >= 1");
}

std::size_t TdmaSchedule::add(const ScheduledLink& l) {
  if (l.slot < 0 || l.slot >= period_ || l.subslot < 0 || l.subslot >= subslots_)
    throw ParameterError("slot or subslot outside the schedule");
  const std::uint64_t key = (static_cast<std::uint64_t>(l.tx) << 32) | l.rx;
  if (by_pair_.count(key)) throw ParameterError("link scheduled twice");
  const std::size_t id = links_.size();
  links_.push_back(l);
  if (lattice_) {
    const auto [tr, tc] = lattice_->cell_of(l.tx_pos);
    const auto [rr, rc] = lattice_->cell_of(l.rx_pos);
    links_.back().tx_cell = static_cast<std::uint32_t>(lattice_->flat(tr, tc));
    links_.back().rx_cell = static_cast<std::uint32_t>(lattice_->flat(rr, rc));
  }
  by_pair_.emplace(key, id);
  groups_[group_key(l.slot, l.subslot)].push_back(static_cast<std::uint32_t>(id));
  return id;
}

std::optional<std::size_t> TdmaSchedule::find(NodeId tx, NodeId rx) const {
  const auto it = by_pair_.find((static_cast<std::uint64_t>(tx) << 32) | rx);
  if (it == by_pair_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::uint32_t>& TdmaSchedule::group_of(std::size_t i) const {
  return groups_.at(group_key(links_[i].slot, links_[i].subslot));
}

std::vector<SchedulingSet> TdmaSchedule::scheduling_sets() const {
  std::vector<SchedulingSet> out;
  for (int s = 0; s < period_; ++s) {
    for (int t = 0; t < subslots_; ++t) {
      const auto it = groups_.find(group_key(s, t));
      if (it == groups_.end()) continue;
      SchedulingSet set{s, t, {}};
      for (std::uint32_t id : it->second) set.links.push_back({links_[id].tx, links_[id].rx});
      out.push_back(std::move(set));
    }
  }
  return out;
}

std::vector<int> tdma_color(const SchemeLattice& lat, int k) {
  const int q = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k))));
  if (k < 1 || q * q != k) throw ParameterError("TDMA period must be a perfect square");
  std::vector<int> color(static_cast<std::size_t>(lat.rows()) * lat.cols(), -1);
  for (int r = 0; r < lat.rows(); ++r) {
    for (int c = 0; c < lat.cols(); ++c) {
      if (!lat.is_cell(r, c)) continue;
      const auto [i, j] = lat.lattice_coords(r, c);
      color[lat.flat(r, c)] = (i % q) * q + (j % q);
    }
  }
  return color;
}

TdmaSchedule build_schedule(int period, std::span<const PendingLink> links,
                            std::span<const Point> positions, int min_subslots,
                            const SchemeLattice* lattice) {
  // Bitmasks of used subslots per node, one map per (slot, cell). Key UINT32_MAX
  // holds every used subslot, one below it those taken by exclusive links.
  constexpr NodeId kAny = UINT32_MAX, kExcl = UINT32_MAX - 1;
  std::unordered_map<std::uint64_t, std::unordered_map<NodeId, std::vector<std::uint64_t>>> used;
  std::vector<int> subslot(links.size());
  int needed = 1;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const PendingLink& l = links[i];
    auto& g = used[l.cell * 64 + static_cast<std::uint64_t>(l.slot)];
    auto& mt = g[l.tx];
    auto& mr = g[l.rx];
    auto& ma = g[kAny];
    auto& me = g[kExcl];
    const std::size_t words = std::max({mt.size(), mr.size(), ma.size()}) + 1;
    for (auto* m : {&mt, &mr, &ma, &me}) m->resize(words, 0);
    int s = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t busy = l.exclusive ? ma[w] : (mt[w] | mr[w] | me[w]);
      if (busy != ~0ULL) {
        s = static_cast<int>(w * 64 + std::countr_one(busy));
        break;
      }
    }
    const std::uint64_t bit = 1ULL << (s % 64);
    mt[s / 64] |= bit;
    mr[s / 64] |= bit;
    ma[s / 64] |= bit;
    if (l.exclusive) me[s / 64] |= bit;
    subslot[i] = s;
    needed = std::max(needed, s + 1);
  }
TdmaSchedule sched(period, std::max(needed, min_subslots));
  if (lattice) sched.set_lattice(*lattice);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const PendingLink& l = links[i];
    ScheduledLink s{l.tx, l.rx, positions[l.tx], positions[l.rx], l.slot, subslot[i]};
    s.tx_extent = l.tx_extent;
    sched.add(s);
  }
  return sched;
}

double sustained_rate(const ChannelParams& params, const TdmaSchedule& sched,
                      std::size_t link) {
  if (link >= sched.size()) throw ParameterError("link is not scheduled");
  const ScheduledLink& l = sched.link(link);
  const double d = distance(l.tx_pos, l.rx_pos);
  if (!(d > 0.0)) throw ParameterError("zero-length link");
  const SchemeLattice* lat =
      params.interference == Interference::worst_case ? sched.lattice() : nullptr;
  double noise = params.N0;
  for (std::uint32_t j : sched.group_of(link)) {
    if (j == link) continue;
    const ScheduledLink& o = sched.link(j);
    Point at = o.tx_pos;
    if (lat && o.tx_cell != l.tx_cell && o.tx_cell != l.rx_cell) {
      const int cols = lat->cols();
      const int r = static_cast<int>(o.tx_cell) / cols, c = static_cast<int>(o.tx_cell) % cols;
      at = lat->nearest_in_cell(r, c, l.rx_pos);
      if (o.tx_extent >= 0.0 && !lat->rotated()) {
        const Point ctr = lat->cell_center(r, c);
        at.x = std::clamp(at.x, ctr.x - o.tx_extent, ctr.x + o.tx_extent);
        at.y = std::clamp(at.y, ctr.y - o.tx_extent, ctr.y + o.tx_extent);
      }
    }
    noise += params.P * attenuation(params, distance(at, l.rx_pos));
  }
  const double rate = params.B * std::log2(1.0 + params.P * attenuation(params, d) / noise);
  return rate / (static_cast<double>(sched.period()) * sched.subslots_per_slot());
}

void write_rate_csv(std::ostream& out, const ChannelParams& params,
                    const TdmaSchedule& sched) {
  out << "slot,subslot,tx,rx,rate\n";
  char buf[128];
  for (std::size_t i = 0; i < sched.size(); ++i) {
    const ScheduledLink& l = sched.link(i);
    std::snprintf(buf, sizeof buf, "%d,%d,%u,%u,%.10g\n", l.slot, l.subslot, l.tx, l.rx,
                  sustained_rate(params, sched, i));
    out << buf;
  }
}

}  // namespace percap
