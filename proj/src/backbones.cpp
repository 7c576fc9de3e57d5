#include "percap/backbones.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

#include "percap/error.hpp"

namespace percap {

namespace {

// Node ids grouped by lattice cell (CSR over lattice.flat).
struct CellMembers {
  std::vector<std::uint32_t> start;
  std::vector<NodeId> ids;

  std::span<const NodeId> of(std::size_t cell) const {
    return {ids.data() + start[cell], ids.data() + start[cell + 1]};
  }
};

CellMembers group_by_cell(const SchemeLattice& lat, const Deployment& d,
                          std::vector<std::uint32_t>* cell_of = nullptr) {
  const std::size_t cells = static_cast<std::size_t>(lat.rows()) * lat.cols();
  CellMembers m;
  m.start.assign(cells + 1, 0);
  std::vector<std::uint32_t> where(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto [r, c] = lat.cell_of(d[static_cast<NodeId>(i)]);
    where[i] = static_cast<std::uint32_t>(lat.flat(r, c));
    ++m.start[where[i] + 1];
  }
  std::partial_sum(m.start.begin(), m.start.end(), m.start.begin());
  m.ids.resize(d.size());
  std::vector<std::uint32_t> fill(m.start.begin(), m.start.end() - 1);
  for (std::size_t i = 0; i < d.size(); ++i) m.ids[fill[where[i]]++] = static_cast<NodeId>(i);
  if (cell_of) *cell_of = std::move(where);
  return m;
}

std::uint64_t pair_key(NodeId a, NodeId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

double mean_across(const CellPath& p, bool horiz) {
  double s = 0.0;
  for (const auto& [r, c] : p) s += horiz ? r : c;
  return s / static_cast<double>(p.size());
}

}  // namespace

int default_kappa(double p) {
  const double l = std::log(6.0 * (1.0 - p));
  if (!(l < 0.0)) throw ParameterError("no admissible kappa for this p");
  int k = 1;
  while (2.0 + k * l >= 0.0) ++k;
  return k;
}

int HighwaySystem::slab_of(double coord) const {
  const auto it = std::upper_bound(slab_bounds.begin() + 1, slab_bounds.end() - 1, coord);
  return static_cast<int>(it - (slab_bounds.begin() + 1));
}

int HighwaySystem::slice_of(double coord) const {
  const int s = slab_of(coord);
  const double lo = slab_bounds[s], hi = slab_bounds[s + 1];
  const int q = std::clamp(static_cast<int>((coord - lo) / (hi - lo) * per_slab), 0, per_slab - 1);
  return s * per_slab + q;
}

HighwaySystem build_highways(const Deployment& d, const HighwayParams& params,
                             std::uint64_t seed) {
  HighwaySystem hs;
  hs.c = std::sqrt(params.c_squared);
  hs.p = 1.0 - std::exp(-params.c_squared);
  if (!(hs.p > 5.0 / 6.0)) throw ParameterError("highway cells need p > 5/6");
  hs.kappa = params.kappa > 0 ? params.kappa : default_kappa(hs.p);
  if (!(2.0 + hs.kappa * std::log(6.0 * (1.0 - hs.p)) < 0.0))
    throw ParameterError("kappa violates 2 + kappa log(6(1-p)) < 0");

  hs.lattice = SchemeLattice(d.side(), std::sqrt(params.c_squared / d.lambda()),
                             SchemeLattice::kRotated);
  const SchemeLattice& lat = hs.lattice;
  const int M = lat.intervals();
  const BoolGrid grid = open_cells(lat, d);

  const CellMembers members = group_by_cell(lat, d);
  hs.station_of_cell.assign(static_cast<std::size_t>(lat.rows()) * lat.cols(), kNone);
  std::mt19937_64 gen(mix_seed(seed, 0x4877));
  for (std::size_t cell = 0; cell < hs.station_of_cell.size(); ++cell) {
    const auto ids = members.of(cell);
    if (ids.empty()) continue;
    if (!params.central_stations) {
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      hs.station_of_cell[cell] = ids[pick(gen)];
      continue;
    }
    const Point center = lat.cell_center(static_cast<int>(cell / lat.cols()),
                                         static_cast<int>(cell % lat.cols()));
    NodeId best = ids[0];
    for (NodeId v : ids)
      if (distance_sq(d[v], center) < distance_sq(d[best], center)) best = v;
    hs.station_of_cell[cell] = best;
  }

  hs.slab_rows = std::max(1, static_cast<int>(std::ceil(hs.kappa * std::log(std::max(M, 2)))));
  hs.slab_count = std::max(1, (M + 1) / hs.slab_rows);
  // First vertex row of each slab. Rows left over after slab_count full slabs
  // go to the last slab, or are spread evenly over all slabs.
  std::vector<int> first_row(hs.slab_count + 1, M + 1);
  const int extra = (M + 1) - hs.slab_count * hs.slab_rows;
  for (int i = 0; i < hs.slab_count; ++i)
    first_row[i] = i * hs.slab_rows + (params.spread_remainder ? i * extra / hs.slab_count : 0);
  const double spacing = lat.spacing();
  hs.slab_bounds.push_back(0.0);
  for (int i = 1; i < hs.slab_count; ++i) hs.slab_bounds.push_back((first_row[i] - 0.5) * spacing);
  hs.slab_bounds.push_back(d.side());

  std::vector<std::vector<CellPath>> found[2];
  for (int dir = 0; dir < 2; ++dir) {
    const Direction dn = dir == 0 ? Direction::horizontal : Direction::vertical;
    for (int i = 0; i < hs.slab_count; ++i) {
      const int first = first_row[i];
      const int last = first_row[i + 1] - 1;
      auto paths = disjoint_crossing_paths(grid, {2 * first, 2 * last}, dn);
      (dir == 0 ? hs.crossings_h : hs.crossings_v).push_back(static_cast<int>(paths.size()));
      found[dir].push_back(std::move(paths));
    }
  }
  int least = INT32_MAX;
  for (int v : hs.crossings_h) least = std::min(least, v);
  for (int v : hs.crossings_v) least = std::min(least, v);
  hs.per_slab = least;
  hs.eta_est = least / std::log(std::max(M, 2));
  hs.complete = least > 0;
  if (!hs.complete) {
    hs.diagnostic = "a slab has no open crossing";
    return hs;
  }

  for (int dir = 0; dir < 2; ++dir) {
    const bool horiz = dir == 0;
    auto& out = horiz ? hs.horizontal : hs.vertical;
    for (int i = 0; i < hs.slab_count; ++i) {
      auto& paths = found[dir][i];
      std::stable_sort(paths.begin(), paths.end(), [&](const CellPath& a, const CellPath& b) {
        return mean_across(a, horiz) < mean_across(b, horiz);
      });
      const int n_paths = static_cast<int>(paths.size());
      for (int q = 0; q < hs.per_slab; ++q) {
        const int pick = std::min(
            n_paths - 1,
            static_cast<int>((q + 0.5) * n_paths / hs.per_slab));
        Highway h;
        h.dir = horiz ? Direction::horizontal : Direction::vertical;
        h.slab = i;
        h.slice = q;
        h.sites = paths[pick];
        for (std::size_t k = 0; k < h.sites.size(); ++k) {
          const auto [r, c] = h.sites[k];
          if (!lat.is_cell(r, c)) continue;
          const std::size_t cell = lat.flat(r, c);
          h.stations.push_back(hs.station_of_cell[cell]);
          h.station_cells.push_back(static_cast<std::uint32_t>(cell));
          h.station_site.push_back(k);
        }
        out.push_back(std::move(h));
      }
    }
  }

  // First shared lattice vertex along each horizontal highway.
  const std::size_t sites = static_cast<std::size_t>(lat.rows()) * lat.cols();
  std::vector<std::int32_t> v_owner(sites, -1), v_pos(sites, -1);
  std::vector<std::vector<int>> v_before(hs.vertical.size());
  for (std::size_t v = 0; v < hs.vertical.size(); ++v) {
    const Highway& hw = hs.vertical[v];
    int count = 0;
    v_before[v].resize(hw.sites.size());
    for (std::size_t k = 0; k < hw.sites.size(); ++k) {
      const auto [r, c] = hw.sites[k];
      v_before[v][k] = count;
      if (lat.is_cell(r, c)) {
        ++count;
      } else {
        v_owner[lat.flat(r, c)] = static_cast<std::int32_t>(v);
        v_pos[lat.flat(r, c)] = static_cast<std::int32_t>(k);
      }
    }
  }
  hs.crossing_table.assign(hs.horizontal.size() * hs.vertical.size(), {});
  for (std::size_t h = 0; h < hs.horizontal.size(); ++h) {
    const Highway& hw = hs.horizontal[h];
    std::vector<char> seen(hs.vertical.size(), 0);
    int count = 0;
    for (std::size_t k = 0; k < hw.sites.size(); ++k) {
      const auto [r, c] = hw.sites[k];
      if (lat.is_cell(r, c)) {
        ++count;
        continue;
      }
      const std::size_t f = lat.flat(r, c);
      const int v = v_owner[f];
      if (v < 0 || seen[v]) continue;
      seen[v] = 1;
      const int vb = v_before[v][v_pos[f]];
      const int vn = static_cast<int>(hs.vertical[v].stations.size());
      const int hn = static_cast<int>(hw.stations.size());
      HighwayCrossing& x = hs.crossing_table[h * hs.vertical.size() + v];
      x.h_before = count - 1;
      x.h_after = count < hn ? count : -1;
      x.v_before = vb - 1;
      x.v_after = vb < vn ? vb : -1;
    }
  }
  return hs;
}

StationRef ArterialSystem::drain_station(NodeId v) const {
  const std::uint32_t cell = cell_of_node[v];
  if (rank_of_node[v] >= 0) return {cell, static_cast<std::uint32_t>(rank_of_node[v])};
  if (kind == ArterialKind::ordinary) return {cell, 0};
  const int r = static_cast<int>(cell) / lattice.cols(), c = static_cast<int>(cell) % lattice.cols();
  const int r2 = r + 1 < lattice.rows() ? r + 1 : r - 1;
  return {static_cast<std::uint32_t>(lattice.flat(r2, c)),
          static_cast<std::uint32_t>(pa_cell_of_node[v])};
}

StationRef ArterialSystem::deliver_station(NodeId v) const {
  const std::uint32_t cell = cell_of_node[v];
  if (rank_of_node[v] >= 0) return {cell, static_cast<std::uint32_t>(rank_of_node[v])};
  if (kind == ArterialKind::ordinary) return {cell, 0};
  const int r = static_cast<int>(cell) / lattice.cols(), c = static_cast<int>(cell) % lattice.cols();
  const int c2 = c + 1 < lattice.cols() ? c + 1 : c - 1;
  return {static_cast<std::uint32_t>(lattice.flat(r, c2)),
          static_cast<std::uint32_t>(pa_cell_of_node[v])};
}

std::vector<std::vector<NodeId>> ArterialSystem::horizontal_roads() const {
  std::vector<std::vector<NodeId>> roads;
  for (int r = 0; r < lattice.rows(); ++r)
    for (int q = 0; q < per_cell; ++q) {
      std::vector<NodeId> road;
      for (int c = 0; c < lattice.cols(); ++c) road.push_back(station(r, c, q));
      roads.push_back(std::move(road));
    }
  return roads;
}

std::vector<std::vector<NodeId>> ArterialSystem::vertical_roads() const {
  std::vector<std::vector<NodeId>> roads;
  for (int c = 0; c < lattice.cols(); ++c)
    for (int q = 0; q < per_cell; ++q) {
      std::vector<NodeId> road;
      for (int r = 0; r < lattice.rows(); ++r) road.push_back(station(r, c, q));
      roads.push_back(std::move(road));
    }
  return roads;
}

ArterialSystem build_arterial(const Deployment& d, ArterialKind kind, std::uint64_t seed) {
  const double ln = std::log(d.n());
  if (!(ln > 0.0)) throw ParameterError("arterial roads need n > 1");
  ArterialSystem ar;
  ar.kind = kind;
  ar.lattice = SchemeLattice(d.side(), 3.0 * std::sqrt(ln / d.lambda()), 0.0);
  const SchemeLattice& lat = ar.lattice;
  const CellMembers members = group_by_cell(lat, d, &ar.cell_of_node);
  const std::size_t cells = static_cast<std::size_t>(lat.rows()) * lat.cols();

  const double lo = 4.5 * ln, hi = 18.0 * ln;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const double k = static_cast<double>(members.of(cell).size());
    if (k < lo || k > hi) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "AR-cell (%zu,%zu) holds %.0f nodes, outside [%.1f, %.1f]",
                    cell / lat.cols(), cell % lat.cols(), k, lo, hi);
      throw ConstructionError(buf);
    }
  }
  if (kind == ArterialKind::parallel && (lat.rows() < 2 || lat.cols() < 2))
    throw ConstructionError("parallel roads need at least 2x2 AR-cells");

  ar.per_cell = kind == ArterialKind::ordinary ? 1 : static_cast<int>(std::ceil(2.0 * ln));
  ar.station_cell_side = 2.0 * std::sqrt(ln / d.lambda());
  ar.stations.assign(cells * ar.per_cell, kNone);
  ar.rank_of_node.assign(d.size(), -1);
  std::mt19937_64 gen(mix_seed(seed, 0xA27));
  const double b = lat.cell_side();
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto ids = members.of(cell);
    std::vector<NodeId> chosen;
    if (kind == ArterialKind::ordinary) {
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      chosen.push_back(ids[pick(gen)]);
    } else {
      const Point center = lat.cell_center(static_cast<int>(cell / lat.cols()),
                                           static_cast<int>(cell % lat.cols()));
      const double half = ar.station_cell_side / 2.0;
      std::vector<NodeId> inside;
      for (NodeId v : ids) {
        const Point p = d[v];
        if (std::abs(p.x - center.x) <= half && std::abs(p.y - center.y) <= half)
          inside.push_back(v);
      }
      if (static_cast<int>(inside.size()) < ar.per_cell) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "station-cell of AR-cell (%zu,%zu) holds %zu < %d nodes",
                      cell / lat.cols(), cell % lat.cols(), inside.size(), ar.per_cell);
        throw ConstructionError(buf);
      }
      std::shuffle(inside.begin(), inside.end(), gen);
      chosen.assign(inside.begin(), inside.begin() + ar.per_cell);
      std::sort(chosen.begin(), chosen.end());
    }
    for (int q = 0; q < ar.per_cell; ++q) {
      ar.stations[cell * ar.per_cell + q] = chosen[q];
      ar.rank_of_node[chosen[q]] = q;
    }
  }

  if (kind == ArterialKind::parallel) {
    // PA-cells: per_cell sub-rectangles in floor(sqrt(per_cell)) bands.
    const int s = ar.per_cell;
    const int bands = std::max(1, static_cast<int>(std::floor(std::sqrt(s))));
    std::vector<int> band_cols(bands), band_start(bands);
    for (int t = 0, acc = 0; t < bands; ++t) {
      band_cols[t] = s / bands + (t < s % bands ? 1 : 0);
      band_start[t] = acc;
      acc += band_cols[t];
    }
    ar.pa_cell_of_node.assign(d.size(), -1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::uint32_t cell = ar.cell_of_node[i];
      const double fx = d[static_cast<NodeId>(i)].x / b - static_cast<double>(cell % lat.cols());
      const double fy = d[static_cast<NodeId>(i)].y / b - static_cast<double>(cell / lat.cols());
      const int t = std::clamp(static_cast<int>(fy * bands), 0, bands - 1);
      const int q = std::clamp(static_cast<int>(fx * band_cols[t]), 0, band_cols[t] - 1);
      ar.pa_cell_of_node[i] = band_start[t] + q;
    }
  }
  return ar;
}

AccessPathSet build_access(const Deployment& d, const ArterialSystem& ar) {
  AccessPathSet acc;
  acc.kind = ar.kind;
  const SchemeLattice& lat = ar.lattice;
  const auto& pts = d.points();
  std::vector<PendingLink> drain, deliver;
  if (ar.kind == ArterialKind::ordinary) {
    const auto color = tdma_color(lat, 4);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const NodeId v = static_cast<NodeId>(i);
      if (ar.is_station(v)) continue;
      const std::uint32_t cell = ar.cell_of_node[v];
      const NodeId s = ar.station(ar.drain_station(v));
      drain.push_back({v, s, color[cell], cell});
      drain.push_back({s, v, color[cell], cell});
    }
    // Link order within a cell is node order, so a sort by cell keeps it stable.
    std::stable_sort(drain.begin(), drain.end(),
                     [](const PendingLink& a, const PendingLink& b) { return a.cell < b.cell; });
    const int min_sub = static_cast<int>(std::ceil(8.0 * std::log(d.n())));
    acc.draining = build_schedule(4, drain, pts, std::max(1, min_sub), &lat);
    acc.delivering = TdmaSchedule(1, 1);
    return acc;
  }
  const int rows = lat.rows(), cols = lat.cols();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const NodeId v = static_cast<NodeId>(i);
    if (ar.is_station(v)) continue;
    const std::uint32_t cell = ar.cell_of_node[v];
    const int r = static_cast<int>(cell) / cols, c = static_cast<int>(cell) % cols;
    drain.push_back({v, ar.station(ar.drain_station(v)), r == rows - 1 ? 2 : r % 2, cell});
    // Stations sit in the central station-cell of their AR cell.
    deliver.push_back({ar.station(ar.deliver_station(v)), v, c == cols - 1 ? 2 : c % 2, cell,
                       ar.station_cell_side / 2.0});
  }
  auto by_cell = [](const PendingLink& a, const PendingLink& b) { return a.cell < b.cell; };
  std::stable_sort(drain.begin(), drain.end(), by_cell);
  std::stable_sort(deliver.begin(), deliver.end(), by_cell);
  acc.draining = build_schedule(3, drain, pts, 1, &lat);
  acc.delivering = build_schedule(3, deliver, pts, 1, &lat);
  return acc;
}

const char* layer_name(Layer l) {
  switch (l) {
    case Layer::access: return "access";
    case Layer::ar: return "ar";
    default: return "highway";
  }
}

BackboneSystem::BackboneSystem(const Deployment& d, ArterialSystem ar, AccessPathSet access,
                               std::optional<HighwaySystem> hs)
    : d_(&d), ar_(std::move(ar)), access_(std::move(access)), hs_(std::move(hs)) {
  if (hs_ && !hs_->complete) throw ConstructionError("highway system incomplete: " + hs_->diagnostic);
  build_roads();
  build_highway_links();
  build_interchanges();
  finish_offsets();
}

Layer BackboneSystem::layer_of_schedule(int s) const {
  switch (s) {
    case kDrain:
    case kDeliver: return Layer::access;
    case kRoads:
    case kJunctions:
    case kTransfers: return Layer::ar;
    default: return Layer::highway;
  }
}

void BackboneSystem::build_roads() {
  const SchemeLattice& lat = ar_.lattice;
  const int period = ar_.kind == ArterialKind::ordinary ? 9 : 4;
  const auto color = tdma_color(lat, period);
  const double extent = ar_.kind == ArterialKind::parallel ? ar_.station_cell_side / 2.0 : -1.0;
  std::vector<PendingLink> links;
  const int dr[4] = {0, 0, 1, -1};
  const int dc[4] = {1, -1, 0, 0};
  for (int r = 0; r < lat.rows(); ++r) {
    for (int c = 0; c < lat.cols(); ++c) {
      const std::uint32_t cell = static_cast<std::uint32_t>(lat.flat(r, c));
      for (int k = 0; k < 4; ++k) {
        const int r2 = r + dr[k], c2 = c + dc[k];
        if (r2 < 0 || c2 < 0 || r2 >= lat.rows() || c2 >= lat.cols()) continue;
        for (int q = 0; q < ar_.per_cell; ++q)
          links.push_back({ar_.station(r, c, q), ar_.station(r2, c2, q), color[cell], cell,
                           extent});
      }
    }
  }
  roads_ = build_schedule(period, links, d_->points(), 1, &lat);
}

void BackboneSystem::build_highway_links() {
  if (!hs_) {
    highway_links_ = TdmaSchedule(1, 1);
    return;
  }
  const auto color = tdma_color(hs_->lattice, 9);
  std::vector<PendingLink> links;
  std::unordered_set<std::uint64_t> seen;
  auto add = [&](NodeId tx, NodeId rx, std::uint32_t cell) {
    if (seen.insert(pair_key(tx, rx)).second) links.push_back({tx, rx, color[cell], cell});
  };
  for (const auto* group : {&hs_->horizontal, &hs_->vertical}) {
    for (const Highway& h : *group) {
      for (std::size_t i = 0; i + 1 < h.stations.size(); ++i) {
        add(h.stations[i], h.stations[i + 1], h.station_cells[i]);
        add(h.stations[i + 1], h.stations[i], h.station_cells[i + 1]);
      }
    }
  }
  std::stable_sort(links.begin(), links.end(),
                   [](const PendingLink& a, const PendingLink& b) { return a.cell < b.cell; });
  highway_links_ = build_schedule(9, links, d_->points(), 1, &hs_->lattice);
}

void BackboneSystem::build_interchanges() {
  const SchemeLattice& lat = ar_.lattice;
  const auto color = tdma_color(lat, 9);
  std::vector<PendingLink> links;
  std::unordered_set<std::uint64_t> seen;
  auto add = [&](NodeId tx, NodeId rx) {
    if (tx == rx || !seen.insert(pair_key(tx, rx)).second) return;
    const std::uint32_t cell = ar_.cell_of_node[tx];
    PendingLink l{tx, rx, color[cell], cell};
    l.exclusive = true;
    links.push_back(l);
  };

  // Rank transfers run one at a time per cell: the stations share a small
  // station-cell, so concurrent transfers there would drown each other.
  std::vector<PendingLink> transfers;
  if (ar_.kind == ArterialKind::parallel) {
    const std::size_t cells = static_cast<std::size_t>(lat.rows()) * lat.cols();
    for (std::size_t cell = 0; cell < cells; ++cell)
      for (int a = 0; a < ar_.per_cell; ++a)
        for (int b = 0; b < ar_.per_cell; ++b)
          if (a != b) {
            PendingLink l{ar_.stations[cell * ar_.per_cell + a],
                          ar_.stations[cell * ar_.per_cell + b], color[cell], cell};
            l.tx_extent = ar_.station_cell_side / 2.0;
            l.exclusive = true;
            transfers.push_back(l);
          }
  }
  transfers_ = transfers.empty() ? TdmaSchedule(1, 1)
                                 : build_schedule(9, transfers, d_->points(), 1, &lat);

  std::vector<PendingLink> turn_links;
  if (hs_) {
    const auto& pts = d_->points();
    const std::size_t nh = hs_->horizontal.size();
    const std::size_t total = nh + hs_->vertical.size();
    hw_cells_.assign(total, {});
    for (std::size_t g = 0; g < total; ++g) {
      const Highway& h = g < nh ? hs_->horizontal[g] : hs_->vertical[g - nh];
      // Station indices of h grouped by arterial cell.
      std::vector<std::pair<std::uint32_t, int>> by_cell;
      for (std::size_t i = 0; i < h.stations.size(); ++i)
        by_cell.emplace_back(ar_.cell_of_node[h.stations[i]], static_cast<int>(i));
      std::sort(by_cell.begin(), by_cell.end());
      for (std::size_t lo = 0; lo < by_cell.size();) {
        std::size_t hi = lo;
        while (hi < by_cell.size() && by_cell[hi].first == by_cell[lo].first) ++hi;
        const std::uint32_t cell = by_cell[lo].first;
        hw_cells_[g].push_back(cell);
        for (int q = 0; q < ar_.per_cell; ++q) {
          const NodeId s = ar_.stations[cell * ar_.per_cell + q];
          int best = by_cell[lo].second;
          double best_d = distance_sq(pts[s], pts[h.stations[best]]);
          for (std::size_t k = lo + 1; k < hi; ++k) {
            const double dd = distance_sq(pts[s], pts[h.stations[by_cell[k].second]]);
            if (dd < best_d) best_d = dd, best = by_cell[k].second;
          }
          junction_index_[(static_cast<std::uint64_t>(g) << 32) | s] = best;
          add(s, h.stations[best]);
          add(h.stations[best], s);
        }
        lo = hi;
      }
    }

    const auto hcolor = tdma_color(hs_->lattice, 9);
    std::unordered_set<std::uint64_t> turn_seen;
    for (std::size_t h = 0; h < nh; ++h) {
      const Highway& hh = hs_->horizontal[h];
      for (std::size_t v = 0; v < hs_->vertical.size(); ++v) {
        const Highway& vv = hs_->vertical[v];
        const HighwayCrossing& x = hs_->crossing(static_cast<int>(h), static_cast<int>(v));
        for (int a : {x.h_before, x.h_after}) {
          if (a < 0) continue;
          for (int b : {x.v_before, x.v_after}) {
            if (b < 0) continue;
            const NodeId tx = hh.stations[a], rx = vv.stations[b];
            if (tx == rx || !turn_seen.insert(pair_key(tx, rx)).second) continue;
            const std::uint32_t cell = hh.station_cells[a];
            turn_links.push_back({tx, rx, hcolor[cell], cell});
          }
        }
      }
    }
  }
  auto by_cell = [](const PendingLink& a, const PendingLink& b) { return a.cell < b.cell; };
  std::stable_sort(links.begin(), links.end(), by_cell);
  std::stable_sort(turn_links.begin(), turn_links.end(), by_cell);
  junctions_ = links.empty() ? TdmaSchedule(1, 1) : build_schedule(9, links, d_->points(), 1, &lat);
  turns_ = turn_links.empty() ? TdmaSchedule(1, 1) : build_schedule(9, turn_links, d_->points(), 1, &hs_->lattice);
}

void BackboneSystem::finish_offsets() {
  scheds_[kDrain] = &access_.draining;
  scheds_[kDeliver] = &access_.delivering;
  scheds_[kRoads] = &roads_;
  scheds_[kHighways] = &highway_links_;
  scheds_[kJunctions] = &junctions_;
  scheds_[kTurns] = &turns_;
  scheds_[kTransfers] = &transfers_;
  offset_[0] = 0;
  for (int s = 0; s < kSchedCount; ++s) offset_[s + 1] = offset_[s] + scheds_[s]->size();
}

std::pair<int, std::size_t> BackboneSystem::locate(std::uint32_t link) const {
  int s = 0;
  while (s + 1 < kSchedCount && link >= offset_[s + 1]) ++s;
  return {s, link - offset_[s]};
}

std::uint32_t BackboneSystem::find_link(int sched, NodeId tx, NodeId rx) const {
  const auto local = scheds_[sched]->find(tx, rx);
  return local ? link_id(sched, *local) : kNone;
}

int BackboneSystem::junction(int g, NodeId ar_station) const {
  const auto it = junction_index_.find((static_cast<std::uint64_t>(g) << 32) | ar_station);
  return it == junction_index_.end() ? -1 : it->second;
}

BackboneAssignment assign_backbones(const HighwaySystem* hs, const ArterialSystem& ar,
                                    const Deployment& d, NodeId u, NodeId v) {
  BackboneAssignment a;
  const StationRef su = ar.drain_station(u), sv = ar.deliver_station(v);
  const int cols = ar.lattice.cols();
  a.ar_vertical = (su.cell % cols) * ar.per_cell + su.rank;
  a.ar_horizontal = (sv.cell / cols) * ar.per_cell + sv.rank;
  if (hs) {
    a.highway_horizontal = hs->horizontal_for(d[u]);
    a.highway_vertical = hs->vertical_for(d[v]);
  }
  return a;
}

void write_backbone_csv(std::ostream& out, const BackboneSystem& sys) {
  out << "system,road_id,hop_index,station_node_index\n";
  auto dump = [&](const char* name, const std::vector<std::vector<NodeId>>& roads) {
    for (std::size_t r = 0; r < roads.size(); ++r)
      for (std::size_t k = 0; k < roads[r].size(); ++k)
        out << name << ',' << r << ',' << k << ',' << roads[r][k] << '\n';
  };
  const bool ord = sys.arterial().kind == ArterialKind::ordinary;
  dump(ord ? "o-ar-h" : "p-ar-h", sys.arterial().horizontal_roads());
  dump(ord ? "o-ar-v" : "p-ar-v", sys.arterial().vertical_roads());
  if (sys.has_highways()) {
    std::vector<std::vector<NodeId>> h, v;
    for (const Highway& x : sys.highways().horizontal) h.push_back(x.stations);
    for (const Highway& x : sys.highways().vertical) v.push_back(x.stations);
    dump("highway-h", h);
    dump("highway-v", v);
  }
}

void write_assignment_csv(std::ostream& out, const BackboneSystem& sys) {
  out << "node,ar_station,slice,highway_id\n";
  const Deployment& d = sys.deployment();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const NodeId v = static_cast<NodeId>(i);
    const NodeId s = sys.arterial().station(sys.arterial().drain_station(v));
    int slice = -1, hw = -1;
    if (sys.has_highways()) {
      slice = sys.highways().slice_of(d[v].y);
      hw = sys.highways().horizontal_for(d[v]);
    }
    out << v << ',' << s << ',' << slice << ',' << hw << '\n';
  }
}

}  // namespace percap
