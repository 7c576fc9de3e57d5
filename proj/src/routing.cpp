#include "percap/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <thread>
#include <unordered_map>

#include "percap/error.hpp"

namespace percap {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::o: return "o";
    case Scheme::p: return "p";
    case Scheme::oh: return "o&h";
    default: return "p&h";
  }
}

Scheme parse_scheme(const std::string& s) {
  if (s == "o") return Scheme::o;
  if (s == "p") return Scheme::p;
  if (s == "o&h" || s == "oh") return Scheme::oh;
  if (s == "p&h" || s == "ph") return Scheme::ph;
  throw ParameterError("unknown scheme '" + s + "'");
}

std::vector<MulticastSession> generate_sessions(const Deployment& d, int n_s, int n_d,
                                                std::uint64_t seed) {
  if (d.empty()) throw StateError("empty deployment");
  const double n = static_cast<double>(d.size());
  if (n_d < 1 || n_d > n - 1) throw ParameterError("n_d must lie in [1, n-1]");
  if (n_s < 2 || n_s > std::max(n, d.n())) throw ParameterError("n_s must lie in (1, n]");
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(d.size() - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<MulticastSession> out(static_cast<std::size_t>(n_s));
  for (int k = 0; k < n_s; ++k) {
    MulticastSession& s = out[k];
    s.index = k;
    s.source = node(gen);
    s.candidate_points.resize(static_cast<std::size_t>(n_d));
    for (Point& p : s.candidate_points) {
      p.x = unit(gen) * d.side();
      p.y = unit(gen) * d.side();
      s.destinations.push_back(nearest_node(d, p));
    }
    std::sort(s.destinations.begin(), s.destinations.end());
    s.destinations.erase(std::unique(s.destinations.begin(), s.destinations.end()),
                         s.destinations.end());
    s.spanning_set.push_back(s.source);
    for (NodeId v : s.destinations)
      if (v != s.source) s.spanning_set.push_back(v);
  }
  return out;
}

namespace {

// Boustrophedon order through `strips` bands; transpose swaps the axes.
double snake(std::span<const Point> pts, double side, int strips, bool transpose,
             std::vector<std::uint32_t>& order) {
  const std::size_t k = pts.size();
  auto along = [&](std::uint32_t i) { return transpose ? pts[i].y : pts[i].x; };
  auto across = [&](std::uint32_t i) { return transpose ? pts[i].x : pts[i].y; };
  auto band = [&](std::uint32_t i) {
    return std::clamp(static_cast<int>(across(i) / side * strips), 0, strips - 1);
  };
  order.resize(k);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const int ba = band(a), bb = band(b);
    if (ba != bb) return ba < bb;
    const double xa = along(a), xb = along(b);
    if (xa != xb) return ba % 2 == 0 ? xa < xb : xa > xb;
    return a < b;
  });
  double len = 0.0;
  for (std::size_t i = 1; i < k; ++i) len += distance(pts[order[i - 1]], pts[order[i]]);
  return len;
}

}  // namespace

EdgeList est(std::span<const Point> pts, double side) {
  if (pts.size() < 2) throw ParameterError("est needs at least 2 points");
  if (!(side > 0.0)) throw ParameterError("est needs a positive region side");
  const int max_strips = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(pts.size())))) + 1;
  std::vector<std::uint32_t> order, best;
  double best_len = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= max_strips; ++s) {
    for (bool t : {false, true}) {
      const double len = snake(pts, side, s, t, order);
      if (len < best_len) {
        best_len = len;
        best = order;
      }
    }
  }
  if (best_len > est_bound(pts.size(), side)) return emst(pts);
  EdgeList out;
  for (std::size_t i = 1; i < best.size(); ++i) {
    const double l = distance(pts[best[i - 1]], pts[best[i]]);
    out.edges.push_back({best[i - 1], best[i], l});
    out.total_length += l;
  }
  return out;
}

namespace {

class PathBuilder {
 public:
  PathBuilder(const BackboneSystem& bs, std::vector<std::uint32_t>& out)
      : bs_(bs), ar_(bs.arterial()), out_(out) {}

  void hop(int sched, NodeId tx, NodeId rx) {
    if (tx == rx) return;
    const std::uint32_t id = bs_.find_link(sched, tx, rx);
    if (id == kNone) throw ConstructionError("route needs a link that was not constructed");
    out_.push_back(id);
  }

  // Along the roads of one rank: vertical first, then horizontal.
  void ar_path(int r0, int c0, int r1, int c1, int rank, bool vertical_first) {
    auto step_rows = [&](int c, int from, int to) {
      const int dir = to > from ? 1 : -1;
      for (int r = from; r != to; r += dir)
        hop(BackboneSystem::kRoads, ar_.station(r, c, rank), ar_.station(r + dir, c, rank));
    };
    auto step_cols = [&](int r, int from, int to) {
      const int dir = to > from ? 1 : -1;
      for (int c = from; c != to; c += dir)
        hop(BackboneSystem::kRoads, ar_.station(r, c, rank), ar_.station(r, c + dir, rank));
    };
    if (vertical_first) {
      step_rows(c0, r0, r1);
      step_cols(r1, c0, c1);
    } else {
      step_cols(r0, c0, c1);
      step_rows(c1, r0, r1);
    }
  }

  void along_highway(const Highway& h, int from, int to) {
    const int dir = to > from ? 1 : -1;
    for (int i = from; i != to; i += dir)
      hop(BackboneSystem::kHighways, h.stations[i], h.stations[i + dir]);
  }

 private:
  const BackboneSystem& bs_;
  const ArterialSystem& ar_;
  std::vector<std::uint32_t>& out_;
};

int pick_side(int before, int after, bool prefer_before) {
  if (before < 0) return after;
  if (after < 0) return before;
  return prefer_before ? before : after;
}

}  // namespace

std::vector<std::uint32_t> route_pair(NodeId u, NodeId v, Scheme scheme,
                                      const BackboneSystem& bs) {
  const ArterialSystem& ar = bs.arterial();
  if (ar.kind != arterial_of(scheme))
    throw StateError(std::string("scheme ") + scheme_name(scheme) +
                     " needs the other arterial system");
  if (uses_highways(scheme) && !bs.has_highways())
    throw StateError(std::string("scheme ") + scheme_name(scheme) + " needs highways");

  std::vector<std::uint32_t> out;
  if (u == v) return out;
  PathBuilder pb(bs, out);
  const int cols = ar.lattice.cols();
  const int deliver = ar.kind == ArterialKind::ordinary ? BackboneSystem::kDrain
                                                        : BackboneSystem::kDeliver;
  const StationRef su = ar.drain_station(u), sv = ar.deliver_station(v);
  const NodeId nu = ar.station(su), nv = ar.station(sv);
  const int ru = static_cast<int>(su.cell) / cols, cu = static_cast<int>(su.cell) % cols;
  const int rv = static_cast<int>(sv.cell) / cols, cv = static_cast<int>(sv.cell) % cols;
  const int qu = static_cast<int>(su.rank), qv = static_cast<int>(sv.rank);

  pb.hop(BackboneSystem::kDrain, u, nu);
  if (!uses_highways(scheme)) {
    pb.ar_path(ru, cu, rv, cu, qu, true);
    if (qu != qv)
      pb.hop(BackboneSystem::kTransfers, ar.station(rv, cu, qu), ar.station(rv, cu, qv));
    pb.ar_path(rv, cu, rv, cv, qv, false);
    pb.hop(deliver, nv, v);
    return out;
  }

  const HighwaySystem& hs = bs.highways();
  const Deployment& d = bs.deployment();
  const int h = hs.horizontal_for(d[u]);
  const int vi = hs.vertical_for(d[v]);
  const int gv = static_cast<int>(hs.horizontal.size()) + vi;
  const Highway& hh = hs.horizontal[h];
  const Highway& vh = hs.vertical[vi];

  // Entry: the highway's AR cell closest to u's column, then row.
  std::uint32_t entry = 0, exit = 0;
  {
    std::pair<int, int> best{INT32_MAX, INT32_MAX};
    for (std::uint32_t cell : bs.highway_cells(h)) {
      const int r = static_cast<int>(cell) / cols, c = static_cast<int>(cell) % cols;
      const std::pair<int, int> key{std::abs(c - cu), std::abs(r - ru)};
      if (key < best) best = key, entry = cell;
    }
    best = {INT32_MAX, INT32_MAX};
    for (std::uint32_t cell : bs.highway_cells(gv)) {
      const int r = static_cast<int>(cell) / cols, c = static_cast<int>(cell) % cols;
      const std::pair<int, int> key{std::abs(r - rv), std::abs(c - cv)};
      if (key < best) best = key, exit = cell;
    }
  }
  const int re = static_cast<int>(entry) / cols, ce = static_cast<int>(entry) % cols;
  const int rx = static_cast<int>(exit) / cols, cx = static_cast<int>(exit) % cols;
  const NodeId entry_station = ar.station(re, ce, qu);
  const NodeId exit_station = ar.station(rx, cx, qv);
  const int j_in = bs.junction(h, entry_station);
  const int j_out = bs.junction(gv, exit_station);
  if (j_in < 0 || j_out < 0) throw ConstructionError("missing highway junction");

  const HighwayCrossing& x = hs.crossing(h, vi);
  if ((x.h_before < 0 && x.h_after < 0) || (x.v_before < 0 && x.v_after < 0))
    throw ConstructionError("highways do not cross");
  const int h_turn = pick_side(x.h_before, x.h_after, j_in <= x.h_before);
  const int v_turn = pick_side(x.v_before, x.v_after, j_out <= x.v_before);

  pb.ar_path(ru, cu, re, ce, qu, true);
  pb.hop(BackboneSystem::kJunctions, entry_station, hh.stations[j_in]);
  pb.along_highway(hh, j_in, h_turn);
  pb.hop(BackboneSystem::kTurns, hh.stations[h_turn], vh.stations[v_turn]);
  pb.along_highway(vh, v_turn, j_out);
  pb.hop(BackboneSystem::kJunctions, vh.stations[j_out], exit_station);
  pb.ar_path(rx, cx, rv, cv, qv, true);
  pb.hop(deliver, nv, v);
  return out;
}

namespace {

struct Arc {
  NodeId tx;
  NodeId rx;
  std::uint32_t link;
};

// Breadth-first spanning subgraph from the source over the merged links,
// pruned to the paths that reach destinations.
std::vector<std::uint32_t> prune(std::vector<std::uint32_t>& links, const BackboneSystem& bs,
                                 NodeId source, std::span<const NodeId> targets) {
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  std::vector<Arc> arcs;
  arcs.reserve(links.size());
  for (std::uint32_t id : links) {
    const auto [s, local] = bs.locate(id);
    const ScheduledLink& l = bs.schedule(s).link(local);
    arcs.push_back({l.tx, l.rx, id});
  }
  std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
    return a.tx != b.tx ? a.tx < b.tx : a.link < b.link;
  });
  std::unordered_map<NodeId, std::uint32_t> parent;  // node -> arc index, kNone at root
  parent.reserve(arcs.size() * 2 + 1);
  parent.emplace(source, kNone);
  std::queue<NodeId> frontier;
  frontier.push(source);
  while (!frontier.empty()) {
    const NodeId x = frontier.front();
    frontier.pop();
    auto it = std::lower_bound(arcs.begin(), arcs.end(), x,
                               [](const Arc& a, NodeId n) { return a.tx < n; });
    for (; it != arcs.end() && it->tx == x; ++it) {
      if (parent.emplace(it->rx, static_cast<std::uint32_t>(it - arcs.begin())).second)
        frontier.push(it->rx);
    }
  }
  std::vector<char> keep(arcs.size(), 0);
  for (NodeId t : targets) {
    auto it = parent.find(t);
    if (it == parent.end()) throw ConstructionError("destination unreachable in routing tree");
    while (it->second != kNone && !keep[it->second]) {
      keep[it->second] = 1;
      it = parent.find(arcs[it->second].tx);
    }
  }
  std::vector<std::uint32_t> kept;
  for (std::size_t i = 0; i < arcs.size(); ++i)
    if (keep[i]) kept.push_back(arcs[i].link);
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

RoutingTree route(const MulticastSession& s, Scheme scheme, const BackboneSystem& bs,
                  TreeKind kind) {
  RoutingTree tree;
  tree.session = s.index;
  tree.scheme = scheme;
  const std::size_t k = s.spanning_set.size();
  if (k < 2) return tree;
  const Deployment& d = bs.deployment();
  std::vector<Point> pts(k);
  for (std::size_t i = 0; i < k; ++i) pts[i] = d[s.spanning_set[i]];
  const EdgeList skeleton = kind == TreeKind::est ? est(pts, d.side()) : emst(pts);

  // Orient skeleton edges away from the source (index 0).
  std::vector<std::vector<std::uint32_t>> adj(k);
  for (const Edge& e : skeleton.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<std::uint32_t> links;
  std::vector<char> seen(k, 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const std::uint32_t a = stack.back();
    stack.pop_back();
    for (std::uint32_t b : adj[a]) {
      if (seen[b]) continue;
      seen[b] = 1;
      stack.push_back(b);
      const auto seg = route_pair(s.spanning_set[a], s.spanning_set[b], scheme, bs);
      links.insert(links.end(), seg.begin(), seg.end());
    }
  }
  const std::span<const NodeId> targets(s.spanning_set.data() + 1, k - 1);
  for (std::uint32_t id : prune(links, bs, s.source, targets)) {
    const auto [sch, local] = bs.locate(id);
    const ScheduledLink& l = bs.schedule(sch).link(local);
    tree.hops.push_back({l.tx, l.rx, id, bs.layer_of_schedule(sch)});
  }
  return tree;
}

LoadMap::LoadMap(const BackboneSystem& bs)
    : bs_(&bs),
      link_(bs.link_count(), 0),
      ar_(bs.deployment().size(), 0),
      hw_(bs.deployment().size(), 0) {}

void LoadMap::add(const RoutingTree& t) {
  std::vector<NodeId> ar_nodes, hw_nodes;
  const ArterialSystem& ar = bs_->arterial();
  for (const Hop& h : t.hops) {
    ++link_[h.link];
    if (h.layer == Layer::ar) {
      for (NodeId x : {h.tx, h.rx})
        if (ar.is_station(x)) ar_nodes.push_back(x);
    } else if (h.layer == Layer::highway) {
      const auto sched = bs_->locate(h.link).first;
      if (sched == BackboneSystem::kHighways || sched == BackboneSystem::kTurns) {
        hw_nodes.push_back(h.tx);
        hw_nodes.push_back(h.rx);
      }
    }
  }
  for (auto* v : {&ar_nodes, &hw_nodes}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  for (NodeId x : ar_nodes) ++ar_[x];
  for (NodeId x : hw_nodes) ++hw_[x];
}

void LoadMap::merge(const LoadMap& other) {
  for (std::size_t i = 0; i < link_.size(); ++i) link_[i] += other.link_[i];
  for (std::size_t i = 0; i < ar_.size(); ++i) ar_[i] += other.ar_[i];
  for (std::size_t i = 0; i < hw_.size(); ++i) hw_[i] += other.hw_[i];
}

std::uint32_t LoadMap::max_link() const {
  return link_.empty() ? 0 : *std::max_element(link_.begin(), link_.end());
}
std::uint32_t LoadMap::max_ar_station() const {
  return ar_.empty() ? 0 : *std::max_element(ar_.begin(), ar_.end());
}
std::uint32_t LoadMap::max_highway_station() const {
  return hw_.empty() ? 0 : *std::max_element(hw_.begin(), hw_.end());
}

RateTable::RateTable(const BackboneSystem& bs, const ChannelParams& params)
    : bs_(&bs), params_(params), rate_(bs.link_count(), -1.0) {
  params_.validate();
}

double RateTable::rate(std::uint32_t link) {
  double& r = rate_[link];
  if (r < 0.0) {
    const auto [s, local] = bs_->locate(link);
    r = sustained_rate(params_, bs_->schedule(s), local);
  }
  return r;
}

void RateTable::precompute(std::span<const std::uint32_t> links, int threads) {
  threads = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      // Each slot of rate_ is written by exactly one thread.
      for (std::size_t i = t; i < links.size(); i += threads) {
        const std::uint32_t id = links[i];
        if (rate_[id] >= 0.0) continue;
        const auto [s, local] = bs_->locate(id);
        rate_[id] = sustained_rate(params_, bs_->schedule(s), local);
      }
    });
  }
  for (auto& th : pool) th.join();
}

ThroughputResult measure_throughput(std::span<const RoutingTree> trees, const LoadMap& loads,
                                    RateTable& rates) {
  ThroughputResult res;
  res.throughput = std::numeric_limits<double>::infinity();
  for (const RoutingTree& t : trees) {
    double best = std::numeric_limits<double>::infinity();
    const Hop* worst = nullptr;
    for (const Hop& h : t.hops) {
      const double v = rates.rate(h.link) / loads.load(h.link);
      if (v < best) best = v, worst = &h;
    }
    res.session_rate.push_back(best);
    if (worst && best < res.throughput) {
      res.throughput = best;
      res.bottleneck = worst->layer;
      res.bottleneck_link = worst->link;
    }
  }
  return res;
}

SimulationResult simulate_sessions(const BackboneSystem& bs,
                                   std::span<const MulticastSession> sessions, Scheme scheme,
                                   TreeKind kind, const ChannelParams& params, int threads) {
  threads = std::max(1, threads);
  std::vector<LoadMap> partial(static_cast<std::size_t>(threads), LoadMap(bs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  const std::size_t chunk = (sessions.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        const std::size_t lo = t * chunk, hi = std::min(sessions.size(), lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) partial[t].add(route(sessions[i], scheme, bs, kind));
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  LoadMap loads = std::move(partial[0]);
  for (int t = 1; t < threads; ++t) loads.merge(partial[t]);

  std::vector<std::uint32_t> used;
  for (std::uint32_t i = 0; i < loads.link_load().size(); ++i)
    if (loads.load(i) > 0) used.push_back(i);
  RateTable rates(bs, params);
  rates.precompute(used, threads);

  SimulationResult res;
  res.sessions = sessions.size();
  res.throughput = std::numeric_limits<double>::infinity();
  for (std::uint32_t id : used) {
    const double v = rates.rate(id) / loads.load(id);
    if (v < res.throughput) {
      res.throughput = v;
      res.bottleneck = bs.layer_of(id);
      res.bottleneck_link = id;
      res.bottleneck_rate = rates.rate(id);
      res.bottleneck_load = loads.load(id);
    }
  }
  res.max_link_load = loads.max_link();
  res.max_ar_station_load = loads.max_ar_station();
  res.max_highway_station_load = loads.max_highway_station();
  return res;
}

void write_tree_csv(std::ostream& out, std::span<const RoutingTree> trees, bool header) {
  if (header) out << "session,scheme,layer,tx,rx\n";
  for (const RoutingTree& t : trees)
    for (const Hop& h : t.hops)
      out << t.session << ',' << scheme_name(t.scheme) << ',' << layer_name(h.layer) << ','
          << h.tx << ',' << h.rx << '\n';
}

}  // namespace percap
