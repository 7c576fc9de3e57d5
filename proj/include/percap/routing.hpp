#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "percap/backbones.hpp"
#include "percap/channel.hpp"
#include "percap/spatial.hpp"

namespace percap {

enum class Scheme { o, p, oh, ph };

const char* scheme_name(Scheme s);  // "o", "p", "o&h", "p&h"
Scheme parse_scheme(const std::string& s);
inline bool uses_highways(Scheme s) { return s == Scheme::oh || s == Scheme::ph; }
inline ArterialKind arterial_of(Scheme s) {
  return s == Scheme::o || s == Scheme::oh ? ArterialKind::ordinary : ArterialKind::parallel;
}

struct MulticastSession {
  int index = 0;
  NodeId source = 0;
  std::vector<Point> candidate_points;
  std::vector<NodeId> destinations;  // deduplicated, ascending
  std::vector<NodeId> spanning_set;  // source first, then destinations other than it
  double rate = 0.0;
};

std::vector<MulticastSession> generate_sessions(const Deployment& d, int n_s, int n_d,
                                                std::uint64_t seed);

// Strip-snake spanning path over pts in [0, side]^2; falls back to the EMST
// if the snake would exceed est_bound.
EdgeList est(std::span<const Point> pts, double side);
inline double est_bound(std::size_t points, double side) {
  return 2.0 * 1.4142135623730951 * std::sqrt(static_cast<double>(points)) * side;
}

enum class TreeKind { est, emst };

struct Hop {
  NodeId tx = 0;
  NodeId rx = 0;
  std::uint32_t link = 0;  // BackboneSystem link id
  Layer layer = Layer::access;
};

struct RoutingTree {
  int session = 0;
  Scheme scheme = Scheme::o;
  std::vector<Hop> hops;  // ascending link id
};

RoutingTree route(const MulticastSession& s, Scheme scheme, const BackboneSystem& bs,
                  TreeKind kind = TreeKind::est);

// Link ids of the physical path from u to v under the scheme, before merging.
std::vector<std::uint32_t> route_pair(NodeId u, NodeId v, Scheme scheme,
                                      const BackboneSystem& bs);

class LoadMap {
 public:
  explicit LoadMap(const BackboneSystem& bs);

  void add(const RoutingTree& t);
  void merge(const LoadMap& other);

  const std::vector<std::uint32_t>& link_load() const { return link_; }
  std::uint32_t load(std::uint32_t link) const { return link_[link]; }
  // Sessions touching each node through an AR hop (AR stations only) or a
  // highway hop (highway stations only).
  const std::vector<std::uint32_t>& ar_station_load() const { return ar_; }
  const std::vector<std::uint32_t>& highway_station_load() const { return hw_; }
  std::uint32_t max_link() const;
  std::uint32_t max_ar_station() const;
  std::uint32_t max_highway_station() const;

 private:
  const BackboneSystem* bs_;
  std::vector<std::uint32_t> link_;
  std::vector<std::uint32_t> ar_;
  std::vector<std::uint32_t> hw_;
};

// Sustained link rates, computed on first use.
class RateTable {
 public:
  RateTable(const BackboneSystem& bs, const ChannelParams& params);
  double rate(std::uint32_t link);
  // Fills every listed link, spreading the work over threads.
  void precompute(std::span<const std::uint32_t> links, int threads);

 private:
  const BackboneSystem* bs_;
  ChannelParams params_;
  std::vector<double> rate_;  // negative until computed
};

struct ThroughputResult {
  std::vector<double> session_rate;  // parallel to the trees passed in
  double throughput = 0.0;
  Layer bottleneck = Layer::access;
  std::uint32_t bottleneck_link = kNone;
};

ThroughputResult measure_throughput(std::span<const RoutingTree> trees, const LoadMap& loads,
                                    RateTable& rates);

struct SimulationResult {
  double throughput = 0.0;
  Layer bottleneck = Layer::access;
  std::uint32_t bottleneck_link = kNone;
  double bottleneck_rate = 0.0;
  std::uint32_t bottleneck_load = 0;
  std::uint32_t max_link_load = 0;
  std::uint32_t max_ar_station_load = 0;
  std::uint32_t max_highway_station_load = 0;
  std::size_t sessions = 0;
};

// Routes every session, aggregates loads and returns the network throughput,
// the minimum of rate/load over every loaded link. Trees are not retained.
SimulationResult simulate_sessions(const BackboneSystem& bs,
                                   std::span<const MulticastSession> sessions, Scheme scheme,
                                   TreeKind kind, const ChannelParams& params, int threads);

void write_tree_csv(std::ostream& out, std::span<const RoutingTree> trees, bool header = true);

}  // namespace percap
