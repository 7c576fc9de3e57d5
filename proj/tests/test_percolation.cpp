#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "percap/error.hpp"
#include "percap/percolation.hpp"

using namespace percap;

namespace {

double radius_for(double gamma, double lambda) {
  return std::sqrt(gamma / (lambda * std::numbers::pi));
}

bool valid_crossing(const BoolGrid& g, const CellPath& p, CellRange slab, Direction dir) {
  if (p.empty()) return false;
  const bool h = dir == Direction::horizontal;
  const int last = h ? g.cols - 1 : g.rows - 1;
  if ((h ? p.front().second : p.front().first) != 0) return false;
  if ((h ? p.back().second : p.back().first) != last) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto [r, c] = p[i];
    const int across = h ? r : c;
    if (across < slab.first || across > slab.last || !g.at(r, c)) return false;
    if (i > 0 && std::abs(r - p[i - 1].first) + std::abs(c - p[i - 1].second) != 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("two nodes inside the radius form one cluster") {
  const Deployment d = Deployment::from_points(4, 1, {{0.1, 0.1}, {0.1 + 0.9, 0.1}});
  const ClusterLabeling cl = cluster(d, 1.0);
  CHECK(cl.num_clusters() == 1);
  CHECK(cl.largest() == 2);
}

TEST_CASE("cluster labeling equals the BFS oracle") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Deployment d = Deployment::sample(400, 1.0, s);
    const double r = 0.6 + 0.1 * s;
    const ClusterLabeling cl = cluster(d, r);
    const auto comp = oracle::disk_components(d.points(), r);
    std::map<int, std::uint32_t> to_lib;
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto [it, fresh] = to_lib.emplace(comp[i], cl.cluster_of[i]);
      CHECK(it->second == cl.cluster_of[i]);
      if (fresh) CHECK(seen.insert(cl.cluster_of[i]).second);
    }
    CHECK(cl.num_clusters() == to_lib.size());
  }
}

TEST_CASE("smaller radius refines the clustering") {
  const Deployment d = Deployment::sample(3000, 1.0, 4);
  const ClusterLabeling a = cluster(d, 0.8), b = cluster(d, 1.2);
  std::map<std::uint32_t, std::uint32_t> parent;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto [it, fresh] = parent.emplace(a.cluster_of[i], b.cluster_of[i]);
    CHECK(it->second == b.cluster_of[i]);
  }
}

TEST_CASE("giant frequency is non-decreasing in gamma") {
  double prev = -1.0;
  for (double k = 0.5; k <= 4.0; k += 0.5) {
    int giants = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Deployment d = Deployment::sample(1e4, 1.0, s);
      giants += cluster(d, radius_for(k * std::numbers::pi, 1.0)).giant_id.has_value();
    }
    const double freq = giants / 20.0;
    CHECK(freq >= prev);
    prev = freq;
  }
  CHECK(prev == 1.0);
}

TEST_CASE("exterior statistics") {
  // All nodes in the giant cluster.
  const Deployment all = Deployment::from_points(4, 1, {{0, 0}, {0.5, 0}, {1, 0}});
  const ClusterLabeling ca = cluster(all, 0.6);
  const ExteriorStats ea = exterior_stats(all, ca);
  CHECK(ea.distances.empty());
  CHECK(ea.max_distance == 0.0);

  // One exterior node at distance 1.5 from the nearest giant node.
  const Deployment one =
      Deployment::from_points(9, 1, {{0, 0}, {0.5, 0}, {1, 0}, {1.5, 0}, {3, 0}});
  const ClusterLabeling co = cluster(one, 0.6);
  const ExteriorStats eo = exterior_stats(one, co);
  REQUIRE(eo.distances.size() == 1);
  CHECK(eo.max_distance == doctest::Approx(1.5));

  const Deployment none = Deployment::from_points(100, 1, {{0, 0}, {5, 5}, {9, 9}});
  CHECK_THROWS_AS(exterior_stats(none, cluster(none, 1.0)), StateError);

  const Deployment d = Deployment::sample(1e4, 1.0, 3);
  const ClusterLabeling cl = cluster(d, radius_for(4 * std::numbers::pi, 1.0));
  REQUIRE(cl.giant_id);
  const ExteriorStats st = exterior_stats(d, cl);
  for (const auto& [u, dist] : st.distances) {
    CHECK(dist > cl.radius);
    double best = 1e300;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (cl.cluster_of[i] == *cl.giant_id) best = std::min(best, distance(d[u], d[i]));
    CHECK(dist == doctest::Approx(best));
  }
}

TEST_CASE("connectivity radius check") {
  const Deployment small = Deployment::sample(200, 1.0, 1);
  CHECK(connectivity_radius_check(small, small.side() * 1.5));
  int above = 0, below = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Deployment d = Deployment::sample(1e4, 1.0, s);
    const double ln = std::log(1e4);
    above += connectivity_radius_check(d, std::sqrt(2 * ln / std::numbers::pi));
    below += !connectivity_radius_check(d, std::sqrt(0.5 * ln / std::numbers::pi));
  }
  CHECK(above >= 19);
  CHECK(below >= 19);
}

TEST_CASE("open cells") {
  // 100 x 100 axis lattice with cell area 2 / lambda.
  const double side = 100.0 * std::sqrt(2.0);
  const Deployment d = Deployment::sample(side * side, 1.0, 5);
  const SchemeLattice lat(side, std::sqrt(2.0), 0.0);
  REQUIRE(lat.rows() == 100);
  const BoolGrid g = open_cells(lat, d);
  CHECK(g.count() / 1e4 == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(0.02 / 0.8647));

  // A patch with no nodes leaves its cells closed.
  std::vector<Point> pts;
  for (const Point& p : d.points())
    if (p.x > 20.0 || p.y > 20.0) pts.push_back(p);
  const BoolGrid h = open_cells(lat, Deployment::from_points(d.n(), 1.0, pts));
  for (int r = 0; r < 14; ++r)
    for (int c = 0; c < 14; ++c) CHECK_FALSE(h.at(r, c));

  const double n = 1e4;
  const SchemeLattice big(100.0, std::sqrt(10.0 * std::log(n)), 0.0);
  int full = 0;
  for (std::uint64_t s = 0; s < 20; ++s)
    full += open_cells(big, Deployment::sample(n, 1.0, s)).count() == big.cell_count();
  CHECK(full == 20);
}

TEST_CASE("disjoint crossing paths") {
  BoolGrid open(6, 10, true);
  auto paths = disjoint_crossing_paths(open, {1, 4}, Direction::horizontal);
  CHECK(paths.size() == 4);
  paths = disjoint_crossing_paths(open, {0, 9}, Direction::vertical);
  CHECK(paths.size() == 10);

  BoolGrid cut(6, 10, true);
  for (int r = 0; r < 6; ++r) cut.set(r, 5, false);
  CHECK(disjoint_crossing_paths(cut, {0, 5}, Direction::horizontal).empty());

  // Random grids: every path is a valid crossing and no cell is shared.
  std::mt19937_64 gen(3);
  std::bernoulli_distribution open_p(0.9);
  for (int t = 0; t < 20; ++t) {
    BoolGrid g(64, 64);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) g.set(r, c, open_p(gen));
    for (Direction dir : {Direction::horizontal, Direction::vertical}) {
      const CellRange slab{16, 31};
      const auto ps = disjoint_crossing_paths(g, slab, dir);
      CHECK(ps.size() >= 1);
      std::set<std::pair<int, int>> used;
      for (const auto& p : ps) {
        CHECK(valid_crossing(g, p, slab, dir));
        for (const auto& cell : p) CHECK(used.insert(cell).second);
      }
    }
  }
}
