#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "percap/error.hpp"
#include "percap/spatial.hpp"

using namespace percap;

namespace {

std::vector<Point> uniform_points(std::size_t k, double side, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Point> pts(k);
  for (auto& p : pts) p = {u(gen), u(gen)};
  return pts;
}

}  // namespace

TEST_CASE("sample_deployment rejects bad parameters") {
  CHECK_THROWS_AS(Deployment::sample(0.0, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(Deployment::sample(100.0, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(Deployment::sample(100.0, 200.0, 1), ParameterError);
}

TEST_CASE("deployment geometry and count") {
  const Deployment d = Deployment::sample(1e4, 1.0, 7);
  CHECK(d.side() == doctest::Approx(100.0));
  CHECK(d.side() * d.side() * d.lambda() == doctest::Approx(d.n()));
  for (const Point& p : d.points()) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= d.side());
    CHECK(p.y >= 0.0);
    CHECK(p.y <= d.side());
  }
  int inside = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto k = Deployment::sample(1e4, 1.0, s).size();
    inside += k >= 9500 && k <= 10500;
  }
  CHECK(inside >= 198);
}

TEST_CASE("same stream at two densities is a similarity") {
  const Deployment a = Deployment::sample(1e4, 1.0, 7);
  const Deployment b = Deployment::sample(1e4, 1e4, 7);
  REQUIRE(a.size() == b.size());
  CHECK(b.side() == doctest::Approx(1.0));
  for (std::size_t i = 0; i < a.size(); i += 97) {
    CHECK(b[i].x == doctest::Approx(a[i].x / 100.0));
    CHECK(b[i].y == doctest::Approx(a[i].y / 100.0));
  }
  const std::vector<Point> pa(a.points().begin(), a.points().begin() + 300);
  const std::vector<Point> pb(b.points().begin(), b.points().begin() + 300);
  CHECK(emst(pb).total_length == doctest::Approx(emst(pa).total_length / 100.0));
}

TEST_CASE("deployment is deterministic per seed and round-trips through CSV") {
  const Deployment a = Deployment::sample(500, 2.0, 11);
  const Deployment b = Deployment::sample(500, 2.0, 11);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }
  std::stringstream ss;
  a.write_csv(ss);
  const Deployment c = Deployment::read_csv(ss);
  CHECK(c.n() == a.n());
  CHECK(c.lambda() == a.lambda());
  CHECK(c.seed() == a.seed());
  REQUIRE(c.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(c[i].x == a[i].x);
}

TEST_CASE("nearest_node") {
  const Deployment d = Deployment::from_points(4, 1, {{0.25, 0.25}, {0.75, 0.25}, {0.5, 1.0}});
  CHECK(nearest_node(d, {0.75, 0.25}) == 1);
  CHECK(nearest_node(d, {0.5, 0.25}) == 0);  // equidistant from 0 and 1
  const Deployment empty = Deployment::from_points(4, 1, {});
  CHECK_THROWS_AS(nearest_node(empty, {0.5, 0.5}), StateError);

  const Deployment big = Deployment::sample(1000, 1.0, 3);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, big.side());
  for (int t = 0; t < 500; ++t) {
    const Point p{u(gen), u(gen)};
    CHECK(nearest_node(big, p) == oracle::nearest_scan(big.points(), p));
  }
}

TEST_CASE("grid range queries equal a linear scan") {
  const Deployment d = Deployment::sample(2000, 1.0, 9);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, d.side());
  std::uniform_real_distribution<double> rr(0.1, 6.0);
  for (int t = 0; t < 1000; ++t) {
    const Point p{u(gen), u(gen)};
    const double r = rr(gen);
    std::vector<NodeId> scan;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (distance(d[i], p) <= r) scan.push_back(static_cast<NodeId>(i));
    REQUIRE(d.grid().within(p, r) == scan);
  }
}

TEST_CASE("emst small cases") {
  const std::vector<Point> line{{0, 0}, {2, 0}, {1, 0}};
  const EdgeList e = emst(line);
  CHECK(e.edges.size() == 2);
  CHECK(e.total_length == doctest::Approx(2.0));
  const std::vector<Point> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  CHECK(emst(square).total_length == doctest::Approx(3.0));
  CHECK_THROWS_AS(emst(std::vector<Point>{{0, 0}}), ParameterError);
}

TEST_CASE("emst equals exhaustive search up to 7 points") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto pts = uniform_points(3 + s % 5, 1.0, s);
    const EdgeList e = emst(pts);
    CHECK(oracle::is_spanning_tree(e.edges, pts.size()));
    CHECK(e.total_length == doctest::Approx(oracle::exhaustive_mst_length(pts)));
  }
}

TEST_CASE("emst equals Prim on larger inputs, both code paths") {
  for (std::size_t k : {50u, 200u, 3000u}) {
    const auto pts = uniform_points(k, 10.0, k);
    const EdgeList e = emst(pts);
    CHECK(oracle::is_spanning_tree(e.edges, k));
    double sum = 0.0;
    for (const Edge& x : e.edges) sum += x.length;
    CHECK(e.total_length == doctest::Approx(sum));
    CHECK(e.total_length == doctest::Approx(oracle::prim_length(pts)).epsilon(1e-9));
  }
}

TEST_CASE("emst_length_statistic") {
  const Deployment unit = Deployment::sample(1, 1, 1);
  // Mean distance between two uniform points of the unit square.
  CHECK(emst_length_statistic(unit, 200000, 2, 4) == doctest::Approx(0.5214).epsilon(0.01));
  const Deployment scaled = Deployment::sample(16, 1, 1);
  const double a = emst_length_statistic(unit, 2000, 20, 8);
  const double b = emst_length_statistic(scaled, 2000, 20, 8);
  CHECK(b / a == doctest::Approx(4.0).epsilon(0.02));

  std::vector<double> per_root;
  for (int k : {250, 500, 1000})
    per_root.push_back(emst_length_statistic(unit, 20, k, 2) / std::sqrt(k));
  CHECK(per_root.back() / per_root.front() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(per_root[2] / per_root[1] - 1.0) < 0.02);
}

TEST_CASE("scheme lattice cells tile the region") {
  const SchemeLattice axis(10.0, 3.0, 0.0);
  CHECK(axis.rows() == 3);
  CHECK(axis.cell_side() == doctest::Approx(10.0 / 3.0));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const SchemeLattice rot(10.0, 1.0, SchemeLattice::kRotated);
  for (int t = 0; t < 2000; ++t) {
    const Point p{u(gen), u(gen)};
    for (const SchemeLattice* lat : {&axis, &rot}) {
      const auto [r, c] = lat->cell_of(p);
      REQUIRE(lat->is_cell(r, c));
      CHECK(lat->contains(r, c, p));
      const Point q = lat->nearest_in_cell(r, c, p);
      CHECK(distance(p, q) == doctest::Approx(0.0));
    }
  }
  // Nearest point of a rotated cell to a far point lies on the diamond edge.
  const Point ctr = rot.cell_center(0, 1);
  const Point far{ctr.x + 5.0, ctr.y};
  const Point q = rot.nearest_in_cell(0, 1, far);
  CHECK(q.x - ctr.x == doctest::Approx(rot.cell_side() / std::sqrt(2.0)));
}
