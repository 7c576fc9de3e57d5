#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "percap/backbones.hpp"
#include "percap/channel.hpp"
#include "percap/error.hpp"

using namespace percap;

TEST_CASE("link_rate examples") {
  ChannelParams p;
  CHECK(link_rate(p, {0, 0}, {1, 0}, {}) == doctest::Approx(1.0));
  const double alone = link_rate(p, {0, 0}, {1.5, 0}, {});
  const std::vector<Point> one{{5, 5}};
  CHECK(link_rate(p, {0, 0}, {1.5, 0}, one) < alone);
  CHECK(link_rate(p, {0, 0}, {0.5, 0}, {}) == doctest::Approx(1.0));
  p.mode = Attenuation::dense;
  CHECK(link_rate(p, {0, 0}, {0.5, 0}, {}) == doctest::Approx(std::log2(9.0)));
  CHECK_THROWS_AS(link_rate(p, {1, 1}, {1, 1}, {}), ParameterError);
  p.alpha = 2.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("link_rate is non-increasing in distance") {
  const ChannelParams p;
  const std::vector<Point> intf{{10, 3}, {-7, 4}};
  double prev = 1e300;
  for (double d = 0.2; d < 20.0; d += 0.1) {
    const double r = link_rate(p, {-d, 0}, {0, 0}, intf);
    CHECK(r <= prev + 1e-15);
    prev = r;
  }
}

TEST_CASE("scheduling set validity") {
  CHECK(SchedulingSet{0, 0, {{0, 1}, {2, 3}}}.valid());
  CHECK_FALSE(SchedulingSet{0, 0, {{0, 1}, {0, 3}}}.valid());
  CHECK_FALSE(SchedulingSet{0, 0, {{0, 1}, {1, 3}}}.valid());
}

TEST_CASE("tdma coloring") {
  CHECK_THROWS_AS(tdma_color(SchemeLattice(4, 1, 0), 5), ParameterError);
  const SchemeLattice lat(4.0, 1.0, 0.0);
  const auto c4 = tdma_color(lat, 4);
  for (int k = 0; k < 4; ++k) CHECK(std::count(c4.begin(), c4.end(), k) == 4);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b)
      if (a != b && c4[a] == c4[b]) {
        CHECK((a / 4 - b / 4) % 2 == 0);
        CHECK((a % 4 - b % 4) % 2 == 0);
      }
  const SchemeLattice big(30.0, 1.0, 0.0);
  const auto c9 = tdma_color(big, 9);
  for (int a = 0; a < 900; a += 7)
    for (int b = 0; b < 900; ++b)
      if (a != b && c9[a] == c9[b])
        CHECK(std::max(std::abs(a / 30 - b / 30), std::abs(a % 30 - b % 30)) >= 3);

  // Links confined to their same-colored cells are separated by (sqrt k - 2) cells.
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const int a = static_cast<int>(gen() % 900), b = static_cast<int>(gen() % 900);
    if (a == b || c9[a] != c9[b]) continue;
    const Point tx{(b % 30 + u(gen)), (b / 30 + u(gen))};
    const Point rx{(a % 30 + u(gen)), (a / 30 + u(gen))};
    CHECK(distance(tx, rx) >= 1.0 - 1e-12);
  }
}

TEST_CASE("sustained rate time sharing") {
  const ChannelParams p;
  TdmaSchedule one(1, 1);
  one.add({0, 1, {0, 0}, {1.5, 0}, 0, 0});
  CHECK(sustained_rate(p, one, 0) == doctest::Approx(link_rate(p, {0, 0}, {1.5, 0}, {})));
  CHECK_THROWS_AS(sustained_rate(p, one, 3), ParameterError);

  TdmaSchedule nine(9, 1);
  nine.add({0, 1, {0, 0}, {1.5, 0}, 4, 0});
  nine.add({2, 3, {8, 0}, {9, 0}, 4, 0});
  nine.add({4, 5, {0, 3}, {0, 4}, 2, 0});
  const std::vector<Point> intf{{8, 0}};
  CHECK(sustained_rate(p, nine, 0) * 9 ==
        doctest::Approx(link_rate(p, {0, 0}, {1.5, 0}, intf)));
  CHECK(sustained_rate(p, nine, 2) * 9 == doctest::Approx(link_rate(p, {0, 3}, {0, 4}, {})));
  CHECK_THROWS_AS(nine.add({0, 1, {0, 0}, {1.5, 0}, 1, 0}), ParameterError);
  CHECK_THROWS_AS(nine.add({6, 7, {0, 0}, {1, 0}, 9, 0}), ParameterError);

  const auto sets = nine.scheduling_sets();
  for (const auto& s : sets) CHECK(s.valid());

  std::stringstream csv;
  write_rate_csv(csv, p, nine);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "slot,subslot,tx,rx,rate");
}

TEST_CASE("worst-case placement moves other-cell transmitters toward the receiver") {
  const SchemeLattice lat(9.0, 1.0, 0.0);
  std::vector<Point> pos{{0.5, 0.5}, {0.9, 0.5}, {3.9, 0.5}, {3.5, 0.5}};
  std::vector<PendingLink> links{{0, 1, 0, 0}, {3, 2, 0, 3}};
  const TdmaSchedule s = build_schedule(1, links, pos, 1, &lat);
  ChannelParams worst, placed;
  placed.interference = Interference::placed;
  const double w = sustained_rate(worst, s, 0), pl = sustained_rate(placed, s, 0);
  CHECK(w < pl);
  // Interferer sits at (3, 0.5), the point of cell (0, 3) nearest the receiver.
  const std::vector<Point> at{{3.0, 0.5}};
  CHECK(w == doctest::Approx(link_rate(worst, pos[0], pos[1], at)));
}

TEST_CASE("build_schedule separates links sharing a node") {
  std::vector<Point> pos(6, Point{});
  for (int i = 0; i < 6; ++i) pos[i] = {static_cast<double>(i), 0.0};
  std::vector<PendingLink> links{{0, 1, 0, 0}, {0, 2, 0, 0}, {3, 4, 0, 0}, {5, 4, 0, 0}, {2, 3, 0, 0}};
  const TdmaSchedule s = build_schedule(2, links, pos, 3);
  CHECK(s.subslots_per_slot() == 3);
  for (const auto& set : s.scheduling_sets()) {
    std::set<NodeId> nodes;
    for (const Link& l : set.links) {
      CHECK(nodes.insert(l.tx).second);
      CHECK(nodes.insert(l.rx).second);
    }
  }
  PendingLink ex{1, 2, 0, 7};
  ex.exclusive = true;
  std::vector<PendingLink> mixed{{0, 3, 0, 7}, ex, {4, 5, 0, 7}};
  const TdmaSchedule m = build_schedule(1, mixed, pos);
  CHECK(m.link(1).subslot != m.link(0).subslot);
  CHECK(m.link(1).subslot != m.link(2).subslot);
  CHECK(m.link(0).subslot == m.link(2).subslot);
}

TEST_CASE("ordinary road rates track (lambda / log n)^(alpha/2)") {
  std::vector<double> ratios;
  ChannelParams p;
  for (int lg = 12; lg <= 18; lg += 2) {
    const double n = std::ldexp(1.0, lg);
    const Deployment d = Deployment::sample(n, 1.0, 21);
    ArterialSystem ar = build_arterial(d, ArterialKind::ordinary, 3);
    AccessPathSet acc = build_access(d, ar);
    const BackboneSystem bs(d, std::move(ar), std::move(acc), std::nullopt);
    const TdmaSchedule& roads = bs.schedule(BackboneSystem::kRoads);
    std::vector<double> rates;
    for (std::size_t i = 0; i < roads.size(); ++i) rates.push_back(sustained_rate(p, roads, i));
    std::nth_element(rates.begin(), rates.begin() + rates.size() / 2, rates.end());
    ratios.push_back(rates[rates.size() / 2] / std::pow(std::log(n), -1.5));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo <= 2.0);
}

TEST_CASE("interference under a 9-TDMA coloring stays bounded in n") {
  // One uniform transmitter per same-colored cell, extended attenuation, lambda = 1.
  const ChannelParams p;
  auto worst = [&](double n, std::uint64_t seed) {
    const double side = std::sqrt(n);
    const SchemeLattice lat(side, 3.0 * std::sqrt(std::log(n)), 0.0);
    const auto color = tdma_color(lat, 9);
    const double b = lat.cell_side();
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> tx;
    for (int r = 0; r < lat.rows(); ++r)
      for (int c = 0; c < lat.cols(); ++c)
        if (color[lat.flat(r, c)] == 0) tx.push_back({(c + u(gen)) * b, (r + u(gen)) * b});
    double mx = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t own = gen() % tx.size();
      const Point rx = tx[own];
      const Point at{rx.x + (u(gen) - 0.5) * b, rx.y + (u(gen) - 0.5) * b};
      double sum = 0.0;
      for (std::size_t j = 0; j < tx.size(); ++j)
        if (j != own) sum += attenuation(p, oracle::dist(tx[j], at));
      mx = std::max(mx, sum);
    }
    return mx;
  };
  const double fitted = 2.0 * worst(std::ldexp(1.0, 12), 1);
  CHECK(worst(std::ldexp(1.0, 18), 2) <= fitted);
}
