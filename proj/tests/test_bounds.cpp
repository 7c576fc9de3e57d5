#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "percap/bounds.hpp"
#include "percap/error.hpp"

using namespace percap;

namespace {
double ln(double n) { return std::log(n); }
}  // namespace

TEST_CASE("occupancy formula at the stated substitutions") {
  const double n = 1e6;
  CHECK(occupancy_L(std::sqrt(n), n) == doctest::Approx(2.0));
  CHECK(occupancy_L(n * ln(n) * ln(n), n) == doctest::Approx(ln(n) * ln(n)));
  CHECK(occupancy_branch(std::sqrt(n), n) == 1);
  CHECK(occupancy_branch(n, n) == 2);
  CHECK(occupancy_branch(n * ln(n) * 2, n) == 3);
}

TEST_CASE("occupancy formula against balls-into-bins") {
  CHECK(occupancy_simulate(1, 50, 20, 1).mean == 1.0);
  const double mc = oracle::mean_max_load(10000, 10000, 1000, 3);
  const double f = occupancy_L(1e4, 1e4);
  CHECK(mc / f <= 2.0);
  CHECK(mc / f >= 0.5);
  const double small = oracle::mean_max_load(16, 16, 10000, 4);
  CHECK(small / occupancy_L(16, 16) <= 2.0);
  CHECK(small / occupancy_L(16, 16) >= 0.5);
  // Concentration well above n log n bins-worth of balls.
  const double m = 100 * 16 * ln(16);
  CHECK(oracle::mean_max_load(static_cast<std::int64_t>(m), 16, 2000, 5) / (m / 16) ==
        doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("occupancy_simulate agrees with the oracle") {
  const auto s = occupancy_simulate(2000, 500, 400, 9);
  CHECK(s.max_loads.size() == 400);
  CHECK(s.mean == doctest::Approx(oracle::mean_max_load(2000, 500, 400, 10)).epsilon(0.05));
}

TEST_CASE("occupancy branches meet within a factor of two") {
  const double n = std::ldexp(1.0, 20);
  for (double t : {n / ln(n), n * ln(n)}) {
    const double left = occupancy_L(t * 0.99, n), right = occupancy_L(t * 1.01, n);
    CHECK(std::max(left, right) / std::min(left, right) <= 2.0);
  }
}

TEST_CASE("upper bound maximizer in the dense network") {
  const double n = std::ldexp(1.0, 20);
  const UpperBound a = upper_bound(n, n, n, 4, 3);
  CHECK(a.lc_star * std::sqrt(n) <= 4.0);
  CHECK(a.lc_star * std::sqrt(n) >= 0.25);
  const UpperBound b = upper_bound(n, n, n, n, 3);
  const double target = std::sqrt(ln(n) / n);
  CHECK(b.lc_star / target <= 4.0);
  CHECK(b.lc_star / target >= 0.25);
  // Collapsed interval: single-point evaluation.
  const UpperBound c = upper_bound(20, 20, 10, 2, 3);
  CHECK(c.lc_star == doctest::Approx(std::sqrt(std::log(20.0) / 20.0)).epsilon(1.0));
  CHECK(c.value > 0.0);
  CHECK_THROWS_AS(upper_bound(1, 100, 100, 4, 3, 16), ParameterError);
  CHECK_THROWS_AS(upper_bound(0.5, 100, 100, 4, 3), ParameterError);
}

TEST_CASE("upper bound grid convergence and monotonicity") {
  const double n = std::ldexp(1.0, 20);
  for (double lambda : {1.0, 1e3, n})
    for (double nd : {4.0, 1e3, 1e5}) {
      const double a = upper_bound(lambda, n, n, nd, 3, 256).value;
      const double b = upper_bound(lambda, n, n, nd, 3, 512).value;
      CHECK(std::abs(a / b - 1.0) < 0.01);
    }
  for (double lambda : {1.0, 1e3, n}) {
    double prev = 1e300;
    for (double nd = 1; nd <= n; nd *= 4) {
      const double v = upper_bound(lambda, n, n, nd, 3).value;
      CHECK(v <= prev * (1 + 1e-12));
      prev = v;
    }
    prev = 1e300;
    for (double ns = 2; ns <= n; ns *= 4) {
      const double v = upper_bound(lambda, n, ns, 16, 3).value;
      CHECK(v <= prev * (1 + 1e-12));
      prev = v;
    }
  }
}

TEST_CASE("lower bound regimes") {
  const double n = std::ldexp(1.0, 20);
  const LowerBound a = lower_bound(n, n, n, 16, 3);
  CHECK((a.scheme == "o" || a.scheme == "o&h"));
  const double r = a.value * std::sqrt(16 * n);
  CHECK(r <= 8.0);
  CHECK(r >= 1.0 / 8.0);
  const double nd = n / 2;
  const LowerBound b = lower_bound(1, n, n, nd, 3);
  const double t = b.value * nd * std::pow(ln(n), 1.5);
  CHECK(t <= 8.0);
  CHECK(t >= 1.0 / 8.0);
}

TEST_CASE("upper bound dominates lower bound up to the slack") {
  const double n = std::ldexp(1.0, 20);
  for (double lambda : {1.0, 32.0, 1024.0, 32768.0, n})
    for (double nd : {1.0, 32.0, 1024.0, 32768.0, n})
      for (double ns : {2.0, 32.0, 1024.0, 32768.0, n}) {
        const CapacityReport rep = tightness(lambda, n, ns, nd, 3);
        CHECK(rep.ratio >= 1.0 / 8.0);
      }
}

TEST_CASE("reference formulas") {
  const double n = std::ldexp(1.0, 20), L = ln(n);
  const double nd2 = n / std::pow(L, 2.5);
  CHECK(rdn_reference(n, nd2) == doctest::Approx(1.0 / (nd2 * std::pow(L, 1.5))));
  const double nd3 = n / std::pow(L, 1.5);
  CHECK(ren_reference(n, nd3, 3) ==
        doctest::Approx(1.0 / (std::sqrt(n * nd3) * std::pow(L, 1.0))));
  CHECK(rdn_reference(n, n / 2) == doctest::Approx(1.0 / n));
  CHECK(prior_bound(n, nd2, PriorKind::rdn) / rdn_reference(n, nd2) ==
        doctest::Approx(std::pow(L, 0.25)));
  const double nd1 = n / std::pow(L, 4);
  CHECK(prior_bound(n, nd1, PriorKind::ren) == doctest::Approx(1.0 / std::sqrt(nd1 * n)));
  // Outside the shaded gaps the prior and new bounds agree.
  CHECK(prior_bound(n, 4, PriorKind::rdn) / rdn_reference(n, 4) == doctest::Approx(1.0));
  CHECK(prior_bound(n, n / 2, PriorKind::ren) / ren_reference(n, n / 2) == doctest::Approx(1.0));
}

TEST_CASE("parallel arterial threshold tends to log n as alpha grows") {
  const double n = 1e6, L = ln(n);
  CHECK(rate_par(0.95 * L, n, 400.0) == doctest::Approx(std::pow(0.95, 200.0)));
  CHECK(rate_par(1.0 * L, n, 400.0) == doctest::Approx(1.0 / L));
  CHECK(rate_par(0.95 * L, n, 3.0) == doctest::Approx(1.0 / L));
  CHECK(rate_oar(2 * L, n, 3.0) == 1.0);
  CHECK(rate_oar(L / 4, n, 3.0) == doctest::Approx(std::pow(0.25, 1.5)));
}

TEST_CASE("specialized bounds track the references") {
  for (int lg : {16, 20, 24}) {
    const double n = std::ldexp(1.0, lg), L = ln(n);
    for (double e : {4.0, 2.5, 1.5, 0.5}) {
      const double nd = n / std::pow(L, e);
      const double r = upper_bound(n, n, n, nd, 3).value / rdn_reference(n, nd);
      CHECK(r <= 8.0);
      CHECK(r >= 1.0 / 8.0);
    }
    for (double e : {4.5, 3.0, 1.5, 0.5}) {
      const double nd = n / std::pow(L, e);
      const double r = upper_bound(1, n, n, nd, 3).value / ren_reference(n, nd, 3);
      CHECK(r <= 8.0);
      CHECK(r >= 1.0 / 8.0);
    }
  }
}

TEST_CASE("domain checks") {
  CHECK_THROWS_AS(check_domain(1, 100, 1, 4, 3), ParameterError);
  CHECK_THROWS_AS(check_domain(1, 100, 50, 0.5, 3), ParameterError);
  CHECK_THROWS_AS(check_domain(1, 100, 50, 4, 2), ParameterError);
  CHECK_NOTHROW(check_domain(1, 100, 50, 4, 3));
}
