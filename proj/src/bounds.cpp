#include "percap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "percap/error.hpp"

namespace percap {

namespace {

// Below this bin count the middle-band bridge is evaluated at kRefBins bins
// with the same mean load, so L stays monotone in the bin count.
const double kRefBins = std::exp(6.0);

// First branch below n/(log n)^k, m/n above n log n, and in between a
// log-linear bridge in log(m/n) joining the two branch values.
double occupancy_raw(double m, double n, double k) {
  const double lb = std::log(n);
  const double mean = m / n;
  if (m >= n * lb) return mean;
  if (m < n / std::pow(lb, k)) return lb / std::log(n / m);
  const double lnlb = std::log(lb);
  const double s = (std::log(mean) + k * lnlb) / ((k + 1.0) * lnlb);
  return lb * std::pow(k * lnlb, s - 1.0);
}

double log_n(double n) { return std::log(n); }

}  // namespace

double occupancy_L(double m, double n, double threshold_power) {
  if (!(m > 0.0) || !(n > 0.0)) throw ParameterError("occupancy needs m, n > 0");
  const double v = n < kRefBins ? occupancy_raw(m * kRefBins / n, kRefBins, threshold_power)
                                : occupancy_raw(m, n, threshold_power);
  return std::min(std::max(1.0, v), std::max(m, 1.0));
}

int occupancy_branch(double m, double n, double threshold_power) {
  const double bins = std::max(n, kRefBins);
  const double balls = n < kRefBins ? m * kRefBins / n : m;
  const double lb = std::log(bins);
  if (balls >= bins * lb) return 3;
  if (balls < bins / std::pow(lb, threshold_power)) return 1;
  return 2;
}

OccupancySample occupancy_simulate(std::int64_t m, std::int64_t n, int trials,
                                   std::uint64_t seed) {
  if (trials < 1 || m < 0 || n < 1) throw ParameterError("occupancy_simulate arguments");
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::int64_t> bin(0, n - 1);
  std::vector<int> load(static_cast<std::size_t>(n));
  OccupancySample out;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::fill(load.begin(), load.end(), 0);
    int best = 0;
    for (std::int64_t b = 0; b < m; ++b) best = std::max(best, ++load[bin(gen)]);
    out.max_loads.push_back(best);
    sum += best;
  }
  out.mean = sum / trials;
  return out;
}

double rate_oar(double lambda, double n, double alpha) {
  const double ln = log_n(n);
  return lambda <= ln ? std::pow(lambda / ln, alpha / 2.0) : 1.0;
}

double rate_par(double lambda, double n, double alpha) {
  const double ln = log_n(n);
  return lambda <= std::pow(ln, 1.0 - 2.0 / alpha) ? std::pow(lambda / ln, alpha / 2.0)
                                                    : 1.0 / ln;
}

double p_o(double n, double n_d) {
  const double ln = log_n(n);
  return n_d <= n / ln ? std::sqrt(n_d * ln / n) : 1.0;
}

double p_p(double n, double n_d) {
  const double ln = log_n(n);
  return n_d <= n / ln ? std::sqrt(n_d / (n * ln)) : n_d / n;
}

double p_oh_oar(double n, double n_d) {
  const double ln = log_n(n);
  return std::min(n_d * std::pow(ln, 1.5) / n, 1.0);
}

double p_h(double n, double n_d) {
  const double ln = log_n(n);
  if (n_d <= n / (ln * ln)) return std::sqrt(n_d / n);
  if (n_d <= n / ln) return n_d * ln / n;
  return 1.0;
}

double p_ph_par(double n, double n_d) {
  const double ln = log_n(n);
  return std::min(n_d * std::sqrt(ln) / n, 1.0);
}

double lambda_o(double lambda, double n, double n_s, double n_d, double alpha) {
  return rate_oar(lambda, n, alpha) / occupancy_L(n_s, 1.0 / p_o(n, n_d));
}

double lambda_p(double lambda, double n, double n_s, double n_d, double alpha) {
  return rate_par(lambda, n, alpha) / occupancy_L(n_s, 1.0 / p_p(n, n_d));
}

double lambda_oh(double lambda, double n, double n_s, double n_d, double alpha) {
  return std::min(rate_oar(lambda, n, alpha) / occupancy_L(n_s, 1.0 / p_oh_oar(n, n_d)),
                  1.0 / occupancy_L(n_s, 1.0 / p_h(n, n_d)));
}

double lambda_ph(double lambda, double n, double n_s, double n_d, double alpha) {
  return std::min(rate_par(lambda, n, alpha) / occupancy_L(n_s, 1.0 / p_ph_par(n, n_d)),
                  1.0 / occupancy_L(n_s, 1.0 / p_h(n, n_d)));
}

void check_domain(double lambda, double n, double n_s, double n_d, double alpha) {
  if (!(n >= 2.0) || !std::isfinite(n)) throw ParameterError("n must be >= 2");
  if (!(lambda >= 1.0 && lambda <= n)) throw ParameterError("lambda must lie in [1, n]");
  if (!(n_d >= 1.0 && n_d <= n)) throw ParameterError("n_d must lie in [1, n]");
  if (!(n_s > 1.0 && n_s <= n)) throw ParameterError("n_s must lie in (1, n]");
  if (!(alpha > 2.0)) throw ParameterError("alpha must exceed 2");
}

UpperBound upper_bound(double lambda, double n, double n_s, double n_d, double alpha,
                       int grid_size) {
  check_domain(lambda, n, n_s, n_d, alpha);
  if (grid_size < 32) throw ParameterError("grid_size must be >= 32");
  const double ln = log_n(n);
  const double lo = 1.0 / std::sqrt(lambda);
  const double hi = std::sqrt(ln / lambda);
  const double ext_rate = std::min(1.0, std::pow(lambda / ln, alpha / 2.0));
  auto eval = [&](double lc, bool& interior) {
    const double t1 = std::min(1.0, std::pow(lc, -alpha)) /
                      occupancy_L(n_s, std::sqrt(n) / (lc * std::sqrt(n_d * lambda)));
    const double t2 =
        ext_rate / occupancy_L(n_s, n * std::sqrt(lambda) * lc / (n_d * std::sqrt(ln)));
    interior = t1 <= t2;
    return std::min(t1, t2);
  };
  UpperBound best;
  best.value = -1.0;
  const int points = hi > lo ? grid_size : 1;
  for (int i = 0; i < points; ++i) {
    const double lc =
        points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    bool interior = false;
    const double v = eval(lc, interior);
    if (v > best.value) {
      best.value = v;
      best.lc_star = lc;
      best.regime = interior ? "interior" : "exterior";
    }
  }
  return best;
}

LowerBound lower_bound(double lambda, double n, double n_s, double n_d, double alpha) {
  check_domain(lambda, n, n_s, n_d, alpha);
  const double values[4] = {lambda_o(lambda, n, n_s, n_d, alpha),
                            lambda_p(lambda, n, n_s, n_d, alpha),
                            lambda_oh(lambda, n, n_s, n_d, alpha),
                            lambda_ph(lambda, n, n_s, n_d, alpha)};
  const char* names[4] = {"o", "p", "o&h", "p&h"};
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (values[i] > values[best]) best = i;
  LowerBound out{values[best], names[best], ""};
  double p = 1.0;
  switch (best) {
    case 0: p = p_o(n, n_d); break;
    case 1: p = p_p(n, n_d); break;
    case 2: p = p_oh_oar(n, n_d); break;
    default: p = p_ph_par(n, n_d); break;
  }
  out.regime = "L" + std::to_string(occupancy_branch(n_s, 1.0 / p));
  return out;
}

double rdn_reference(double n, double n_d) {
  const double ln = log_n(n);
  if (n_d <= n / std::pow(ln, 3)) return 1.0 / std::sqrt(n_d * n);
  if (n_d <= n / (ln * ln)) return 1.0 / (n_d * std::pow(ln, 1.5));
  if (n_d <= n / ln) return 1.0 / std::sqrt(n * n_d * ln);
  return 1.0 / n;
}

double ren_reference(double n, double n_d, double alpha) {
  const double ln = log_n(n);
  if (n_d <= n / std::pow(ln, alpha + 1.0)) return 1.0 / std::sqrt(n_d * n);
  if (n_d <= n / (ln * ln)) return 1.0 / (n_d * std::pow(ln, (alpha + 1.0) / 2.0));
  if (n_d <= n / ln) return 1.0 / (std::sqrt(n * n_d) * std::pow(ln, (alpha - 1.0) / 2.0));
  return 1.0 / (n_d * std::pow(ln, alpha / 2.0));
}

double prior_bound(double n, double n_d, PriorKind which, double alpha) {
  const double ln = log_n(n);
  if (which == PriorKind::rdn) {
    if (n_d <= n / (ln * ln)) return 1.0 / std::sqrt(n_d * n);
    if (n_d <= n / ln) return 1.0 / (n_d * ln);
    return 1.0 / n;
  }
  if (n_d <= n / std::pow(ln, alpha)) return 1.0 / std::sqrt(n_d * n);
  return 1.0 / (n_d * std::pow(ln, alpha / 2.0));
}

CapacityReport tightness(double lambda, double n, double n_s, double n_d, double alpha,
                         double slack) {
  CapacityReport r;
  r.upper = upper_bound(lambda, n, n_s, n_d, alpha);
  r.lower = lower_bound(lambda, n, n_s, n_d, alpha);
  r.ratio = r.upper.value / r.lower.value;
  r.tight = r.ratio <= slack && r.ratio >= 1.0 / slack;
  return r;
}

}  // namespace percap
