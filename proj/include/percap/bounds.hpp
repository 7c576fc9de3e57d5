#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace percap {

// Order evaluators with every constant set to 1; log is natural.

// Maximum occupancy of m balls in n bins. threshold_power sets the split
// n / (log n)^power between the first and middle branches.
double occupancy_L(double m, double n, double threshold_power = 1.0);

// Which of the three occupancy branches applies: 1, 2 or 3.
int occupancy_branch(double m, double n, double threshold_power = 1.0);

struct OccupancySample {
  std::vector<int> max_loads;
  double mean = 0.0;
};

OccupancySample occupancy_simulate(std::int64_t m, std::int64_t n, int trials,
                                   std::uint64_t seed);

double rate_oar(double lambda, double n, double alpha);
double rate_par(double lambda, double n, double alpha);
double p_o(double n, double n_d);
double p_p(double n, double n_d);
double p_oh_oar(double n, double n_d);
double p_h(double n, double n_d);  // shared by o&h and p&h
double p_ph_par(double n, double n_d);

double lambda_o(double lambda, double n, double n_s, double n_d, double alpha);
double lambda_p(double lambda, double n, double n_s, double n_d, double alpha);
double lambda_oh(double lambda, double n, double n_s, double n_d, double alpha);
double lambda_ph(double lambda, double n, double n_s, double n_d, double alpha);

struct UpperBound {
  double value = 0.0;
  double lc_star = 0.0;
  std::string regime;  // "interior" or "exterior": the binding term at lc_star
};

UpperBound upper_bound(double lambda, double n, double n_s, double n_d, double alpha,
                       int grid_size = 256);

struct LowerBound {
  double value = 0.0;
  std::string scheme;
  std::string regime;  // occupancy branch of the binding load term
};

LowerBound lower_bound(double lambda, double n, double n_s, double n_d, double alpha);

double rdn_reference(double n, double n_d);
double ren_reference(double n, double n_d, double alpha = 3.0);

enum class PriorKind { rdn, ren };
double prior_bound(double n, double n_d, PriorKind which, double alpha = 3.0);

struct CapacityReport {
  UpperBound upper;
  LowerBound lower;
  double ratio = 0.0;
  bool tight = false;
};

CapacityReport tightness(double lambda, double n, double n_s, double n_d, double alpha,
                         double slack = 8.0);

void check_domain(double lambda, double n, double n_s, double n_d, double alpha);

}  // namespace percap
