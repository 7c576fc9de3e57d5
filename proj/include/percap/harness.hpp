#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "percap/channel.hpp"
#include "percap/routing.hpp"

namespace percap {

using ConfigMap = std::map<std::string, std::string>;

// Flat key=value lines; '#' starts a comment. Keys are lower-cased.
ConfigMap parse_config(std::istream& in);
ConfigMap read_config_file(const std::string& path);
// Each override is key=value and replaces the config entry.
void apply_overrides(ConfigMap& cfg, std::span<const std::string> overrides);

// Arithmetic in n: + - * / ^, parentheses, constants pi and e, functions
// log (natural), ln, log2, sqrt, exp. "log n" applies log to the next factor;
// a number followed by a factor multiplies ("0.5pi").
double eval_expression(const std::string& expr, double n);

enum class Mode { deploy, percolate, backbone, route, simulate, bounds, sweep };
const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);

enum class AttenuationRule { automatic, dense, extended };

struct ExperimentConfig {
  Mode mode = Mode::bounds;
  std::vector<double> n_list;
  std::string lambda_rule = "dense";  // dense (lambda = n), extended (lambda = 1), or an expression
  std::string ns_rule = "n";
  std::vector<std::string> nd_rules{"4"};
  double alpha = 3.0;
  std::vector<Scheme> schemes{Scheme::oh};
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> gamma_rules;  // percolate
  double giant_fraction = 0.5;
  int grid_size = 256;
  double slack = 8.0;
  TreeKind tree = TreeKind::est;
  AttenuationRule attenuation = AttenuationRule::automatic;
  Interference interference = Interference::worst_case;
  HighwayParams highway;
  int threads = 0;  // 0 = hardware concurrency
  std::string tree_out;      // route: optional tree dump
  std::string backbone_out;  // backbone: optional road dump
  // sweep: run sweep_mode once per value of sweep_key
  Mode sweep_mode = Mode::bounds;
  std::string sweep_key;
  std::vector<std::string> sweep_values;
  ConfigMap raw;  // validated source entries, used by sweep

  double lambda_for(double n) const;
  double ns_for(double n) const;
  double nd_for(const std::string& rule, double n) const;
  Attenuation attenuation_for(double n, double lambda) const;
  int thread_count() const;
};

// Seeds from PERCAP_SEEDS (comma list or a..b) if set, else 1..10.
std::vector<std::uint64_t> default_seeds();
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

// Throws ValidationError naming the offending key.
ExperimentConfig validate_config(const ConfigMap& cfg);

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;
};

// Least-squares slope of log value against log n.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void write(std::ostream& out) const;
};

struct SlopeRow {
  std::string label;     // e.g. "scheme=o&h,n_d=4"
  std::string quantity;  // e.g. "throughput"
  SlopeFit fit;
};

struct RunResult {
  CsvTable table;
  std::vector<SlopeRow> slopes;
  std::size_t failed_rows = 0;
};

RunResult run(const ExperimentConfig& cfg);

void write_slopes_csv(std::ostream& out, std::span<const SlopeRow> slopes);

}  // namespace percap
