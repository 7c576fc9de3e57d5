#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "percap/error.hpp"
#include "percap/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"percap: capacity scaling experiments"};
  std::string mode, config_path, out_path;
  std::vector<std::string> overrides;
  app.add_option("mode", mode, "deploy, percolate, backbone, route, simulate, bounds or sweep")
      ->required();
  app.add_option("--config", config_path, "key=value config file")->required();
  app.add_option("--out", out_path, "output CSV")->required();
  app.add_option("overrides", overrides, "key=value overrides");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  percap::ExperimentConfig cfg;
  try {
    percap::ConfigMap raw = percap::read_config_file(config_path);
    percap::apply_overrides(raw, overrides);
    raw["mode"] = mode;
    cfg = percap::validate_config(raw);
  } catch (const std::exception& e) {
    std::cerr << "percap: " << e.what() << '\n';
    return 1;
  }

  percap::RunResult res;
  try {
    res = percap::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "percap: run aborted: " << e.what() << '\n';
    return 1;
  }

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "percap: cannot write '" << out_path << "'\n";
    return 1;
  }
  res.table.write(out);
  if (!res.slopes.empty()) {
    std::ofstream slopes(out_path + ".slopes.csv");
    percap::write_slopes_csv(slopes, res.slopes);
    for (const auto& s : res.slopes)
      std::fprintf(stderr, "slope %s %s: %.4f +- %.4f (%zu points)\n", s.label.c_str(),
                   s.quantity.c_str(), s.fit.slope, s.fit.stderr_slope, s.fit.points);
  }
  if (res.failed_rows > 0) {
    std::fprintf(stderr, "percap: %zu of %zu rows failed\n", res.failed_rows,
                 res.table.rows.size());
    return 2;
  }
  return 0;
}
