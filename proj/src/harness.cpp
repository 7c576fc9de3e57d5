#include "percap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "percap/bounds.hpp"
#include "percap/error.hpp"
#include "percap/percolation.hpp"

namespace percap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// Recursive-descent evaluator over a single variable n.
class ExprParser {
 public:
  ExprParser(const std::string& s, double n) : s_(s), n_(n) {}

  double parse() {
    const double v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParameterError("expression '" + s_ + "': " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool starts_factor() {
    skip();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '(' || c == '.';
  }

  double expr() {
    double v = term();
    for (;;) {
      if (peek('+')) ++pos_, v += term();
      else if (peek('-')) ++pos_, v -= term();
      else return v;
    }
  }
  double term() {
    double v = unary();
    for (;;) {
      if (peek('*')) ++pos_, v *= unary();
      else if (peek('/')) ++pos_, v /= unary();
      else if (starts_factor()) v *= unary();
      else return v;
    }
  }
  double unary() {
    if (peek('-')) {
      ++pos_;
      return -unary();
    }
    if (peek('+')) {
      ++pos_;
      return unary();
    }
    return power();
  }
  double power() {
    const double base = primary();
    if (peek('^')) {
      ++pos_;
      return std::pow(base, unary());
    }
    return base;
  }
  double primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const double v = expr();
      if (!peek(')')) fail("missing ')'");
      ++pos_;
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t e = pos_;
      while (e < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_')) ++e;
      const std::string id = lower(s_.substr(pos_, e - pos_));
      pos_ = e;
      if (id == "n") return n_;
      if (id == "pi") return 3.14159265358979323846;
      if (id == "e") return 2.71828182845904523536;
      double arg = 0.0;
      if (id == "log" || id == "ln" || id == "log2" || id == "sqrt" || id == "exp") {
        arg = power();
        if (id == "log" || id == "ln") return std::log(arg);
        if (id == "log2") return std::log2(arg);
        if (id == "sqrt") return std::sqrt(arg);
        return std::exp(arg);
      }
      fail("unknown name '" + id + "'");
    }
    fail(std::string("unexpected '") + c + "'");
  }

  const std::string& s_;
  double n_;
  std::size_t pos_ = 0;
};

// "a..b" doubles from a up to b; otherwise a comma list of expressions.
std::vector<double> parse_n_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split(s, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(eval_expression(item, 0.0));
      continue;
    }
    const double lo = eval_expression(item.substr(0, dots), 0.0);
    const double hi = eval_expression(item.substr(dots + 2), 0.0);
    if (!(lo > 0.0) || hi < lo) throw ParameterError("bad range '" + item + "'");
    for (double v = lo; v <= hi * (1.0 + 1e-12); v *= 2.0) out.push_back(v);
  }
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) throw std::logic_error("non-finite value reached CSV emission");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_int(long long v) { return std::to_string(v); }

std::string failure(const std::exception& e) {
  std::string msg = std::string("failed: ") + e.what();
  for (char& c : msg)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return msg;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::uint64_t cell_seed(std::uint64_t seed, double n, std::uint64_t salt) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(std::llround(n))), salt);
}

enum Salt : std::uint64_t { kDeploy = 1, kHighway = 2, kArterial = 3, kSessions = 4 };

double predicted_for(Scheme s, double lambda, double n, double ns, double nd, double alpha) {
  switch (s) {
    case Scheme::o: return lambda_o(lambda, n, ns, nd, alpha);
    case Scheme::p: return lambda_p(lambda, n, ns, nd, alpha);
    case Scheme::oh: return lambda_oh(lambda, n, ns, nd, alpha);
    default: return lambda_ph(lambda, n, ns, nd, alpha);
  }
}

// Slopes of the geometric mean of `col` against n, one per label.
void add_slopes(RunResult& res, const std::vector<std::string>& labels,
                const std::vector<double>& ns, const std::vector<double>& values,
                const std::string& quantity) {
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!(values[i] > 0.0)) continue;
    auto& cell = acc[labels[i]][ns[i]];
    cell.first += std::log(values[i]);
    cell.second += 1;
  }
  for (const auto& [label, by_n] : acc) {
    if (by_n.size() < 4) continue;
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, sum] : by_n) pts.emplace_back(n, std::exp(sum.first / sum.second));
    res.slopes.push_back({label, quantity, fit_slope(pts)});
  }
}

RunResult run_deploy(const ExperimentConfig& cfg) {
  RunResult res;
  res.table.header = {"seed", "n", "lambda", "side", "count", "count_over_n", "status"};
  struct Cell { double n; std::uint64_t seed; };
  std::vector<Cell> cells;
  for (double n : cfg.n_list)
    for (auto s : cfg.seeds) cells.push_back({n, s});
  res.table.rows.resize(cells.size());
  parallel_for(cells.size(), cfg.thread_count(), [&](std::size_t i) {
    const Cell& c = cells[i];
    const double lambda = cfg.lambda_for(c.n);
    auto& row = res.table.rows[i];
    try {
      const Deployment d = Deployment::sample(c.n, lambda, cell_seed(c.seed, c.n, kDeploy));
      row = {fmt_int(c.seed), fmt(c.n), fmt(lambda), fmt(d.side()), fmt_int(d.size()),
             fmt(d.size() / c.n), "ok"};
    } catch (const std::exception& e) {
      row = {fmt_int(c.seed), fmt(c.n), fmt(lambda), "", "", "", failure(e)};
    }
  });
  return res;
}

RunResult run_percolate(const ExperimentConfig& cfg) {
  RunResult res;
  res.table.header = {"seed", "n", "lambda", "gamma", "radius", "count", "largest",
                      "largest_fraction", "clusters", "giant", "max_exterior_distance",
                      "scaled_max", "status"};
  struct Cell { double n; std::uint64_t seed; double gamma; };
  std::vector<Cell> cells;
  for (double n : cfg.n_list)
    for (auto s : cfg.seeds)
      for (const auto& g : cfg.gamma_rules) cells.push_back({n, s, eval_expression(g, n)});
  res.table.rows.resize(cells.size());
  std::vector<double> scaled(cells.size(), 0.0);
  parallel_for(cells.size(), cfg.thread_count(), [&](std::size_t i) {
    const Cell& c = cells[i];
    const double lambda = cfg.lambda_for(c.n);
    const double r = std::sqrt(c.gamma / (lambda * 3.14159265358979323846));
    auto& row = res.table.rows[i];
    try {
      const Deployment d = Deployment::sample(c.n, lambda, cell_seed(c.seed, c.n, kDeploy));
      const ClusterLabeling cl = cluster(d, r, cfg.giant_fraction);
      double max_ext = 0.0, sm = 0.0;
      if (cl.giant_id) {
        const ExteriorStats st = exterior_stats(d, cl);
        max_ext = st.max_distance;
        sm = st.scaled_max;
      }
      scaled[i] = sm;
      row = {fmt_int(c.seed), fmt(c.n), fmt(lambda), fmt(c.gamma), fmt(r), fmt_int(d.size()),
             fmt_int(cl.largest()), fmt(d.empty() ? 0.0 : cl.largest() / double(d.size())),
             fmt_int(cl.num_clusters()), cl.giant_id ? "1" : "0", fmt(max_ext), fmt(sm),
             cl.giant_id ? "ok" : "no_giant"};
    } catch (const std::exception& e) {
      row = {fmt_int(c.seed), fmt(c.n), fmt(lambda), fmt(c.gamma), fmt(r),
             "", "", "", "", "", "", "", failure(e)};
    }
  });
  std::vector<std::string> labels;
  std::vector<double> ns;
  for (const Cell& c : cells) {
    labels.push_back("gamma=" + fmt(c.gamma));
    ns.push_back(c.n);
  }
  add_slopes(res, labels, ns, scaled, "scaled_max");
  return res;
}

struct Systems {
  Deployment d;
  std::unique_ptr<BackboneSystem> bs;
};

Systems build_systems(const ExperimentConfig& cfg, double n, std::uint64_t seed, Scheme scheme) {
  Systems s;
  s.d = Deployment::sample(n, cfg.lambda_for(n), cell_seed(seed, n, kDeploy));
  std::optional<HighwaySystem> hs;
  if (uses_highways(scheme)) hs = build_highways(s.d, cfg.highway, cell_seed(seed, n, kHighway));
  ArterialSystem ar = build_arterial(s.d, arterial_of(scheme), cell_seed(seed, n, kArterial));
  AccessPathSet acc = build_access(s.d, ar);
  s.bs = std::make_unique<BackboneSystem>(s.d, std::move(ar), std::move(acc), std::move(hs));
  return s;
}

RunResult run_backbone(const ExperimentConfig& cfg) {
  RunResult res;
  res.table.header = {"seed", "n", "lambda", "scheme", "ar_cells_per_side", "stations_per_cell",
                      "highway_intervals", "slab_rows", "slab_count", "per_slab", "eta_est",
                      "highways_per_direction", "links", "access_subslots", "status"};
  struct Cell { double n; std::uint64_t seed; Scheme scheme; };
  std::vector<Cell> cells;
  for (double n : cfg.n_list)
    for (auto s : cfg.seeds)
      for (Scheme sc : cfg.schemes) cells.push_back({n, s, sc});
  res.table.rows.resize(cells.size());
  std::vector<std::string> dumps(cells.size());
  parallel_for(cells.size(), cfg.thread_count(), [&](std::size_t i) {
    const Cell& c = cells[i];
    const double lambda = cfg.lambda_for(c.n);
    auto& row = res.table.rows[i];
    try {
      const Systems sys = build_systems(cfg, c.n, c.seed, c.scheme);
      const BackboneSystem& bs = *sys.bs;
      const ArterialSystem& ar = bs.arterial();
      std::string m = "0", rows = "0", slabs = "0", per = "0", eta = "0", hw = "0";
      if (bs.has_highways()) {
        const HighwaySystem& hs = bs.highways();
        m = fmt_int(hs.lattice.intervals());
        rows = fmt_int(hs.slab_rows);
        slabs = fmt_int(hs.slab_count);
        per = fmt_int(hs.per_slab);
        eta = fmt(hs.eta_est);
        hw = fmt_int(static_cast<long long>(hs.horizontal.size()));
      }
      row = {fmt_int(c.seed), fmt(c.n), fmt(lambda), scheme_name(c.scheme),
             fmt_int(ar.lattice.cols()), fmt_int(ar.per_cell), m, rows, slabs, per, eta, hw,
             fmt_int(static_cast<long long>(bs.link_count())),
             fmt_int(bs.schedule(BackboneSystem::kDrain).subslots_per_slot()), "ok"};
      if (!cfg.backbone_out.empty()) {
        std::ostringstream os;
        write_backbone_csv(os, bs);
        dumps[i] = os.str();
      }
    } catch (const std::exception& e) {
      row = {fmt_int(c.seed), fmt(c.n), fmt(lambda), scheme_name(c.scheme),
             "", "", "", "", "", "", "", "", "", "", failure(e)};
    }
  });
  if (!cfg.backbone_out.empty()) {
    std::ofstream out(cfg.backbone_out);
    out << "seed,n,scheme,";
    bool header = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::istringstream in(dumps[i]);
      std::string line;
      bool first = true;
      while (std::getline(in, line)) {
        if (first) {
          if (header) out << line << '\n';
          header = false;
          first = false;
          continue;
        }
        out << cells[i].seed << ',' << fmt(cells[i].n) << ',' << scheme_name(cells[i].scheme)
            << ',' << line << '\n';
      }
    }
  }
  return res;
}

RunResult run_sessions(const ExperimentConfig& cfg, bool keep_trees) {
  RunResult res;
  res.table.header = {"seed", "n", "lambda", "n_s", "n_d", "scheme", "throughput",
                      "bottleneck_layer", "predicted", "ratio", "max_link_load",
                      "max_ar_station_load", "max_highway_station_load", "status"};
  std::vector<std::string> labels;
  std::vector<double> ns, values;
  std::ofstream tree_out;
  if (keep_trees && !cfg.tree_out.empty()) {
    tree_out.open(cfg.tree_out);
    tree_out << "seed,n,n_d,session,scheme,layer,tx,rx\n";
  }
  for (double n : cfg.n_list) {
    const double lambda = cfg.lambda_for(n);
    const double n_s = std::round(cfg.ns_for(n));
    for (const std::string& nd_rule : cfg.nd_rules) {
      const double n_d = std::max(1.0, std::round(cfg.nd_for(nd_rule, n)));
      for (auto seed : cfg.seeds) {
        for (Scheme scheme : cfg.schemes) {
          std::vector<std::string> row{fmt_int(seed), fmt(n), fmt(lambda), fmt(n_s), fmt(n_d),
                                       scheme_name(scheme)};
          double thr = 0.0;
          try {
            const Systems sys = build_systems(cfg, n, seed, scheme);
            const auto sessions = generate_sessions(sys.d, static_cast<int>(n_s),
                                                    static_cast<int>(n_d),
                                                    cell_seed(seed, n, kSessions));
            ChannelParams cp;
            cp.alpha = cfg.alpha;
            cp.mode = cfg.attenuation_for(n, lambda);
            cp.interference = cfg.interference;
            Layer bottleneck = Layer::access;
            std::uint32_t max_link = 0, max_ar = 0, max_hw = 0;
            if (keep_trees) {
              std::vector<RoutingTree> trees;
              trees.reserve(sessions.size());
              LoadMap loads(*sys.bs);
              for (const auto& s : sessions) {
                trees.push_back(route(s, scheme, *sys.bs, cfg.tree));
                loads.add(trees.back());
              }
              RateTable rates(*sys.bs, cp);
              const ThroughputResult tr = measure_throughput(trees, loads, rates);
              thr = tr.throughput;
              bottleneck = tr.bottleneck;
              max_link = loads.max_link();
              max_ar = loads.max_ar_station();
              max_hw = loads.max_highway_station();
              if (tree_out.is_open()) {
                std::ostringstream os;
                write_tree_csv(os, trees, false);
                std::istringstream in(os.str());
                std::string line;
                while (std::getline(in, line))
                  tree_out << seed << ',' << fmt(n) << ',' << fmt(n_d) << ',' << line << '\n';
              }
            } else {
              const SimulationResult sr = simulate_sessions(*sys.bs, sessions, scheme, cfg.tree,
                                                            cp, cfg.thread_count());
              thr = sr.throughput;
              bottleneck = sr.bottleneck;
              max_link = sr.max_link_load;
              max_ar = sr.max_ar_station_load;
              max_hw = sr.max_highway_station_load;
            }
            const double pred = predicted_for(scheme, lambda, n, n_s, n_d, cfg.alpha);
            row.insert(row.end(), {fmt(thr), layer_name(bottleneck), fmt(pred), fmt(thr / pred),
                                   fmt_int(max_link), fmt_int(max_ar), fmt_int(max_hw), "ok"});
          } catch (const std::exception& e) {
            thr = 0.0;
            row.insert(row.end(), {"", "", "", "", "", "", "", failure(e)});
          }
          res.table.rows.push_back(std::move(row));
          labels.push_back(std::string("scheme=") + scheme_name(scheme) + ";n_d=" + nd_rule);
          ns.push_back(n);
          values.push_back(thr);
        }
      }
    }
  }
  add_slopes(res, labels, ns, values, "throughput");
  return res;
}

RunResult run_bounds(const ExperimentConfig& cfg) {
  RunResult res;
  res.table.header = {"lambda", "n", "n_s", "n_d", "alpha", "upper", "lc_star", "lower",
                      "best_scheme", "ratio", "regime_upper", "regime_lower", "status"};
  std::vector<std::string> labels;
  std::vector<double> ns, ratios;
  for (double n : cfg.n_list) {
    for (const std::string& nd_rule : cfg.nd_rules) {
      const double lambda = cfg.lambda_for(n);
      const double n_s = cfg.ns_for(n);
      const double n_d = cfg.nd_for(nd_rule, n);
      std::vector<std::string> row{fmt(lambda), fmt(n), fmt(n_s), fmt(n_d), fmt(cfg.alpha)};
      double ratio = 0.0;
      try {
        const UpperBound up = upper_bound(lambda, n, n_s, n_d, cfg.alpha, cfg.grid_size);
        const LowerBound lo = lower_bound(lambda, n, n_s, n_d, cfg.alpha);
        ratio = up.value / lo.value;
        row.insert(row.end(), {fmt(up.value), fmt(up.lc_star), fmt(lo.value), lo.scheme,
                               fmt(ratio), up.regime, lo.regime, "ok"});
      } catch (const std::exception& e) {
        row.insert(row.end(), {"", "", "", "", "", "", "", failure(e)});
      }
      res.table.rows.push_back(std::move(row));
      labels.push_back("n_d=" + nd_rule);
      ns.push_back(n);
      ratios.push_back(ratio);
    }
  }
  add_slopes(res, labels, ns, ratios, "ratio");
  return res;
}

RunResult run_sweep(const ExperimentConfig& cfg) {
  RunResult res;
  for (const std::string& value : cfg.sweep_values) {
    ConfigMap sub = cfg.raw;
    sub["mode"] = mode_name(cfg.sweep_mode);
    sub[cfg.sweep_key] = value;
    sub.erase("sweep_mode");
    sub.erase("sweep_key");
    sub.erase("sweep_values");
    RunResult part = run(validate_config(sub));
    if (res.table.header.empty()) {
      res.table.header = {"sweep_" + cfg.sweep_key};
      res.table.header.insert(res.table.header.end(), part.table.header.begin(),
                              part.table.header.end());
    }
    std::string cell = value;
    std::replace(cell.begin(), cell.end(), ',', ';');
    for (auto& row : part.table.rows) {
      row.insert(row.begin(), cell);
      res.table.rows.push_back(std::move(row));
    }
    for (auto& s : part.slopes) {
      s.label = cfg.sweep_key + "=" + value + ";" + s.label;
      res.slopes.push_back(std::move(s));
    }
  }
  return res;
}

double number(const ConfigMap& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    return eval_expression(it->second, 0.0);
  } catch (const std::exception& e) {
    throw ValidationError(key, e.what());
  }
}

}  // namespace

ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(lineno), "expected key=value");
    const std::string key = lower(trim(line.substr(0, eq)));
    if (key.empty()) throw ValidationError("line " + std::to_string(lineno), "empty key");
    cfg[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open '" + path + "'");
  return parse_config(in);
}

void apply_overrides(ConfigMap& cfg, std::span<const std::string> overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError(o, "override must be key=value");
    cfg[lower(trim(o.substr(0, eq)))] = trim(o.substr(eq + 1));
  }
}

double eval_expression(const std::string& expr, double n) {
  return ExprParser(expr, n).parse();
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::deploy: return "deploy";
    case Mode::percolate: return "percolate";
    case Mode::backbone: return "backbone";
    case Mode::route: return "route";
    case Mode::simulate: return "simulate";
    case Mode::bounds: return "bounds";
    default: return "sweep";
  }
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::deploy, Mode::percolate, Mode::backbone, Mode::route, Mode::simulate,
                 Mode::bounds, Mode::sweep})
    if (s == mode_name(m)) return m;
  throw ParameterError("unknown mode '" + s + "'");
}

double ExperimentConfig::lambda_for(double n) const {
  if (lambda_rule == "dense") return n;
  if (lambda_rule == "extended") return 1.0;
  return eval_expression(lambda_rule, n);
}

double ExperimentConfig::ns_for(double n) const { return eval_expression(ns_rule, n); }

double ExperimentConfig::nd_for(const std::string& rule, double n) const {
  return eval_expression(rule, n);
}

Attenuation ExperimentConfig::attenuation_for(double n, double lambda) const {
  switch (attenuation) {
    case AttenuationRule::dense: return Attenuation::dense;
    case AttenuationRule::extended: return Attenuation::extended;
    default: return lambda >= n ? Attenuation::dense : Attenuation::extended;
  }
}

int ExperimentConfig::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split(s, ',')) {
    const auto dots = item.find("..");
    auto num = [&](const std::string& t) {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(trim(t), &used);
      if (used != trim(t).size()) throw ParameterError("bad seed '" + t + "'");
      return static_cast<std::uint64_t>(v);
    };
    try {
      if (dots == std::string::npos) {
        out.push_back(num(item));
      } else {
        const auto lo = num(item.substr(0, dots)), hi = num(item.substr(dots + 2));
        if (hi < lo) throw ParameterError("bad seed range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::invalid_argument&) {
      throw ParameterError("bad seed '" + item + "'");
    } catch (const std::out_of_range&) {
      throw ParameterError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw ParameterError("empty seed list");
  return out;
}

std::vector<std::uint64_t> default_seeds() {
  if (const char* env = std::getenv("PERCAP_SEEDS"); env && *env) return parse_seed_list(env);
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 1; s <= 10; ++s) out.push_back(s);
  return out;
}

ExperimentConfig validate_config(const ConfigMap& cfg) {
  static const char* known[] = {
      "mode", "n", "lambda", "n_s", "n_d", "alpha", "schemes", "seeds", "gamma",
      "giant_fraction", "grid_size", "slack", "tree", "attenuation", "interference",
      "c_squared", "kappa", "central_stations", "spread_remainder", "threads", "tree_out",
      "backbone_out", "sweep_mode", "sweep_key", "sweep_values"};
  for (const auto& [key, value] : cfg) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ValidationError(key, "unknown key");
  }
  ExperimentConfig c;
  c.raw = cfg;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = cfg.find(key);
    return it == cfg.end() ? nullptr : &it->second;
  };
  auto guard = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError(key, e.what());
    }
  };

  const std::string* mode = get("mode");
  if (!mode) throw ValidationError("mode", "missing");
  guard("mode", [&] { c.mode = parse_mode(*mode); });

  if (c.mode == Mode::sweep) {
    const std::string* sm = get("sweep_mode");
    const std::string* sk = get("sweep_key");
    const std::string* sv = get("sweep_values");
    if (!sm || !sk || !sv) throw ValidationError("sweep_mode", "sweep needs sweep_mode, sweep_key, sweep_values");
    guard("sweep_mode", [&] { c.sweep_mode = parse_mode(*sm); });
    if (c.sweep_mode == Mode::sweep) throw ValidationError("sweep_mode", "cannot nest sweeps");
    c.sweep_key = lower(*sk);
    if (std::find(std::begin(known), std::end(known), c.sweep_key) == std::end(known) ||
        c.sweep_key.rfind("sweep", 0) == 0 || c.sweep_key == "mode")
      throw ValidationError("sweep_key", "cannot sweep '" + c.sweep_key + "'");
    c.sweep_values = split(*sv, ';');
    if (c.sweep_values.empty()) throw ValidationError("sweep_values", "empty");
    // Validate every sub-run before anything executes.
    for (const std::string& v : c.sweep_values) {
      ConfigMap sub = cfg;
      sub["mode"] = mode_name(c.sweep_mode);
      sub[c.sweep_key] = v;
      sub.erase("sweep_mode");
      sub.erase("sweep_key");
      sub.erase("sweep_values");
      validate_config(sub);
    }
    if (const std::string* t = get("threads"))
      guard("threads", [&] { c.threads = static_cast<int>(eval_expression(*t, 0.0)); });
    return c;
  }

  const std::string* n = get("n");
  if (!n) throw ValidationError("n", "missing");
  guard("n", [&] { c.n_list = parse_n_list(*n); });
  if (c.n_list.empty()) throw ValidationError("n", "empty list");
  for (double v : c.n_list)
    if (!(v >= 2.0) || !std::isfinite(v)) throw ValidationError("n", "every n must be >= 2");

  if (const std::string* v = get("lambda")) c.lambda_rule = lower(*v);
  if (const std::string* v = get("n_s")) c.ns_rule = *v;
  if (const std::string* v = get("n_d")) c.nd_rules = split(*v, ',');
  if (c.nd_rules.empty()) throw ValidationError("n_d", "empty list");
  c.alpha = number(cfg, "alpha", 3.0);
  if (!(c.alpha > 2.0)) throw ValidationError("alpha", "must exceed 2");
  if (const std::string* v = get("schemes")) {
    c.schemes.clear();
    for (const auto& s : split(*v, ',')) guard("schemes", [&] { c.schemes.push_back(parse_scheme(s)); });
    if (c.schemes.empty()) throw ValidationError("schemes", "empty list");
  }
  if (const std::string* v = get("seeds")) {
    guard("seeds", [&] { c.seeds = parse_seed_list(*v); });
  } else {
    guard("seeds", [&] { c.seeds = default_seeds(); });
  }
  if (const std::string* v = get("gamma")) c.gamma_rules = split(*v, ',');
  if (c.mode == Mode::percolate && c.gamma_rules.empty()) throw ValidationError("gamma", "missing");
  c.giant_fraction = number(cfg, "giant_fraction", 0.5);
  if (!(c.giant_fraction > 0.0 && c.giant_fraction <= 1.0))
    throw ValidationError("giant_fraction", "must lie in (0, 1]");
  c.grid_size = static_cast<int>(number(cfg, "grid_size", 256));
  if (c.grid_size < 32) throw ValidationError("grid_size", "must be >= 32");
  c.slack = number(cfg, "slack", 8.0);
  if (!(c.slack >= 1.0)) throw ValidationError("slack", "must be >= 1");
  if (const std::string* v = get("tree")) {
    if (*v == "est") c.tree = TreeKind::est;
    else if (*v == "emst") c.tree = TreeKind::emst;
    else throw ValidationError("tree", "expected est or emst");
  }
  if (const std::string* v = get("attenuation")) {
    if (*v == "auto") c.attenuation = AttenuationRule::automatic;
    else if (*v == "dense") c.attenuation = AttenuationRule::dense;
    else if (*v == "extended") c.attenuation = AttenuationRule::extended;
    else throw ValidationError("attenuation", "expected auto, dense or extended");
  }
  if (const std::string* v = get("interference")) {
    if (*v == "worst_case") c.interference = Interference::worst_case;
    else if (*v == "placed") c.interference = Interference::placed;
    else throw ValidationError("interference", "expected worst_case or placed");
  }
  c.highway.c_squared = number(cfg, "c_squared", c.highway.c_squared);
  c.highway.kappa = static_cast<int>(number(cfg, "kappa", 0));
  c.highway.central_stations = number(cfg, "central_stations", 0) != 0.0;
  c.highway.spread_remainder = number(cfg, "spread_remainder", 0) != 0.0;
  guard("c_squared", [&] {
    const double p = 1.0 - std::exp(-c.highway.c_squared);
    const int k = c.highway.kappa > 0 ? c.highway.kappa : default_kappa(p);
    if (!(p > 5.0 / 6.0)) throw ParameterError("needs p = 1 - exp(-c^2) > 5/6");
    if (!(2.0 + k * std::log(6.0 * (1.0 - p)) < 0.0))
      throw ValidationError("kappa", "violates 2 + kappa log(6(1-p)) < 0");
  });
  c.threads = static_cast<int>(number(cfg, "threads", 0));
  if (const std::string* v = get("tree_out")) c.tree_out = *v;
  if (const std::string* v = get("backbone_out")) c.backbone_out = *v;

  // Every rule must evaluate to an admissible value at every n.
  for (double nv : c.n_list) {
    double lambda = 0.0, ns = 0.0;
    guard("lambda", [&] { lambda = c.lambda_for(nv); });
    if (!(lambda >= 1.0 && lambda <= nv))
      throw ValidationError("lambda", "must lie in [1, n] (got " + fmt(lambda) + " at n=" + fmt(nv) + ")");
    guard("n_s", [&] { ns = c.ns_for(nv); });
    if (!(ns > 1.0 && ns <= nv))
      throw ValidationError("n_s", "must lie in (1, n] (got " + fmt(ns) + " at n=" + fmt(nv) + ")");
    for (const auto& r : c.nd_rules) {
      double nd = 0.0;
      guard("n_d", [&] { nd = c.nd_for(r, nv); });
      if (!(nd >= 1.0 && nd <= nv))
        throw ValidationError("n_d", "'" + r + "' must lie in [1, n] at n=" + fmt(nv));
    }
    for (const auto& g : c.gamma_rules) {
      double gv = 0.0;
      guard("gamma", [&] { gv = eval_expression(g, nv); });
      if (!(gv > 0.0)) throw ValidationError("gamma", "must be positive");
    }
  }
  return c;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 4) throw ParameterError("fit_slope needs at least 4 points");
  double mx = 0.0, my = 0.0;
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !(v > 0.0)) throw DataError("fit_slope needs positive n and values");
    mx += std::log(n);
    my += std::log(v);
  }
  const double k = static_cast<double>(points.size());
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : points) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (!(sxx > 0.0)) throw DataError("fit_slope needs at least two distinct n");
  SlopeFit f;
  f.points = points.size();
  f.slope = sxy / sxx;
  double rss = 0.0;
  for (const auto& [n, v] : points) {
    const double r = std::log(v) - my - f.slope * (std::log(n) - mx);
    rss += r * r;
  }
  f.stderr_slope = std::sqrt(rss / (k - 2.0) / sxx);
  return f;
}

void CsvTable::write(std::ostream& out) const {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

RunResult run(const ExperimentConfig& cfg) {
  RunResult res;
  switch (cfg.mode) {
    case Mode::deploy: res = run_deploy(cfg); break;
    case Mode::percolate: res = run_percolate(cfg); break;
    case Mode::backbone: res = run_backbone(cfg); break;
    case Mode::route: res = run_sessions(cfg, true); break;
    case Mode::simulate: res = run_sessions(cfg, false); break;
    case Mode::bounds: res = run_bounds(cfg); break;
    case Mode::sweep: res = run_sweep(cfg); break;
  }
  res.failed_rows = 0;
  for (const auto& row : res.table.rows)
    if (!row.empty() && row.back().rfind("failed", 0) == 0) ++res.failed_rows;
  return res;
}

void write_slopes_csv(std::ostream& out, std::span<const SlopeRow> slopes) {
  out << "label,quantity,slope,stderr,points\n";
  for (const SlopeRow& s : slopes)
    out << s.label << ',' << s.quantity << ',' << fmt(s.fit.slope) << ','
        << fmt(s.fit.stderr_slope) << ',' << s.fit.points << '\n';
}

}  // namespace percap
