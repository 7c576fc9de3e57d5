#include "percap/spatial.hpp"

#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "percap/error.hpp"
#include "percap/union_find.hpp"

namespace percap {

GridIndex::GridIndex(std::span<const Point> pts, double side, double bucket_side)
    : side_(side) {
  if (!(side > 0.0)) side = 1.0, side_ = 1.0;
  double b = bucket_side > 0.0 ? bucket_side : side;
  dim_ = static_cast<int>(std::min(4096.0, std::max(1.0, std::floor(side / b))));
  bucket_ = side_ / dim_;
  const std::size_t nb = static_cast<std::size_t>(dim_) * dim_;
  start_.assign(nb + 1, 0);
  std::vector<std::uint32_t> bucket_of(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bucket_of[i] = static_cast<std::uint32_t>(
        static_cast<std::size_t>(coord(pts[i].y)) * dim_ + coord(pts[i].x));
    ++start_[bucket_of[i] + 1];
  }
  std::partial_sum(start_.begin(), start_.end(), start_.begin());
  ids_.resize(pts.size());
  pts_.resize(pts.size());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::uint32_t k = fill[bucket_of[i]]++;
    ids_[k] = static_cast<NodeId>(i);
    pts_[k] = pts[i];
  }
}

std::vector<NodeId> GridIndex::within(Point p, double r) const {
  std::vector<NodeId> out;
  for_each_within(p, r, [&](NodeId id, double) { out.push_back(id); });
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void check_density(double n, double lambda) {
  if (!(n >= 1.0) || !std::isfinite(n))
    throw ParameterError("n must be >= 1");
  if (!(lambda >= 1.0) || !(lambda <= n))
    throw ParameterError("lambda must lie in [1, n]");
}

}  // namespace

Deployment Deployment::sample(double n, double lambda, std::uint64_t seed) {
  check_density(n, lambda);
  Deployment d;
  d.n_ = n;
  d.lambda_ = lambda;
  d.side_ = std::sqrt(n / lambda);
  d.seed_ = seed;
  std::mt19937_64 gen(seed);
  std::poisson_distribution<long long> count(n);
  const long long k = count(gen);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  d.points_.resize(static_cast<std::size_t>(k));
  for (auto& p : d.points_) {
    p.x = unit(gen) * d.side_;
    p.y = unit(gen) * d.side_;
  }
  d.build_index();
  return d;
}

Deployment Deployment::from_points(double n, double lambda, std::vector<Point> pts,
                                   std::uint64_t seed) {
  if (!(n > 0.0) || !(lambda > 0.0))
    throw ParameterError("n and lambda must be positive");
  Deployment d;
  d.n_ = n;
  d.lambda_ = lambda;
  d.side_ = std::sqrt(n / lambda);
  d.seed_ = seed;
  for (const Point& p : pts) {
    if (p.x < 0.0 || p.y < 0.0 || p.x > d.side_ || p.y > d.side_)
      throw ParameterError("point outside the deployment region");
  }
  d.points_ = std::move(pts);
  d.build_index();
  return d;
}

void Deployment::build_index() {
  const double per_bucket = 2.0;
  const double dim = std::max(1.0, std::floor(std::sqrt(points_.size() / per_bucket)));
  grid_ = GridIndex(points_, side_, side_ / dim);
}

void Deployment::write_csv(std::ostream& out) const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# n=%.17g,lambda=%.17g,seed=%llu\n", n_, lambda_,
                static_cast<unsigned long long>(seed_));
  out << buf << "index,x,y\n";
  for (std::size_t i = 0; i < points_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, points_[i].x, points_[i].y);
    out << buf;
  }
}

Deployment Deployment::read_csv(std::istream& in) {
  std::string line;
  double n = 0, lambda = 0;
  unsigned long long seed = 0;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# n=%lf,lambda=%lf,seed=%llu", &n, &lambda, &seed) != 3)
    throw DataError("deployment csv: bad header");
  if (!std::getline(in, line) || line != "index,x,y")
    throw DataError("deployment csv: bad column line");
  std::vector<Point> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t idx = 0;
    Point p;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf", &idx, &p.x, &p.y) != 3 || idx != pts.size())
      throw DataError("deployment csv: bad row " + std::to_string(pts.size()));
    pts.push_back(p);
  }
  return from_points(n, lambda, std::move(pts), seed);
}

NodeId nearest_node(const Deployment& d, Point p) {
  if (d.empty()) throw StateError("nearest_node on an empty deployment");
  return *d.grid().nearest(p);
}

SchemeLattice::SchemeLattice(double region_side, double cell_side, double theta)
    : side_(region_side) {
  if (!(region_side > 0.0) || !(cell_side > 0.0))
    throw ParameterError("lattice sides must be positive");
  if (theta == 0.0) {
    rotated_ = false;
    intervals_ = static_cast<int>(std::max(1.0, std::floor(region_side / cell_side)));
    rows_ = cols_ = intervals_;
    cell_ = region_side / intervals_;
    spacing_ = cell_;
  } else if (std::abs(theta - kRotated) < 1e-12) {
    rotated_ = true;
    intervals_ = static_cast<int>(
        std::max(1.0, std::floor(region_side / (std::sqrt(2.0) * cell_side))));
    spacing_ = region_side / intervals_;
    cell_ = spacing_ / std::sqrt(2.0);
    rows_ = cols_ = 2 * intervals_ + 1;
  } else {
    throw ParameterError("lattice rotation must be 0 or pi/4");
  }
}

bool SchemeLattice::is_cell(int r, int c) const {
  if (r < 0 || c < 0 || r >= rows_ || c >= cols_) return false;
  return !rotated_ || ((r + c) & 1) == 1;
}

std::size_t SchemeLattice::cell_count() const {
  if (!rotated_) return static_cast<std::size_t>(rows_) * cols_;
  return 2 * static_cast<std::size_t>(intervals_) * (intervals_ + 1);
}

std::pair<int, int> SchemeLattice::cell_of(Point p) const {
  if (!rotated_) {
    const int r = std::clamp(static_cast<int>(std::floor(p.y / cell_)), 0, rows_ - 1);
    const int c = std::clamp(static_cast<int>(std::floor(p.x / cell_)), 0, cols_ - 1);
    return {r, c};
  }
  const double a = p.x / spacing_, b = p.y / spacing_;
  const long fu = static_cast<long>(std::floor(a + b));
  const long fv = static_cast<long>(std::floor(a - b));
  int c = static_cast<int>(std::clamp<long>(fu + fv + 1, 0, cols_ - 1));
  int r = static_cast<int>(std::clamp<long>(fu - fv, 0, rows_ - 1));
  if (((r + c) & 1) == 0) r += (r > 0) ? -1 : 1;
  return {r, c};
}

Point SchemeLattice::cell_center(int r, int c) const {
  if (!rotated_) return {(c + 0.5) * cell_, (r + 0.5) * cell_};
  return {c * spacing_ / 2.0, r * spacing_ / 2.0};
}

bool SchemeLattice::contains(int r, int c, Point p) const {
  if (!is_cell(r, c)) return false;
  return cell_of(p) == std::pair<int, int>{r, c};
}

Point SchemeLattice::nearest_in_cell(int r, int c, Point p) const {
  if (!rotated_) {
    return {std::clamp(p.x, c * cell_, (c + 1) * cell_),
            std::clamp(p.y, r * cell_, (r + 1) * cell_)};
  }
  // The cell is |dx| + |dy| <= spacing/2 around its center; clamp in the
  // diagonal frame where it is a box.
  const Point ctr = cell_center(r, c);
  const double h = spacing_ / 2.0;
  const double dx = p.x - ctr.x, dy = p.y - ctr.y;
  const double u = std::clamp(dx + dy, -h, h), v = std::clamp(dx - dy, -h, h);
  return {ctr.x + (u + v) / 2.0, ctr.y + (u - v) / 2.0};
}

std::pair<int, int> SchemeLattice::lattice_coords(int r, int c) const {
  if (!rotated_) return {r, c};
  return {(r + c - 1) / 2, (c - r - 1) / 2 + intervals_ + 1};
}

namespace {

EdgeList prim(std::span<const Point> pts) {
  const std::size_t k = pts.size();
  EdgeList out;
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> parent(k, 0);
  std::vector<char> in(k, 0);
  best[0] = 0.0;
  for (std::size_t it = 0; it < k; ++it) {
    std::size_t u = k;
    for (std::size_t i = 0; i < k; ++i)
      if (!in[i] && (u == k || best[i] < best[u])) u = i;
    in[u] = 1;
    if (it > 0) {
      const double len = std::sqrt(best[u]);
      out.edges.push_back({parent[u], static_cast<std::uint32_t>(u), len});
      out.total_length += len;
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (in[i]) continue;
      const double d2 = distance_sq(pts[u], pts[i]);
      if (d2 < best[i]) {
        best[i] = d2;
        parent[i] = static_cast<std::uint32_t>(u);
      }
    }
  }
  return out;
}

// Boruvka rounds; each component's cheapest outgoing edge is found by ring
// search on a bucket grid. Ties are ordered by (length, min id, max id).
EdgeList boruvka(std::span<const Point> pts) {
  const std::size_t k = pts.size();
  double lo_x = pts[0].x, lo_y = pts[0].y, hi = 0.0;
  for (const Point& p : pts) lo_x = std::min(lo_x, p.x), lo_y = std::min(lo_y, p.y);
  std::vector<Point> shifted(k);
  for (std::size_t i = 0; i < k; ++i) {
    shifted[i] = {pts[i].x - lo_x, pts[i].y - lo_y};
    hi = std::max({hi, shifted[i].x, shifted[i].y});
  }
  hi = std::max(hi, 1e-12);
  GridIndex grid(shifted, hi, hi / std::max(1.0, std::floor(std::sqrt(k / 2.0))));

  UnionFind uf(k);
  std::vector<std::uint32_t> comp(k);
  EdgeList out;
  struct Cand {
    double d2;
    std::uint32_t a, b;
    bool operator<(const Cand& o) const {
      if (d2 != o.d2) return d2 < o.d2;
      if (a != o.a) return a < o.a;
      return b < o.b;
    }
  };
  const Cand none{std::numeric_limits<double>::infinity(), 0, 0};
  std::vector<Cand> best(k, none);
  while (out.edges.size() + 1 < k) {
    for (std::size_t i = 0; i < k; ++i) comp[i] = static_cast<std::uint32_t>(uf.find(i));
    std::fill(best.begin(), best.end(), none);
    for (std::size_t i = 0; i < k; ++i) {
      const std::uint32_t ci = comp[i];
      auto j = grid.nearest_if(
          shifted[i], [&](NodeId id) { return comp[id] != ci; }, best[ci].d2);
      if (!j) continue;
      const double d2 = distance_sq(shifted[i], shifted[*j]);
      const Cand c{d2, std::min<std::uint32_t>(i, *j), std::max<std::uint32_t>(i, *j)};
      if (c < best[ci]) best[ci] = c;
    }
    bool merged = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (comp[c] != c || !std::isfinite(best[c].d2)) continue;
      if (uf.unite(best[c].a, best[c].b)) {
        const double len = distance(pts[best[c].a], pts[best[c].b]);
        out.edges.push_back({best[c].a, best[c].b, len});
        out.total_length += len;
        merged = true;
      }
    }
    if (!merged) break;
  }
  return out;
}

}  // namespace

EdgeList emst(std::span<const Point> pts) {
  if (pts.size() < 2) throw ParameterError("emst needs at least 2 points");
  if (pts.size() <= 2048) return prim(pts);
  return boruvka(pts);
}

double emst_length_statistic(const Deployment& d, int K, int set_size,
                             std::uint64_t seed) {
  if (set_size < 2) throw ParameterError("set_size must be >= 2");
  if (K < 1) throw ParameterError("K must be >= 1");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> pts(static_cast<std::size_t>(set_size));
  double sum = 0.0;
  for (int t = 0; t < K; ++t) {
    for (auto& p : pts) {
      p.x = unit(gen) * d.side();
      p.y = unit(gen) * d.side();
    }
    sum += emst(pts).total_length;
  }
  return sum / K;
}

}  // namespace percap
