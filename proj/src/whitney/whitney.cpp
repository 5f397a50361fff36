#include "gmt/whitney.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "gmt/rng.hpp"

namespace gmt {

Box DyadicCube::box(int dim) const {
  Box b;
  double s = side();
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = static_cast<double>(anchor[k]) * s;
    b.hi[k] = static_cast<double>(anchor[k] + 1) * s;
  }
  return b;
}

Box DyadicCube::dilate(int dim, double lambda) const {
  Box b;
  double s = side();
  for (int k = 0; k < dim; ++k) {
    double c = (static_cast<double>(anchor[k]) + 0.5) * s;
    b.lo[k] = c - 0.5 * lambda * s;
    b.hi[k] = c + 0.5 * lambda * s;
  }
  return b;
}

Point DyadicCube::center(int dim) const {
  Point c{0, 0, 0};
  for (int k = 0; k < dim; ++k) c[k] = (static_cast<double>(anchor[k]) + 0.5) * side();
  return c;
}

DyadicCube DyadicCube::parent(int dim) const {
  DyadicCube p{level + 1, {0, 0, 0}};
  for (int k = 0; k < dim; ++k) p.anchor[k] = anchor[k] >> 1;
  return p;
}

DyadicCube cube_at(const Point& x, int level, int dim) {
  DyadicCube q{level, {0, 0, 0}};
  double s = std::ldexp(1.0, level);
  for (int k = 0; k < dim; ++k) q.anchor[k] = static_cast<std::int64_t>(std::floor(x[k] / s));
  return q;
}

std::size_t DyadicCubeHash::operator()(const DyadicCube& q) const {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(q.level));
  for (auto a : q.anchor) h = splitmix64(h ^ static_cast<std::uint64_t>(a));
  return static_cast<std::size_t>(h);
}

std::optional<std::size_t> WhitneyForest::find(const DyadicCube& q) const {
  auto it = index_.find(q);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> WhitneyForest::locate(const Point& x) const {
  if (cubes.empty()) return std::nullopt;
  for (int m = min_level_; m <= max_level_; ++m)
    if (auto i = find(cube_at(x, m, dim))) return i;
  return std::nullopt;
}

void WhitneyForest::finalize() {
  std::sort(cubes.begin(), cubes.end());
  cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
  std::sort(truncated_flags.begin(), truncated_flags.end());
  truncated_flags.erase(std::unique(truncated_flags.begin(), truncated_flags.end()), truncated_flags.end());
  index_.clear();
  index_.reserve(cubes.size());
  min_level_ = cubes.empty() ? 0 : cubes.front().level;
  max_level_ = cubes.empty() ? 0 : cubes.back().level;
  for (std::size_t i = 0; i < cubes.size(); ++i) index_.emplace(cubes[i], i);

  adjacency.assign(cubes.size(), {});
  int noffsets = 1;
  for (int k = 0; k < dim; ++k) noffsets *= 3;
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const DyadicCube& q = cubes[i];
    Box qb = q.box(dim);
    for (int code = 0; code < noffsets; ++code) {
      DyadicCube n = q;
      int c = code;
      bool zero = true;
      for (int k = 0; k < dim; ++k) {
        int o = c % 3 - 1;
        c /= 3;
        n.anchor[k] += o;
        if (o != 0) zero = false;
      }
      if (zero) continue;
      // Neighbours at least as large as q contain one of its neighbouring cells;
      // smaller neighbours find q from their side.
      for (int m = q.level; m <= std::min(q.level + 8, max_level_); ++m) {
        if (auto j = find(n); j && *j != i && box_box_dist(qb, cubes[*j].box(dim)) == 0) {
          adjacency[i].push_back(*j);
          adjacency[*j].push_back(i);
        }
        n = n.parent(dim);
      }
    }
  }
  for (auto& a : adjacency) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
}

namespace {

bool overlaps_interior(const Box& a, const Box& b, int dim) {
  for (int k = 0; k < dim; ++k)
    if (!(a.lo[k] < b.hi[k] && b.lo[k] < a.hi[k])) return false;
  return true;
}

struct Builder {
  int dim;
  double K;
  Box box;
  int n_min, n_top;
  const BoxPredicate& hits;
  const BoxPredicate& region;
  std::set<DyadicCube> found;
  std::vector<DyadicCube> truncated;

  bool admissible(const DyadicCube& q) const { return !hits(q.dilate(dim, K)); }

  void process(DyadicCube q) {
    if (!region(q.box(dim))) return;
    if (admissible(q)) {
      if (q.level == n_top) {
        for (int climb = 0; climb < 64; ++climb) {
          DyadicCube p = q.parent(dim);
          if (!admissible(p)) break;
          q = p;
        }
      }
      found.insert(q);
      return;
    }
    if (q.level <= n_min) {
      truncated.push_back(q);
      return;
    }
    for (int mask = 0; mask < (1 << dim); ++mask) {
      DyadicCube c{q.level - 1, {0, 0, 0}};
      for (int k = 0; k < dim; ++k) c.anchor[k] = 2 * q.anchor[k] + ((mask >> k) & 1);
      if (overlaps_interior(c.box(dim), box, dim)) process(c);
    }
  }
};

}  // namespace

WhitneyForest whitney_build(int dim, double K, const Box& box, int n_min, const BoxPredicate& dilate_hits_complement,
                            const BoxPredicate& region) {
  check_dim(dim);
  if (!(K >= 3)) throw InputError("whitney: K must be >= 3");
  if (!box.is_finite()) throw InputError("whitney: box must be finite");
  double extent = 0;
  for (int k = 0; k < dim; ++k) {
    if (!(box.hi[k] > box.lo[k])) throw InputError("whitney: box must have positive extent");
    extent = std::max(extent, box.hi[k] - box.lo[k]);
  }
  int n_top = std::max(n_min, static_cast<int>(std::ceil(std::log2(extent))));
  Builder b{dim, K, box, n_min, n_top, dilate_hits_complement, region, {}, {}};
  double s = std::ldexp(1.0, n_top);
  Anchor lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    lo[k] = static_cast<std::int64_t>(std::floor(box.lo[k] / s));
    hi[k] = static_cast<std::int64_t>(std::ceil(box.hi[k] / s)) - 1;
  }
  Anchor a = lo;
  while (true) {
    DyadicCube q{n_top, a};
    if (overlaps_interior(q.box(dim), box, dim)) b.process(q);
    int k = 0;
    while (k < dim && a[k] == hi[k]) {
      a[k] = lo[k];
      ++k;
    }
    if (k == dim) break;
    ++a[k];
  }
  WhitneyForest f;
  f.dim = dim;
  f.K = K;
  f.n_min = n_min;
  f.cubes.assign(b.found.begin(), b.found.end());
  f.truncated_flags = std::move(b.truncated);
  f.finalize();
  return f;
}

WhitneyForest whitney_decompose(const ImplicitDomain& domain, double K, const Box& box, int n_min) {
  BoxPredicate hits = [&domain](const Box& b) { return box_hits_complement(domain, b); };
  BoxPredicate region = [&domain](const Box& b) { return box_hits_closure(domain, b); };
  return whitney_build(domain.dim, K, box, n_min, hits, region);
}

double cube_distance(const DyadicCube& a, const DyadicCube& b, int dim) {
  return box_box_dist(a.box(dim), b.box(dim));
}

std::vector<int> whitney_distances_from(const WhitneyForest& forest, std::size_t q) {
  std::vector<int> d(forest.size(), 0);
  if (q >= forest.size()) throw InputError("whitney_distance: cube index out of range");
  std::deque<std::size_t> queue{q};
  d[q] = 1;
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : forest.adjacency[u])
      if (d[v] == 0) {
        d[v] = d[u] + 1;
        queue.push_back(v);
      }
  }
  return d;
}

CubePath whitney_distance(const WhitneyForest& forest, std::size_t q, std::size_t r) {
  if (q >= forest.size() || r >= forest.size()) throw InputError("whitney_distance: cube index out of range");
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> prev(forest.size(), none);
  std::deque<std::size_t> queue{q};
  prev[q] = q;
  while (!queue.empty() && prev[r] == none) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : forest.adjacency[u])
      if (prev[v] == none) {
        prev[v] = u;
        queue.push_back(v);
      }
  }
  CubePath path;
  if (prev[r] == none) return path;
  for (std::size_t v = r;; v = prev[v]) {
    path.cubes.push_back(v);
    if (v == q) break;
  }
  std::reverse(path.cubes.begin(), path.cubes.end());
  path.connected = true;
  path.length_d = static_cast<int>(path.cubes.size());
  return path;
}

DisconnectedPairs::DisconnectedPairs(std::vector<std::pair<std::size_t, std::size_t>> p)
    : std::runtime_error([&] {
        std::string msg = "fit_uniformity: disconnected pairs:";
        for (auto [a, b] : p) msg += " (" + std::to_string(a) + "," + std::to_string(b) + ")";
        return msg;
      }()),
      pairs(std::move(p)) {}

UniformityFit fit_uniformity(const WhitneyForest& forest, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             double A, double B) {
  UniformityFit fit;
  fit.A = A;
  fit.B = B;
  if (pairs.empty()) throw InputError("fit_uniformity: no pairs");
  std::map<std::size_t, std::vector<int>> from;
  std::vector<std::pair<std::size_t, std::size_t>> bad;
  double s_max = 0;
  for (auto [q, r] : pairs) {
    auto it = from.find(q);
    if (it == from.end()) it = from.emplace(q, whitney_distances_from(forest, q)).first;
    int d = it->second.at(r);
    if (d == 0) {
      bad.emplace_back(q, r);
      continue;
    }
    const DyadicCube &Q = forest.cubes[q], &R = forest.cubes[r];
    double s = cube_distance(Q, R, forest.dim) / std::min(Q.side(), R.side());
    fit.pair_s.push_back(s);
    fit.pair_d.push_back(d);
    s_max = std::max(s_max, s);
  }
  if (!bad.empty()) throw DisconnectedPairs(std::move(bad));
  fit.s_grid.push_back(0);
  int kmax = s_max > 1 ? static_cast<int>(std::ceil(std::log2(s_max))) : 0;
  for (int k = 0; k <= kmax; ++k) fit.s_grid.push_back(std::ldexp(1.0, k));
  fit.envelope.assign(fit.s_grid.size(), 0);
  for (std::size_t i = 0; i < fit.pair_s.size(); ++i)
    for (std::size_t g = 0; g < fit.s_grid.size(); ++g)
      if (fit.pair_s[i] <= fit.s_grid[g]) fit.envelope[g] = std::max(fit.envelope[g], fit.pair_d[i]);
  fit.consistent = true;
  for (std::size_t g = 0; g < fit.s_grid.size(); ++g)
    if (fit.envelope[g] > A + B * std::log2(2 + fit.s_grid[g])) fit.consistent = false;
  return fit;
}

std::optional<Ball> find_corkscrew(const ImplicitDomain& domain, const Point& xi, double r, Side side, double C,
                                   double boundary_tol) {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("find_corkscrew: r must be positive");
  if (!(C > 1)) throw InputError("find_corkscrew: C must exceed 1");
  if (!is_finite(xi)) throw InputError("find_corkscrew: non-finite centre");
  if (std::abs(domain.sdist(xi)) > boundary_tol) throw InputError("find_corkscrew: xi is not on the boundary");
  const int dim = domain.dim;
  const double need = r / C;
  const double rho = r - need;
  auto depth = [&](const Point& x) { return side == Side::interior ? -domain.sdist(x) : domain.sdist(x); };
  auto clamp_ball = [&](Point x) {
    Point v = x - xi;
    double n = norm(v);
    if (n > rho) x = xi + (rho / n) * v;
    return x;
  };

  const int G = dim == 2 ? 33 : 17;
  Point best = xi;
  double best_depth = depth(xi);
  std::array<int, kMaxDim> idx{0, 0, 0};
  while (true) {
    Point p = xi;
    for (int k = 0; k < dim; ++k) p[k] = xi[k] - rho + 2 * rho * idx[k] / (G - 1);
    if (dist(p, xi) <= rho) {
      double v = depth(p);
      if (v > best_depth) {
        best_depth = v;
        best = p;
      }
    }
    int k = 0;
    while (k < dim && idx[k] == G - 1) idx[k++] = 0;
    if (k == dim) break;
    ++idx[k];
  }

  // Candidates along the normal ray; tight configurations (C = 2 on a ball)
  // are only certified there.
  Point n = sdist_gradient(domain, xi, 1e-7 * std::max(1.0, r));
  if (double len = norm(n); len > 0) {
    n = (side == Side::interior ? -1.0 / len : 1.0 / len) * n;
    for (int i = 1; i <= G; ++i) {
      Point p = xi + (rho * i / G) * n;
      double v = depth(p);
      if (v > best_depth) {
        best_depth = v;
        best = p;
      }
    }
  }

  // Compass search from the best candidate.
  double step = 2 * rho / (G - 1);
  for (int it = 0; it < 4000 && step > rho * 1e-9; ++it) {
    Point move = best;
    double move_depth = best_depth;
    for (int k = 0; k < dim; ++k)
      for (double sgn : {1.0, -1.0}) {
        Point p = best;
        p[k] += sgn * step;
        p = clamp_ball(p);
        double v = depth(p);
        if (v > move_depth) {
          move_depth = v;
          move = p;
        }
      }
    if (move_depth > best_depth) {
      best = move;
      best_depth = move_depth;
    } else {
      step /= 2;
    }
  }
  if (best_depth < need * (1 - 1e-12)) return std::nullopt;

  double lo = 0, hi = 1;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (depth(xi + mid * (best - xi)) >= need * (1 - 1e-12))
      hi = mid;
    else
      lo = mid;
  }
  return Ball(xi + hi * (best - xi), need);
}

std::pair<int, int> whitney_level_range(double d, double K, int dim) {
  double lo = d / ((1 + K) * std::sqrt(static_cast<double>(dim)));
  double hi = 2 * d / (K - 1);
  return {static_cast<int>(std::floor(std::log2(lo))), static_cast<int>(std::ceil(std::log2(hi)))};
}

}  // namespace gmt
