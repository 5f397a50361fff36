#include "gmt/sawtooth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "gmt/sampling.hpp"

namespace gmt {

namespace {

Box expand(const Box& b, double m, int dim) {
  Box e = b;
  for (int k = 0; k < dim; ++k) {
    e.lo[k] -= m;
    e.hi[k] += m;
  }
  return e;
}

Box hull(const Box& a, const Box& b) {
  Box h;
  for (int k = 0; k < kMaxDim; ++k) {
    h.lo[k] = std::min(a.lo[k], b.lo[k]);
    h.hi[k] = std::max(a.hi[k], b.hi[k]);
  }
  return h;
}

void check_params(const SawtoothParams& p) {
  if (!(p.lambda > 1 && p.lambda <= 2)) throw InputError("sawtooth: lambda must lie in (1, 2]");
  if (!(p.C0 >= 1)) throw InputError("sawtooth: C0 must be >= 1");
  if (p.C_tilde < 1) throw InputError("sawtooth: C_tilde must be >= 1");
  if (!(p.r0 > 0) || !std::isfinite(p.r0)) throw InputError("sawtooth: r0 must be positive");
  if (!is_finite(p.xi0)) throw InputError("sawtooth: xi0 must be finite");
}

void check_cloud(const PointCloud& E, int dim) {
  if (E.empty()) throw InputError("sawtooth: E is empty");
  if (E.dim != dim) throw InputError("sawtooth: E dimension does not match the domain");
  for (const auto& p : E.points)
    if (!is_finite(p)) throw InputError("sawtooth: E has a non-finite point");
}

}  // namespace

ThickSet::ThickSet(const PointCloud& E) : index(E.points, E.dim), rho(std::max(0.0, E.mesh)), dim(E.dim) {}

bool ThickSet::meets(const Box& b) const {
  if (index.empty()) return false;
  if (index.any_in_box(b)) return true;
  if (rho <= 0) return false;
  for (std::size_t i : index.in_box(expand(b, rho, dim)))
    if (dist_to_box(index.point(i), b) <= rho) return true;
  return false;
}

int sawtooth_n_min(double h) {
  if (!(h > 0) || !std::isfinite(h)) throw InputError("sawtooth: mesh must be positive");
  return static_cast<int>(std::floor(std::log2(h))) - 4;
}

double SawtoothDomain::sdist(const Point& x) const {
  double depth = boxes_ ? boxes_->max_depth(x) : 0;
  if (kind == SawtoothKind::inner) {
    if (depth > 0) return -std::max(depth, exposed_->min_dist(x));
    double d = boxes_ ? boxes_->min_dist(x) : kInf;
    return std::isfinite(d) ? d : std::numeric_limits<double>::max();
  }
  double s = base.sdist(x);
  if (s < 0 || depth > 0) return -std::max(-s, depth);
  return boxes_ ? std::min(s, boxes_->min_dist(x)) : s;
}

void SawtoothDomain::refresh() {
  std::sort(core.begin(), core.end());
  core.erase(std::unique(core.begin(), core.end()), core.end());
  in_core.assign(forest.size(), 0);
  for (std::size_t q : core) {
    if (q >= forest.size()) throw InputError("sawtooth: core index out of range");
    in_core[q] = 1;
  }
  boundary_cubes.clear();
  std::vector<Box> dilated, plain;
  dilated.reserve(core.size());
  for (std::size_t q : core) {
    dilated.push_back(forest.cubes[q].dilate(dim(), params.lambda));
    for (std::size_t n : forest.adjacency[q])
      if (!in_core[n]) {
        boundary_cubes.push_back(q);
        plain.push_back(forest.cubes[q].box(dim()));
        break;
      }
  }
  boxes_ = std::make_shared<const BoxIndex>(std::move(dilated), dim());
  exposed_ = std::make_shared<const BoxIndex>(
      kind == SawtoothKind::inner ? exposed_faces(*boxes_, dim()) : std::vector<Box>{}, dim());
  boundary_index_ = std::make_shared<const BoxIndex>(std::move(plain), dim());
}

Box inner_forest_box(const SawtoothParams& params, int dim, double C_minus) {
  check_dim(dim);
  if (!(C_minus > 0)) throw InputError("sawtooth: C_minus must be positive");
  Box b;
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = params.xi0[k] - C_minus * params.r0;
    b.hi[k] = params.xi0[k] + C_minus * params.r0;
  }
  return b;
}

WhitneyForest inner_forest(const ImplicitDomain& domain, const PointCloud& E, const SawtoothParams& params, int n_min,
                           double C_minus) {
  check_params(params);
  check_cloud(E, domain.dim);
  ThickSet thick(E);
  int dim = domain.dim;
  BoxPredicate hits = [&domain](const Box& b) { return box_hits_complement(domain, b); };
  BoxPredicate region = [&](const Box& b) {
    return thick.meets(expand(b, 64 * (b.hi[0] - b.lo[0]), dim)) && box_hits_closure(domain, b);
  };
  return whitney_build(dim, 3, inner_forest_box(params, dim, C_minus), n_min, hits, region);
}

SawtoothDomain build_inner_sawtooth(const ImplicitDomain& domain, WhitneyForest forest, const Box& forest_box,
                                    const PointCloud& E, const SawtoothParams& params) {
  check_params(params);
  check_cloud(E, domain.dim);
  if (forest.dim != domain.dim) throw InputError("sawtooth: forest dimension does not match the domain");
  double on_tol = std::max(10 * domain.tol, 1e-9);
  for (const auto& e : E.points) {
    if (dist(e, params.xi0) > params.r0 * (1 + 1e-12))
      throw InputError("sawtooth: E must lie in B(xi0, r0)");
    if (std::abs(domain.sdist(e)) > on_tol) throw InputError("sawtooth: E must lie on the boundary");
  }

  SawtoothDomain saw;
  saw.kind = SawtoothKind::inner;
  saw.base = domain;
  saw.params = params;
  saw.forest = std::move(forest);
  saw.forest_box = forest_box;
  saw.E = E;
  saw.E_thick = ThickSet(E);
  const int dim = domain.dim;
  const auto& cubes = saw.forest.cubes;

  std::vector<char> is_seed(cubes.size(), 0);
  for (std::size_t i = 0; i < cubes.size(); ++i)
    if (cubes[i].side() <= params.r0 && saw.E_thick.meets(cubes[i].dilate(dim, params.C0))) {
      is_seed[i] = 1;
      saw.seed.push_back(i);
    }
  for (const auto& f : saw.forest.truncated_flags)
    if (f.side() <= params.r0 && saw.E_thick.meets(f.dilate(dim, params.C0))) {
      saw.truncated = true;
      break;
    }

  // Union of all shortest paths with at most C_tilde cubes between seed pairs.
  std::vector<char> keep = is_seed;
  std::vector<int> depth(cubes.size(), -1);
  std::vector<std::size_t> touched;
  const int max_edges = params.C_tilde - 1;
  for (std::size_t s : saw.seed) {
    touched.clear();
    std::deque<std::size_t> queue{s};
    depth[s] = 0;
    touched.push_back(s);
    while (!queue.empty()) {
      std::size_t u = queue.front();
      queue.pop_front();
      if (depth[u] == max_edges) continue;
      for (std::size_t v : saw.forest.adjacency[u])
        if (depth[v] < 0) {
          depth[v] = depth[u] + 1;
          touched.push_back(v);
          queue.push_back(v);
        }
    }
    for (std::size_t t : touched) {
      if (t <= s || !is_seed[t] || depth[t] < 2) continue;
      std::vector<std::size_t> frontier{t};
      while (!frontier.empty() && depth[frontier.front()] > 1) {
        std::vector<std::size_t> next;
        for (std::size_t u : frontier)
          for (std::size_t v : saw.forest.adjacency[u])
            if (depth[v] == depth[u] - 1) next.push_back(v);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        for (std::size_t v : next) keep[v] = 1;
        frontier = std::move(next);
      }
    }
    for (std::size_t t : touched) depth[t] = -1;
  }
  for (std::size_t i = 0; i < cubes.size(); ++i)
    if (keep[i]) saw.core.push_back(i);
  saw.trace_tol = (1 + saw.forest.K) * std::sqrt(static_cast<double>(dim)) * std::ldexp(1.0, saw.forest.n_min);
  saw.refresh();
  return saw;
}

SawtoothDomain build_outer_sawtooth(const ImplicitDomain& domain, const PointCloud& E, const SawtoothParams& params,
                                    const Box& box, int n_min) {
  if (!(params.lambda > 1 && params.lambda <= 2)) throw InputError("sawtooth: lambda must lie in (1, 2]");
  if (!(params.K >= 12)) throw InputError("sawtooth: outer construction needs K >= 12");
  check_cloud(E, domain.dim);
  const int dim = domain.dim;

  SawtoothDomain saw;
  saw.kind = SawtoothKind::outer;
  saw.base = domain;
  saw.params = params;
  saw.forest_box = box;
  saw.E = E;
  saw.E_thick = ThickSet(E);
  const ThickSet& thick = saw.E_thick;
  BoxPredicate hits = [&thick](const Box& b) { return thick.meets(b); };
  // Neighbours of a boundary cube are at most a few times larger, so a 9-fold
  // dilate keeps every cube adjacent to the core.
  BoxPredicate region = [&domain, dim](const Box& b) {
    return box_meets_boundary(domain, expand(b, 4 * (b.hi[0] - b.lo[0]), dim));
  };
  saw.forest = whitney_build(dim, params.K, box, n_min, hits, region);
  for (std::size_t i = 0; i < saw.forest.size(); ++i)
    if (box_meets_boundary(domain, saw.forest.cubes[i].box(dim))) saw.core.push_back(i);
  saw.seed = saw.core;
  for (const auto& f : saw.forest.truncated_flags)
    if (box_meets_boundary(domain, f.box(dim))) {
      saw.truncated = true;
      break;
    }
  saw.trace_tol = std::max(10 * domain.tol, 1e-12);
  saw.refresh();
  return saw;
}

SawtoothDomain with_core(const SawtoothDomain& saw, std::vector<std::size_t> core) {
  SawtoothDomain out = saw;
  out.core = std::move(core);
  out.refresh();
  std::vector<std::size_t> seed;
  for (std::size_t s : saw.seed)
    if (out.in_core[s]) seed.push_back(s);
  out.seed = std::move(seed);
  return out;
}

ImplicitDomain sawtooth_as_domain(std::shared_ptr<const SawtoothDomain> saw) {
  if (!saw) throw InputError("sawtooth_as_domain: null sawtooth");
  ImplicitDomain d;
  d.name = saw->base.name + (saw->kind == SawtoothKind::inner ? "/inner-sawtooth" : "/outer-sawtooth");
  d.dim = saw->dim();
  d.tol = saw->base.tol;
  d.sdist = [saw](const Point& x) { return saw->sdist(x); };
  const Box& b = saw->boxes().bounds();
  if (saw->kind == SawtoothKind::inner) {
    d.bbox = b;
    d.diam_boundary = 2 * b.half_diagonal();
  } else {
    d.bbox = saw->boxes().size() ? hull(saw->base.bbox, b) : saw->base.bbox;
    d.diam_boundary = saw->base.diam_boundary;
  }
  return d;
}

PointCloud sample_sawtooth_boundary(const SawtoothDomain& saw, double s) {
  if (!(s > 0)) throw InputError("sample_sawtooth_boundary: spacing must be positive");
  const int dim = saw.dim();
  const BoxIndex& idx = saw.boxes();
  PointCloud out;
  out.dim = dim;
  out.mesh = s;
  out.source = CloudSource::boundary;
  auto keep = [&](const Point& p) {
    if (idx.max_depth(p) > 0) return false;
    return saw.kind == SawtoothKind::inner || saw.base.sdist(p) >= 0;
  };
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Box& b = idx.box(i);
    double side = b.hi[0] - b.lo[0];
    int m = std::max(1, static_cast<int>(std::ceil(side / s)));
    double step = side / m;
    if (dim == 2) {
      for (int j = 0; j < m; ++j) {
        double t = j * step;
        for (const Point& p : {Point{b.lo[0] + t, b.lo[1], 0}, Point{b.hi[0], b.lo[1] + t, 0},
                               Point{b.hi[0] - t, b.hi[1], 0}, Point{b.lo[0], b.hi[1] - t, 0}})
          if (keep(p)) out.points.push_back(p);
      }
    } else {
      for (int a = 0; a < 3; ++a)
        for (double fixed : {b.lo[a], b.hi[a]}) {
          int u = (a + 1) % 3, v = (a + 2) % 3;
          for (int j = 0; j <= m; ++j)
            for (int k = 0; k <= m; ++k) {
              Point p;
              p[a] = fixed;
              p[u] = b.lo[u] + j * step;
              p[v] = b.lo[v] + k * step;
              if (keep(p)) out.points.push_back(p);
            }
        }
    }
  }
  if (saw.kind == SawtoothKind::outer) {
    ImplicitDomain clipped = saw.base;
    clipped.bbox = saw.forest_box;
    for (const Point& p : sample_boundary(clipped, s).cloud.points)
      if (idx.max_depth(p) <= 0) out.points.push_back(p);
  }
  return out;
}

SawtoothStats sawtooth_stats(const SawtoothDomain& saw, const PointCloud& sample) {
  SawtoothStats st;
  st.core_size = saw.core.size();
  st.seed_size = saw.seed.size();
  st.boundary_size = saw.boundary_cubes.size();
  if (!saw.core.empty()) {
    st.min_level = saw.forest.cubes[saw.core.front()].level;
    st.max_level = saw.forest.cubes[saw.core.back()].level;
  }
  for (std::size_t i = 0; i < saw.boxes().size(); ++i)
    st.C_minus_emp = std::max(st.C_minus_emp, farthest_in_box(saw.params.xi0, saw.boxes().box(i)) / saw.params.r0);
  // Lower bound on the diameter: extreme points along axis and diagonal directions.
  std::vector<Point> dirs;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = (saw.dim() == 3 ? -1 : 0); c <= (saw.dim() == 3 ? 1 : 0); ++c)
        if (a || b || c) dirs.push_back({double(a), double(b), double(c)});
  std::vector<Point> extremes;
  for (const auto& d : dirs) {
    const Point* best = nullptr;
    double bv = -kInf;
    for (const auto& p : sample.points)
      if (double v = dot(p, d); v > bv) {
        bv = v;
        best = &p;
      }
    if (best) extremes.push_back(*best);
  }
  double diam = 0;
  for (const auto& p : extremes)
    for (const auto& q : extremes) diam = std::max(diam, dist(p, q));
  st.diam_ratio = diam / saw.params.r0;
  return st;
}

BoundaryCubeSet boundary_cube_sum(const SawtoothDomain& saw, const Point& xi, double r) {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("boundary_cube_sum: r must be positive");
  if (!is_finite(xi)) throw InputError("boundary_cube_sum: xi must be finite");
  const int dim = saw.dim();
  BoundaryCubeSet out;
  out.xi = xi;
  out.r = r;
  out.xi_in_E = saw.E_thick.index.nearest(xi).distance <= std::max(10 * saw.base.tol, 1e-9);
  Box ball;
  for (int k = 0; k < dim; ++k) {
    ball.lo[k] = xi[k] - r;
    ball.hi[k] = xi[k] + r;
  }
  for (int k = 0; k < dim; ++k)
    if (ball.lo[k] < saw.forest_box.lo[k] || ball.hi[k] > saw.forest_box.hi[k]) out.clipped = true;
  for (std::size_t j : saw.boundary_index().intersecting(ball))
    if (dist_to_box(xi, saw.boundary_index().box(j)) < r) out.cubes.push_back(saw.boundary_cubes[j]);
  std::sort(out.cubes.begin(), out.cubes.end());
  for (std::size_t q : out.cubes) {
    const auto& c = saw.forest.cubes[q];
    double v = std::pow(c.side(), dim - 1);
    out.sum_d += v;
    if (c.level == saw.forest.n_min) {
      ++out.tail_cubes;
      out.tail_sum += v;
    }
  }
  return out;
}

BoundarySumSweep boundary_sum_sweep(const SawtoothDomain& saw, const std::vector<Point>& xis,
                                    const std::vector<double>& radii) {
  BoundarySumSweep sw;
  for (const auto& xi : xis)
    for (double r : radii) {
      auto row = boundary_cube_sum(saw, xi, r);
      double ratio = row.sum_d / std::pow(r, saw.dim() - 1);
      if (ratio > sw.sup_ratio) {
        sw.sup_ratio = ratio;
        sw.argmax = sw.rows.size();
      }
      sw.any_clipped = sw.any_clipped || row.clipped;
      sw.any_outside_E = sw.any_outside_E || !row.xi_in_E;
      sw.rows.push_back(std::move(row));
    }
  return sw;
}

RegularityProfile regularity_profile(const PointCloud& surface, const std::vector<double>& weights,
                                     const std::vector<double>& radii, const std::vector<Point>& centers, int d) {
  if (weights.size() != surface.size()) throw InputError("regularity_profile: one weight per point required");
  if (d < 1 || d >= surface.dim + 1) throw InputError("regularity_profile: d out of range");
  for (double w : weights)
    if (!(w >= 0) || !std::isfinite(w)) throw InputError("regularity_profile: weights must be finite and >= 0");
  for (double r : radii)
    if (!(r > 0) || !std::isfinite(r)) throw InputError("regularity_profile: radii must be positive");
  KdTree tree(surface.points, surface.dim);
  RegularityProfile prof;
  for (const auto& c : centers)
    for (double r : radii) {
      double mass = 0;
      for (std::size_t i : tree.within(c, r, true)) mass += weights[i];
      double rd = std::pow(r, d);
      ++prof.balls;
      if (mass / rd > prof.raw_upper) {
        prof.raw_upper = mass / rd;
        prof.upper_witness = c;
        prof.upper_witness_r = r;
      }
      double low = mass > 0 ? rd / mass : kInf;
      if (low > prof.raw_lower) {
        prof.raw_lower = low;
        prof.lower_witness = c;
        prof.lower_witness_r = r;
      }
      if (!(mass > 0)) prof.zero_mass = true;
    }
  prof.A_upper = std::max(1.0, prof.raw_upper);
  prof.A_lower = std::max(1.0, prof.raw_lower);
  return prof;
}

TraceReport check_trace(const SawtoothDomain& saw, const PointCloud& E, double h) {
  if (!(h > 0)) throw InputError("check_trace: h must be positive");
  TraceReport rep;
  PointCloud sample = sample_sawtooth_boundary(saw, h / 2);
  KdTree bt(sample.points, saw.dim());
  KdTree et(E.points, E.dim);
  rep.covers_E = true;
  for (const auto& e : E.points) {
    double g = bt.nearest(e).distance;
    rep.worst_E_gap = std::max(rep.worst_E_gap, g);
    if (g > 2 * h && rep.covers_E) {
      rep.covers_E = false;
      rep.witness = e;
    }
  }
  // Outer: faces created where the forest is cut off by its box are not part of
  // the sawtooth. A Whitney cube of W_K near p has its dilate within this reach.
  auto near_box_cut = [&](const Point& p) {
    if (saw.kind != SawtoothKind::outer) return false;
    double room = kInf;
    for (int k = 0; k < saw.dim(); ++k)
      room = std::min({room, p[k] - saw.forest_box.lo[k], saw.forest_box.hi[k] - p[k]});
    double reach = 2 * saw.params.lambda * std::sqrt(static_cast<double>(saw.dim())) * et.nearest(p).distance /
                   (saw.params.K - 1);
    return room < reach + h;
  };
  rep.trace_in_E = true;
  for (const auto& p : sample.points) {
    if (std::abs(saw.base.sdist(p)) > saw.trace_tol) continue;
    if (near_box_cut(p)) {
      ++rep.box_cut;
      continue;
    }
    ++rep.near_boundary;
    double g = et.nearest(p).distance;
    rep.worst_trace_gap = std::max(rep.worst_trace_gap, g);
    if (g > 2 * h && rep.trace_in_E) {
      rep.trace_in_E = false;
      if (rep.covers_E) rep.witness = p;
    }
  }
  rep.pass = rep.covers_E && rep.trace_in_E;
  if (!rep.covers_E)
    rep.detail = "E point " + format_double(rep.witness[0]) + "," + format_double(rep.witness[1]) +
                 " is farther than 2h from the sawtooth boundary";
  else if (!rep.trace_in_E)
    rep.detail = "sawtooth boundary point " + format_double(rep.witness[0]) + "," + format_double(rep.witness[1]) +
                 " touches the base boundary farther than 2h from E";
  return rep;
}

}  // namespace gmt
