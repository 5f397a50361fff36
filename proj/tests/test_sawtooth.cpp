#include <doctest.h>

#include <algorithm>
#include <deque>
#include <numbers>
#include <set>

#include "gmt/gallery.hpp"
#include "gmt/rng.hpp"
#include "gmt/sampling.hpp"
#include "gmt/sawtooth.hpp"

using namespace gmt;

namespace {

struct HalfPlaneCase {
  ImplicitDomain domain = gallery_domain("half_space");
  PointCloud E;
  SawtoothParams params;
  SawtoothDomain saw;

  explicit HalfPlaneCase(double h) {
    E = segment_cloud({0, 0, 0}, {1, 0, 0}, static_cast<std::size_t>(std::lround(1 / h)) + 1);
    params.xi0 = {0.5, 0, 0};
    params.r0 = 0.5;
    auto forest = inner_forest(domain, E, params, sawtooth_n_min(E.mesh));
    saw = build_inner_sawtooth(domain, forest, inner_forest_box(params, 2), E, params);
  }
};

PointCloud right_half_circle(std::size_t n) {
  PointCloud c = circle_cloud(n);
  PointCloud r;
  r.mesh = c.mesh;
  for (const auto& p : c.points)
    if (p[0] >= 0) r.points.push_back(p);
  return r;
}

double brute_dist_to_cloud(const PointCloud& E, const Point& x) {
  double d = kInf;
  for (const auto& e : E.points) d = std::min(d, dist(e, x));
  return d;
}

bool brute_open_union(const SawtoothDomain& saw, const Point& x) {
  for (std::size_t q : saw.core)
    if (box_sdist(x, saw.forest.cubes[q].dilate(saw.dim(), saw.params.lambda), saw.dim()) < 0) return true;
  return false;
}

// Hop counts by breadth-first search (-1 unreachable).
std::vector<int> hops_from(const WhitneyForest& f, std::size_t s) {
  std::vector<int> d(f.size(), -1);
  std::deque<std::size_t> q{s};
  d[s] = 0;
  while (!q.empty()) {
    auto u = q.front();
    q.pop_front();
    for (auto v : f.adjacency[u])
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        q.push_back(v);
      }
  }
  return d;
}

Point random_in(Stream& rng, const Box& b, int dim) {
  Point p{0, 0, 0};
  for (int k = 0; k < dim; ++k) p[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * rng.uniform();
  return p;
}

}  // namespace

TEST_CASE("inner sawtooth core is exactly the seeds plus short shortest paths") {
  HalfPlaneCase hp(1.0 / 16);
  const auto& saw = hp.saw;
  const auto& f = saw.forest;
  const int dim = 2;

  std::vector<std::size_t> seeds;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& q = f.cubes[i];
    if (q.side() > hp.params.r0) continue;
    Box b = q.dilate(dim, hp.params.C0);
    bool meets = false;
    for (const auto& e : hp.E.points) meets = meets || dist_to_box(e, b) <= hp.E.mesh;
    if (meets) seeds.push_back(i);
  }
  CHECK(saw.seed == seeds);

  std::vector<char> expect(f.size(), 0);
  for (auto s : seeds) expect[s] = 1;
  std::vector<std::vector<int>> hops;
  for (auto s : seeds) hops.push_back(hops_from(f, s));
  for (std::size_t a = 0; a < seeds.size(); ++a)
    for (std::size_t b = a + 1; b < seeds.size(); ++b) {
      int dab = hops[a][seeds[b]];
      if (dab < 0 || dab > hp.params.C_tilde - 1) continue;
      for (std::size_t q = 0; q < f.size(); ++q)
        if (hops[a][q] >= 0 && hops[b][q] >= 0 && hops[a][q] + hops[b][q] == dab) expect[q] = 1;
    }
  std::vector<std::size_t> core;
  for (std::size_t q = 0; q < f.size(); ++q)
    if (expect[q]) core.push_back(q);
  CHECK(saw.core == core);
  CHECK(saw.core.size() > saw.seed.size());
  CHECK(saw.truncated);

  // The core is connected through forest adjacency.
  std::vector<char> seen(f.size(), 0);
  std::deque<std::size_t> queue{saw.core.front()};
  seen[saw.core.front()] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    for (auto v : f.adjacency[u])
      if (saw.in_core[v] && !seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
  }
  CHECK(reached == saw.core.size());
}

TEST_CASE("inner sawtooth over a segment traces the segment") {
  HalfPlaneCase hp(1.0 / 64);
  auto rep = check_trace(hp.saw, hp.E, hp.E.mesh);
  CHECK(rep.pass);
  CHECK(rep.near_boundary > 0);
  CHECK(rep.worst_E_gap <= 2 * hp.E.mesh);
  CHECK(rep.worst_trace_gap <= 2 * hp.E.mesh);

  auto sample = sample_sawtooth_boundary(hp.saw, hp.E.mesh / 2);
  auto st = sawtooth_stats(hp.saw, sample);
  CHECK(st.C_minus_emp < 16);
  CHECK(st.diam_ratio >= 1);
  MESSAGE("C_minus_emp " << st.C_minus_emp << ", diameter ratio " << st.diam_ratio);

  // Sampled boundary points are on a face of some dilated box and inside no open box.
  for (std::size_t i = 0; i < sample.size(); i += 37) {
    const Point& p = sample.points[i];
    CHECK_FALSE(brute_open_union(hp.saw, p));
    double face = kInf;
    for (auto q : hp.saw.core)
      face = std::min(face, std::abs(box_sdist(p, hp.saw.forest.cubes[q].dilate(2, hp.params.lambda), 2)));
    CHECK(face <= 1e-12);
  }
}

TEST_CASE("sawtooth signed distance agrees with the box union") {
  HalfPlaneCase hp(1.0 / 16);
  Stream rng(3, 1);
  Box region = hp.saw.boxes().bounds();
  for (int i = 0; i < 3000; ++i) {
    Point x = random_in(rng, region, 2);
    if (i % 2) x[1] *= 0.05;
    bool in = brute_open_union(hp.saw, x);
    double s = hp.saw.sdist(x);
    CHECK((s < 0) == in);
    // |sdist| is a lower bound for the distance to the other side, checked along a few rays.
    for (int k = 0; k < 4; ++k) {
      Point d = Stream(i, k).direction(2);
      Point y = x + (0.999 * std::abs(s)) * d;
      CHECK(brute_open_union(hp.saw, y) == in);
    }
  }
  auto dom = sawtooth_as_domain(std::make_shared<const SawtoothDomain>(hp.saw));
  CHECK(dom.sdist(hp.saw.forest.cubes[hp.saw.core[0]].center(2)) < 0);
  CHECK(std::isfinite(dom.diam_boundary));
}

TEST_CASE("single-point inner sawtooth is a cone-like stack inside the domain") {
  auto disk = gallery_domain("disk");
  PointCloud E;
  E.points = {{1, 0, 0}};
  SawtoothParams p;
  p.xi0 = {1, 0, 0};
  p.r0 = 0.25;
  auto forest = inner_forest(disk, E, p, -9);
  auto saw = build_inner_sawtooth(disk, forest, inner_forest_box(p, 2), E, p);
  REQUIRE_FALSE(saw.core.empty());
  std::set<int> levels;
  for (auto q : saw.core) levels.insert(saw.forest.cubes[q].level);
  CHECK(levels.size() >= 6);  // one tier per scale from n_min up to r0
  CHECK(*levels.rbegin() <= -2);
  Stream rng(5, 0);
  Box bb = saw.boxes().bounds();
  int inside_count = 0;
  for (int i = 0; i < 20000; ++i) {
    Point x = random_in(rng, bb, 2);
    if (saw.inside(x)) {
      ++inside_count;
      CHECK(disk.sdist(x) < 0);
    }
  }
  CHECK(inside_count > 0);
}

TEST_CASE("sawtooth input errors") {
  auto hp = gallery_domain("half_space");
  auto E = segment_cloud({0, 0, 0}, {1, 0, 0}, 17);
  SawtoothParams p;
  p.xi0 = {0.5, 0, 0};
  p.r0 = 0.5;
  auto forest = inner_forest(hp, E, p, -8);
  Box fb = inner_forest_box(p, 2);
  auto bad = p;
  bad.lambda = 1;
  CHECK_THROWS_AS(build_inner_sawtooth(hp, forest, fb, E, bad), InputError);
  bad.lambda = 2.5;
  CHECK_THROWS_AS(build_inner_sawtooth(hp, forest, fb, E, bad), InputError);
  CHECK_THROWS_AS(build_inner_sawtooth(hp, forest, fb, PointCloud{}, p), InputError);
  auto off = E;
  off.points[3][1] = 0.1;
  CHECK_THROWS_AS(build_inner_sawtooth(hp, forest, fb, off, p), InputError);
  bad = p;
  bad.r0 = 0.4;
  CHECK_THROWS_AS(build_inner_sawtooth(hp, forest, fb, E, bad), InputError);
  bad = p;
  bad.K = 8;
  CHECK_THROWS_AS(build_outer_sawtooth(hp, E, bad, make_box(2, -2, 2), -8), InputError);
  CHECK_THROWS_AS(build_outer_sawtooth(hp, PointCloud{}, p, make_box(2, -2, 2), -8), InputError);
  CHECK_THROWS_AS(sawtooth_n_min(0), InputError);
}

TEST_CASE("outer sawtooth over the full circle is the disk") {
  auto disk = gallery_domain("disk");
  auto C = circle_cloud(256);
  SawtoothParams p;
  auto saw = build_outer_sawtooth(disk, C, p, make_box(2, -1.5, 1.5), sawtooth_n_min(C.mesh));
  CHECK(saw.core.empty());
  Stream rng(6, 0);
  for (int i = 0; i < 2000; ++i) {
    Point x = random_in(rng, make_box(2, -1.5, 1.5), 2);
    CHECK(saw.sdist(x) == disk.sdist(x));
  }
  for (double r : {0.01, 0.05, 0.2}) CHECK(boundary_cube_sum(saw, C.points[0], r).sum_d == 0);
  CHECK(check_trace(saw, C, C.mesh).pass);
}

TEST_CASE("outer sawtooth over a half circle bulges across the other half") {
  auto disk = gallery_domain("disk");
  auto E = right_half_circle(512);
  SawtoothParams p;
  double h = E.mesh;
  auto saw = build_outer_sawtooth(disk, E, p, make_box(2, -1.5, 1.5), sawtooth_n_min(h));
  REQUIRE_FALSE(saw.core.empty());
  CHECK(saw.boundary_cubes == saw.core);  // every core cube has a neighbour that misses the circle

  for (int i = 0; i <= 100; ++i) {
    double th = std::numbers::pi * (0.6 + 0.8 * i / 100.0);
    CHECK(saw.sdist({std::cos(th), std::sin(th), 0}) < 0);
  }
  Stream rng(7, 0);
  for (int i = 0; i < 20000; ++i) {
    Point x = random_in(rng, make_box(2, -1.5, 1.5), 2);
    if (disk.sdist(x) < 0) CHECK(saw.inside(x));
  }

  // Whitney sizes relative to E (thickened by its mesh).
  int n_top = saw.forest.max_level();
  for (auto q : saw.core) {
    const auto& c = saw.forest.cubes[q];
    Box b = c.box(2);
    double d = kInf;
    for (const auto& e : E.points) d = std::min(d, dist_to_box(e, b));
    CHECK(c.side() <= d);
    if (c.level < n_top) CHECK(d <= (1 + p.K) * c.diameter(2) + E.mesh);
  }

  auto rep = check_trace(saw, E, h);
  CHECK(rep.pass);
  CHECK(rep.near_boundary > 0);
}

TEST_CASE("outer sawtooth over one point") {
  auto disk = gallery_domain("disk");
  PointCloud E;
  E.points = {{1, 0, 0}};
  SawtoothParams p;
  int n_min = -12;
  double h = std::ldexp(1.0, n_min + 4);
  auto saw = build_outer_sawtooth(disk, E, p, make_box(2, -1.5, 1.5), n_min);
  CHECK(saw.truncated);
  CHECK(check_trace(saw, E, h).pass);
  CHECK(saw.inside({-1, 0, 0}));
  CHECK_FALSE(saw.inside({1.0001, 0, 0}));
}

TEST_CASE("removing a core cube breaks the trace") {
  auto disk = gallery_domain("disk");
  auto E = right_half_circle(512);
  SawtoothParams p;
  auto saw = build_outer_sawtooth(disk, E, p, make_box(2, -1.5, 1.5), sawtooth_n_min(E.mesh));
  std::size_t largest = saw.core.back();  // level-major order
  auto core = saw.core;
  core.erase(std::find(core.begin(), core.end(), largest));
  auto broken = with_core(saw, core);
  auto rep = check_trace(broken, E, E.mesh);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.trace_in_E);
  CHECK(std::abs(disk.sdist(rep.witness)) <= broken.trace_tol);
  CHECK(brute_dist_to_cloud(E, rep.witness) > 2 * E.mesh);
  CHECK(saw.forest.cubes[largest].box(2).contains(rep.witness));
  CHECK_FALSE(rep.detail.empty());
}

TEST_CASE("boundary cube sums match an exhaustive adjacency scan") {
  HalfPlaneCase hp(1.0 / 32);
  const auto& saw = hp.saw;
  const auto& f = saw.forest;
  for (auto [xi, r] : std::vector<std::pair<Point, double>>{
           {{1, 0, 0}, 0.25}, {{0, 0, 0}, 0.1}, {{0.5, 0, 0}, 0.6}, {{1, 0, 0}, 0.01}}) {
    std::vector<std::size_t> expect;
    double sum = 0;
    for (auto q : saw.core) {
      Box b = f.cubes[q].box(2);
      if (!(dist_to_box(xi, b) < r)) continue;
      bool edge = false;
      for (std::size_t j = 0; j < f.size() && !edge; ++j)
        edge = !saw.in_core[j] && j != q && box_box_dist(b, f.cubes[j].box(2)) == 0;
      if (edge) {
        expect.push_back(q);
        sum += f.cubes[q].side();
      }
    }
    auto got = boundary_cube_sum(saw, xi, r);
    CHECK(got.cubes == expect);
    CHECK(got.sum_d == doctest::Approx(sum));
    CHECK(got.xi_in_E);
    CHECK_FALSE(got.clipped);
  }
  CHECK(boundary_cube_sum(saw, {1, 0, 0}, 100).clipped);
  CHECK_FALSE(boundary_cube_sum(saw, {3, 0, 0}, 0.1).xi_in_E);
  CHECK_THROWS_AS(boundary_cube_sum(saw, {1, 0, 0}, 0), InputError);

  auto sweep = boundary_sum_sweep(saw, {{0, 0, 0}, {1, 0, 0}}, {0.25, 0.125});
  CHECK(sweep.rows.size() == 4);
  double best = 0;
  for (const auto& row : sweep.rows) best = std::max(best, row.sum_d / row.r);
  CHECK(sweep.sup_ratio == best);
}

TEST_CASE("boundary cube points are at distance comparable to their size from E") {
  HalfPlaneCase hp(1.0 / 64);
  const auto& saw = hp.saw;
  double lo = kInf, hi = 0;
  for (auto q : saw.boundary_cubes) {
    const auto& c = saw.forest.cubes[q];
    Point y = c.center(2);
    double dy = brute_dist_to_cloud(saw.E, y);
    double dq = kInf;
    for (const auto& e : saw.E.points) dq = std::min(dq, dist_to_box(e, c.box(2)));
    CHECK(dq <= dy);
    lo = std::min(lo, dq / c.side());
    hi = std::max(hi, dy / c.side());
  }
  MESSAGE("dist(Q, E) / side >= " << lo << ", dist(y_Q, E) / side <= " << hi);
  CHECK(lo >= 1);
  CHECK(hi <= 64);
}

TEST_CASE("regularity profile on a segment and a circle") {
  auto seg = segment_cloud({0, 0, 0}, {1, 0, 0}, 4097);
  std::vector<double> w(seg.size(), seg.mesh);
  w.front() = w.back() = seg.mesh / 2;
  std::vector<Point> centres;
  for (double x : {0.3, 0.5, 0.7}) centres.push_back({x, 0, 0});
  auto prof = regularity_profile(seg, w, {0.01, 0.05, 0.2}, centres, 1);
  double up = 0, low = 0;
  for (const auto& c : centres)
    for (double r : {0.01, 0.05, 0.2}) {
      double m = 0;
      for (std::size_t i = 0; i < seg.size(); ++i)
        if (dist(seg.points[i], c) <= r) m += w[i];
      up = std::max(up, m / r);
      low = std::max(low, r / m);
    }
  CHECK(prof.raw_upper == doctest::Approx(up).epsilon(1e-12));
  CHECK(prof.raw_lower == doctest::Approx(low).epsilon(1e-12));
  // Continuum values 2 and 1/2, up to one sample spacing over 2r.
  CHECK(prof.raw_upper == doctest::Approx(2).epsilon(0.02).scale(0));
  CHECK(prof.raw_lower == doctest::Approx(0.5).epsilon(0.02).scale(0));
  CHECK(prof.A_upper >= 1);
  CHECK(prof.A_upper <= 2.02);
  CHECK(prof.A_lower == 1);
  CHECK_FALSE(prof.zero_mass);

  std::size_t n = 8192;
  auto circ = circle_cloud(n);
  auto mu = circle_arclength(n);
  std::vector<double> radii{1.0 / 64, 1.0 / 16, 0.25};
  std::vector<Point> cc{circ.points[0], circ.points[1000], circ.points[5000]};
  auto cp = regularity_profile(circ, mu.weights(), radii, cc, 1);
  double exact_upper = 0;
  for (double r : radii) exact_upper = std::max(exact_upper, 4 * std::asin(r / 2) / r);
  CHECK(cp.raw_upper == doctest::Approx(exact_upper).epsilon(0.02).scale(0));
  CHECK(cp.A_upper <= std::numbers::pi);
  CHECK(cp.A_lower <= std::numbers::pi);

  auto far = regularity_profile(seg, w, {0.1}, {{5, 5, 0}}, 1);
  CHECK(far.zero_mass);
  CHECK(far.A_lower == kInf);
  CHECK(far.lower_witness[0] == 5);
  CHECK_THROWS_AS(regularity_profile(seg, {1.0}, {0.1}, centres, 1), InputError);
  CHECK_THROWS_AS(regularity_profile(seg, w, {0.0}, centres, 1), InputError);
}

TEST_CASE("inner sawtooth boundary is Ahlfors regular at the sampled scales") {
  HalfPlaneCase hp(1.0 / 64);
  double h = hp.E.mesh;
  auto sample = sample_sawtooth_boundary(hp.saw, h / 4);
  auto w = hausdorff_weights(sample.points, 2, 1, h);
  std::vector<Point> centres;
  for (std::size_t i = 0; i < sample.size(); i += sample.size() / 40) centres.push_back(sample.points[i]);
  std::vector<double> radii;
  for (int j = 1; j <= 6; ++j) radii.push_back(std::ldexp(hp.params.r0, -j));
  auto prof = regularity_profile(sample, w, radii, centres, 1);
  CHECK_FALSE(prof.zero_mass);
  CHECK(prof.A_upper < 20);
  CHECK(prof.A_lower < 20);
  MESSAGE("A_upper " << prof.A_upper << ", A_lower " << prof.A_lower);
}

TEST_CASE("sawtooth construction is deterministic") {
  HalfPlaneCase a(1.0 / 32), b(1.0 / 32);
  CHECK(a.saw.core == b.saw.core);
  CHECK(a.saw.boundary_cubes == b.saw.boundary_cubes);
  auto sa = sample_sawtooth_boundary(a.saw, 0.01), sb = sample_sawtooth_boundary(b.saw, 0.01);
  CHECK(sa.points == sb.points);
}
