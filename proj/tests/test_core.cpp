#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <sstream>

#include "gmt/box_index.hpp"
#include "gmt/cloud.hpp"
#include "gmt/gallery.hpp"
#include "gmt/kdtree.hpp"
#include "gmt/rng.hpp"
#include "gmt/sampling.hpp"

using namespace gmt;

namespace {

Point random_in(Stream& rng, const Box& b, int dim, double pad = 0) {
  Point p{0, 0, 0};
  for (int k = 0; k < dim; ++k) p[k] = b.lo[k] - pad + (b.hi[k] - b.lo[k] + 2 * pad) * rng.uniform();
  return p;
}

Box random_box(Stream& rng, const Box& region, int dim) {
  Point c = random_in(rng, region, dim, 0.5);
  double side = std::exp2(-8 * rng.uniform()) * 2;
  Box b;
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = c[k] - side * rng.uniform();
    b.hi[k] = c[k] + side * rng.uniform();
  }
  return b;
}

std::vector<std::pair<std::string, Params>> gallery_cases() {
  return {{"ball", {}},
          {"ball", {{"dim", 3}, {"radius", 0.5}, {"cx", 0.25}}},
          {"disk", {}},
          {"half_space", {}},
          {"half_space", {{"dim", 3}}},
          {"slab", {}},
          {"lipschitz_graph", {}},
          {"lipschitz_graph", {{"slope", 3}, {"period", 0.25}}},
          {"perforated_half_space", {{"m", 3}}},
          {"cube_complement", {}},
          {"cube_complement", {{"dim", 3}}},
          {"annulus", {}},
          {"annulus", {{"dim", 3}}},
          {"punctured_plane", {}},
          {"rooms_and_corridor", {}},
          {"rooms_and_corridor", {{"w", 0}}}};
}

}  // namespace

TEST_CASE("signed distance on reference points") {
  CHECK(signed_distance(gallery_domain("ball"), {0, 0, 0}) == doctest::Approx(-1));
  CHECK(signed_distance(gallery_domain("half_space"), {3, 2, 0}) == doctest::Approx(-2));
  CHECK_THROWS_AS(signed_distance(gallery_domain("ball"), {kInf, 0, 0}), InputError);
  CHECK_THROWS_AS(signed_distance(gallery_domain("ball"), {std::nan(""), 0, 0}), InputError);
}

TEST_CASE("perforated half-space matches an exhaustive minimum over balls and plane") {
  auto dom = gallery_domain("perforated_half_space", {{"m", 2}});
  Stream rng(11, 0);
  std::vector<Point> probes{{0, 0, 1}, {0.1, 0.2, 0.3}, {0.25, 0.25, 0.25}, {0.5, 0, 0.5 + 1e-4}, {0.3, -0.7, -0.2}};
  for (int i = 0; i < 200; ++i) probes.push_back({2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 1.2 * rng.uniform() - 0.1});
  for (const Point& x : probes) {
    // Omega is the upper half-space minus closed balls: sdist = max(-z, max_i (r_i - |x - c_i|)).
    double expect = -x[2];
    for (int n = 0; n <= 2; ++n) {
      double s = std::ldexp(1.0, -n), r = std::ldexp(1.0, -n - 10);
      for (int i = -4 * (1 << n); i <= 4 * (1 << n); ++i)
        for (int j = -4 * (1 << n); j <= 4 * (1 << n); ++j) expect = std::max(expect, r - dist(x, {i * s, j * s, s}));
    }
    CHECK(dom.sdist(x) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(dom.sdist({0, 0, 1}) == doctest::Approx(std::ldexp(1.0, -10)));
}

TEST_CASE("gallery rejects bad input") {
  CHECK_THROWS_AS(gallery_domain("moebius"), InputError);
  CHECK_THROWS_AS(gallery_domain("perforated_half_space", {{"m", -1}}), InputError);
  CHECK_THROWS_AS(gallery_domain("ball", {{"radius", 0}}), InputError);
  CHECK_THROWS_AS(gallery_domain("annulus", {{"r_in", 2}}), InputError);
}

TEST_CASE("sdist is 1-Lipschitz and consistent with the box predicates on every gallery domain") {
  for (const auto& [name, params] : gallery_cases()) {
    CAPTURE(name);
    auto dom = gallery_domain(name, params);
    Stream rng(7, std::hash<std::string>{}(name));
    for (int i = 0; i < 1000; ++i) {
      Point x = random_in(rng, dom.bbox, dom.dim, 0.5);
      Point y = i % 2 ? random_in(rng, dom.bbox, dom.dim, 0.5) : x + 0.01 * rng.direction(dom.dim);
      if (dom.dim == 2) y[2] = 0;
      CHECK(std::abs(dom.sdist(x) - dom.sdist(y)) <= dist(x, y) + 1e-9);
    }
    for (int i = 0; i < 1000; ++i) {
      Box b = random_box(rng, dom.bbox, dom.dim);
      double s = dom.sdist(b.center());
      bool comp = box_hits_complement(dom, b), clos = box_hits_closure(dom, b);
      if (s >= 0) CHECK(comp);
      if (s <= 0) CHECK(clos);
      if (-s > b.half_diagonal()) CHECK_FALSE(comp);
      if (s > b.half_diagonal()) CHECK_FALSE(clos);
      CHECK((comp || clos));
    }
  }
}

TEST_CASE("projection lands on the boundary") {
  for (const auto& [name, params] : gallery_cases()) {
    CAPTURE(name);
    auto dom = gallery_domain(name, params);
    if (name == "rooms_and_corridor") continue;  // wall tops are not boundary points
    Stream rng(8, 1);
    for (int i = 0; i < 300; ++i) {
      Point x = random_in(rng, dom.bbox, dom.dim);
      Point q = project_to_boundary(dom, x);
      CHECK(std::abs(dom.sdist(q)) <= 1e-9);
      CHECK(dist(x, q) <= std::abs(dom.sdist(x)) + 1e-9);
    }
  }
}

TEST_CASE("boundary sampling on the unit circle") {
  auto dom = gallery_domain("ball");
  auto s = sample_boundary(dom, 0.1);
  CHECK_FALSE(s.empty_warning);
  CHECK(s.cloud.size() >= 62);
  std::vector<double> ang;
  for (const Point& p : s.cloud.points) {
    CHECK(std::abs(dom.sdist(p)) <= dom.tol);
    ang.push_back(std::atan2(p[1], p[0]));
  }
  std::sort(ang.begin(), ang.end());
  double worst = ang.front() + 2 * std::numbers::pi - ang.back();
  for (std::size_t i = 1; i < ang.size(); ++i) worst = std::max(worst, ang[i] - ang[i - 1]);
  CHECK(worst <= 0.2);
  // h-net check against a parametric sampling of the circle.
  KdTree tree(s.cloud.points, 2);
  for (int i = 0; i < 2000; ++i) {
    double a = 2 * std::numbers::pi * i / 2000.0;
    CHECK(tree.nearest({std::cos(a), std::sin(a), 0}).distance <= 0.2);
  }
}

TEST_CASE("boundary sampling on a half-plane and an empty bbox") {
  auto dom = gallery_domain("half_space");
  auto s = sample_boundary(dom, 1);
  CHECK(s.cloud.size() >= 9);
  for (const Point& p : s.cloud.points) {
    CHECK(p[1] == 0);
    CHECK(p[0] >= -4);
    CHECK(p[0] <= 4);
  }
  dom.bbox.lo = {-1, 1, 0};
  dom.bbox.hi = {1, 2, 0};
  auto e = sample_boundary(dom, 0.1);
  CHECK(e.empty_warning);
  CHECK(e.cloud.empty());
  CHECK_THROWS_AS(sample_boundary(dom, 0), InputError);
}

TEST_CASE("sampling net property holds on random boundary points in 3D") {
  auto dom = gallery_domain("ball", {{"dim", 3}});
  double h = 0.1;
  auto s = sample_boundary(dom, h);
  KdTree tree(s.cloud.points, 3);
  Stream rng(3, 3);
  for (int i = 0; i < 2000; ++i) CHECK(tree.nearest(rng.direction(3)).distance <= 2 * h);
}

TEST_CASE("halving the mesh scales smooth boundary curves by a factor in [1.5, 4]") {
  for (const auto& [name, params] : std::vector<std::pair<std::string, Params>>{
           {"ball", {}}, {"annulus", {}}, {"lipschitz_graph", {}}, {"cube_complement", {}}}) {
    CAPTURE(name);
    auto dom = gallery_domain(name, params);
    for (double h : {0.1, 0.05, 0.02}) {
      double a = static_cast<double>(sample_boundary(dom, h).cloud.size());
      double b = static_cast<double>(sample_boundary(dom, h / 2).cloud.size());
      CHECK(b / a >= 1.5);
      CHECK(b / a <= 4);
    }
  }
}

TEST_CASE("halving the mesh scales smooth surfaces by about 4") {
  for (const auto& [name, params] :
       std::vector<std::pair<std::string, Params>>{{"ball", {{"dim", 3}}}, {"annulus", {{"dim", 3}}}}) {
    CAPTURE(name);
    auto dom = gallery_domain(name, params);
    double a = static_cast<double>(sample_boundary(dom, 0.1).cloud.size());
    double b = static_cast<double>(sample_boundary(dom, 0.05).cloud.size());
    CHECK(b / a == doctest::Approx(4).epsilon(0.1).scale(0));
  }
}

TEST_CASE("cover-count Hausdorff estimates") {
  double h = std::ldexp(1.0, -8);
  std::vector<Point> seg, circ;
  for (int i = 0; i <= 32 * 256; ++i) seg.push_back({i / 8192.0, 0, 0});
  const int n = 32 * 1608;  // arc spacing about h / 32
  for (int i = 0; i < n; ++i) {
    double a = 2 * std::numbers::pi * i / n;
    circ.push_back({std::cos(a), std::sin(a), 0});
  }
  CHECK(hausdorff_estimate(seg, 2, 1, h).value == doctest::Approx(1).epsilon(0.02).scale(0));
  CHECK(hausdorff_estimate(circ, 2, 1, h).value == doctest::Approx(2 * std::numbers::pi).epsilon(0.03).scale(0));
  for (double hh : {0.5, 0.01, 3.0}) CHECK(hausdorff_estimate({{0.3, 0.4, 0}}, 2, 1, hh).value == doctest::Approx(hh));
  auto empty = hausdorff_estimate({}, 2, 1, h);
  CHECK(empty.empty);
  CHECK(empty.value == 0);
  auto w = hausdorff_weights(circ, 2, 1, h);
  double sum = 0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(hausdorff_estimate(circ, 2, 1, h).value).epsilon(1e-9));
}

TEST_CASE("unit square in 3D has area close to 1") {
  double h = 1.0 / 64;
  std::vector<Point> sq;
  for (int i = 0; i <= 512; ++i)
    for (int j = 0; j <= 512; ++j) sq.push_back({i / 512.0, j / 512.0 * 0.6, j / 512.0 * 0.8});
  CHECK(hausdorff_estimate(sq, 3, 2, h).value == doctest::Approx(1).epsilon(0.05).scale(0));
}

TEST_CASE("Hausdorff estimate is monotone under inclusion") {
  Stream rng(5, 5);
  std::vector<Point> base;
  for (int i = 0; i < 4000; ++i) {
    double a = 2 * std::numbers::pi * rng.uniform();
    base.push_back({std::cos(a), std::sin(a) * (0.5 + rng.uniform()), 0});
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point> small, big;
    double keep = rng.uniform();
    for (const Point& p : base) {
      double u = rng.uniform();
      if (u < keep) small.push_back(p);
      if (u < keep || rng.uniform() < 0.5) big.push_back(p);
    }
    double h = std::exp2(-2 - 6 * rng.uniform());
    int d = trial % 3;
    CHECK(hausdorff_estimate(small, 2, d, h).value <= hausdorff_estimate(big, 2, d, h).value);
  }
}

TEST_CASE("k-d tree agrees with brute force") {
  Stream rng(9, 9);
  for (int dim : {2, 3}) {
    std::vector<Point> pts;
    for (int i = 0; i < 500; ++i) {
      Point p = random_in(rng, make_box(dim, 0, 1), dim);
      if (i % 7 == 0) p = pts.empty() ? p : pts[i / 2];  // duplicates
      pts.push_back(p);
    }
    KdTree tree(pts, dim);
    for (int q = 0; q < 200; ++q) {
      Point x = random_in(rng, make_box(dim, 0, 1), dim, 0.2);
      double r = 0.3 * rng.uniform();
      std::size_t best = 0;
      std::vector<std::size_t> within, in_box;
      Box b;
      for (int k = 0; k < dim; ++k) {
        b.lo[k] = x[k] - r;
        b.hi[k] = x[k] + r / 2;
      }
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (dist2(pts[i], x) < dist2(pts[best], x)) best = i;
        if (dist(pts[i], x) < r) within.push_back(i);
        if (b.contains(pts[i])) in_box.push_back(i);
      }
      auto hit = tree.nearest(x);
      CHECK(hit.index == best);
      CHECK(hit.distance == doctest::Approx(dist(pts[best], x)));
      CHECK(tree.within(x, r) == within);
      CHECK(tree.in_box(b) == in_box);
      CHECK(tree.any_in_box(b) == !in_box.empty());
    }
  }
  CHECK(KdTree({}, 2).nearest({0, 0, 0}).distance == kInf);
}

TEST_CASE("box index agrees with brute force") {
  Stream rng(10, 10);
  for (int dim : {2, 3}) {
    std::vector<Box> boxes;
    for (int i = 0; i < 300; ++i) boxes.push_back(random_box(rng, make_box(dim, 0, 1), dim));
    BoxIndex idx(boxes, dim);
    for (int q = 0; q < 300; ++q) {
      Point x = random_in(rng, make_box(dim, 0, 1), dim, 0.5);
      double depth = 0, d = kInf;
      for (const auto& b : boxes) {
        depth = std::max(depth, -box_sdist(x, b, dim));
        d = std::min(d, dist_to_box(x, b));
      }
      CHECK(idx.max_depth(x) == depth);
      CHECK(idx.min_dist(x) == d);
      CHECK(idx.open_contains(x) == (depth > 0));
      Box probe = random_box(rng, make_box(dim, 0, 1), dim);
      std::vector<std::size_t> hit;
      for (std::size_t i = 0; i < boxes.size(); ++i)
        if (box_box_dist(boxes[i], probe) == 0) hit.push_back(i);
      CHECK(idx.intersecting(probe) == hit);
    }
  }
  BoxIndex empty({}, 2);
  CHECK(empty.max_depth({0, 0, 0}) == 0);
  CHECK(empty.min_dist({0, 0, 0}) == kInf);
}

TEST_CASE("exposed faces give the distance to the boundary of a box union") {
  Stream rng(11, 3);
  for (int dim : {2, 3}) {
    // Box corners on a 1/8 grid and face samples on a 1/32 grid, so every
    // vertex and edge of the exposed set is sampled exactly.
    auto snap = [](double v) { return std::round(v * 8) / 8; };
    std::vector<Box> boxes;
    for (int i = 0; i < (dim == 2 ? 40 : 25); ++i) {
      Box b;
      for (int k = 0; k < dim; ++k) {
        double a = snap(rng.uniform()), c = snap(rng.uniform());
        if (a == c) c = a + 0.125;
        b.lo[k] = std::min(a, c);
        b.hi[k] = std::max(a, c);
      }
      boxes.push_back(b);
    }
    BoxIndex idx(boxes, dim);
    BoxIndex ex(exposed_faces(idx, dim), dim);
    auto covered = [&](const Point& p) {
      for (const auto& b : boxes)
        if (-box_sdist(p, b, dim) > 0) return true;
      return false;
    };
    for (std::size_t i = 0; i < ex.size(); ++i) CHECK_FALSE(covered(ex.box(i).center()));
    std::vector<Point> bare;
    const int n = 32;
    for (const auto& b : boxes)
      for (int k = 0; k < dim; ++k)
        for (double c : {b.lo[k], b.hi[k]}) {
          int a1 = (k + 1) % dim, a2 = (k + 2) % dim;
          int n1 = static_cast<int>(std::lround((b.hi[a1] - b.lo[a1]) * n));
          int n2 = dim == 3 ? static_cast<int>(std::lround((b.hi[a2] - b.lo[a2]) * n)) : 0;
          for (int i = 0; i <= n1; ++i)
            for (int j = 0; j <= n2; ++j) {
              Point p{0, 0, 0};
              p[k] = c;
              p[a1] = b.lo[a1] + static_cast<double>(i) / n;
              if (dim == 3) p[a2] = b.lo[a2] + static_cast<double>(j) / n;
              if (!covered(p)) bare.push_back(p);
            }
        }
    int tested = 0;
    while (tested < 100) {
      Point x = random_in(rng, make_box(dim, 0, 1), dim, 0);
      if (!covered(x)) continue;
      ++tested;
      double oracle = kInf;
      for (const auto& p : bare) oracle = std::min(oracle, dist(x, p));
      double d = ex.min_dist(x);
      CHECK(d <= oracle + 1e-12);
      CHECK(d >= oracle - std::sqrt(dim - 1.0) / (2.0 * n) - 1e-12);
      CHECK(d >= idx.max_depth(x) - 1e-12);
    }
  }
}

TEST_CASE("cloud CSV round trip") {
  auto c = circle_cloud(16);
  auto mu = circle_arclength(16);
  std::stringstream ss;
  write_cloud_csv(ss, c, &mu);
  CHECK(ss.str().rfind("x0,x1,weight\n", 0) == 0);
  auto back = read_cloud_csv(ss);
  CHECK(back.cloud.dim == 2);
  REQUIRE(back.cloud.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(back.cloud.points[i] == c.points[i]);
    CHECK(back.measure[i] == mu[i]);
  }
  std::stringstream bad("x0,x1,weight\n1,zz,1\n");
  CHECK_THROWS_AS(read_cloud_csv(bad), InputError);
  CHECK_THROWS_AS(DiscreteMeasure({1.0, -1.0}), InputError);
}
