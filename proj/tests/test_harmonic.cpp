#include <doctest.h>

#include <algorithm>
#include <numbers>

#include "gmt/gallery.hpp"
#include "gmt/harmonic.hpp"
#include "gmt/metric_cubes.hpp"

using namespace gmt;

namespace {

constexpr double pi = std::numbers::pi;

// Harmonic measure of the boundary interval [a, b] of the upper half-plane seen from z.
double cauchy(const Point& z, double a, double b) { return (std::atan((b - z[0]) / z[1]) - std::atan((a - z[0]) / z[1])) / pi; }

// Poisson integral of the unit disk over the arc [a0, a1], Simpson rule.
double poisson_arc(const Point& z, double a0, double a1) {
  const int n = 20000;
  double s = 0, hstep = (a1 - a0) / n, r2 = norm2(z);
  for (int i = 0; i <= n; ++i) {
    double t = a0 + i * hstep;
    double k = (1 - r2) / (2 * pi * dist2({std::cos(t), std::sin(t), 0}, z));
    s += k * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
  }
  return s * hstep / 3;
}

BoundarySet interval(double a, double b) { return box_set(Box{{a, -1e-9, 0}, {b, 1e-9, 0}}); }

}  // namespace

TEST_CASE("exit law from the disk centre is uniform") {
  auto disk = gallery_domain("disk");
  auto S = run_walks(disk, {0, 0, 0}, 100000, 5);
  std::vector<double> u;
  for (std::size_t i = 0; i < S.size(); ++i) {
    REQUIRE_FALSE(S.escaped(i));
    CHECK(norm(S.point(i)) == doctest::Approx(1).epsilon(1e-12));
    u.push_back((std::atan2(S.point(i)[1], S.point(i)[0]) + pi) / (2 * pi));
  }
  std::sort(u.begin(), u.end());
  double D = 0, n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) D = std::max({D, (i + 1) / n - u[i], u[i] - i / n});
  CHECK(D < 1.628 / std::sqrt(n));  // Kolmogorov-Smirnov, alpha = 0.01

  auto e = S.estimate(arc_set({0, 0, 0}, 0, pi / 3));
  CHECK(std::abs(e.value - 1.0 / 6) <= 3 * e.std_err);
  CHECK(S.estimate([](const Point&) { return true; }).value == 1 - e.escaped_fraction);
  CHECK_FALSE(e.escape_radius);
}

TEST_CASE("calibration against closed forms") {
  SUBCASE("half-plane Cauchy law") {
    auto hp = gallery_domain("half_space");
    auto S = run_walks(hp, {0, 1, 0}, 200000, 9);
    REQUIRE(S.escaped_count() > 0);
    auto e = S.estimate(interval(-1, 1));
    CHECK(e.escape_radius == 1000);
    CHECK(std::abs(e.value - 0.5) <= 3 * e.std_err);
    CHECK(e.escaped_fraction < 0.01);
    for (auto [a, b] : {std::pair{-3.0, -1.0}, {0.0, 0.25}, {2.0, 10.0}}) {
      auto f = S.estimate(interval(a, b));
      CHECK(std::abs(f.value - cauchy({0, 1, 0}, a, b)) <= 3 * f.std_err + e.escaped_fraction);
    }
    auto all = S.estimate([](const Point&) { return true; });
    CHECK(all.value == 1 - all.escaped_fraction);
  }
  SUBCASE("annulus log law") {
    auto ann = gallery_domain("annulus");
    auto e = harmonic_measure(ann, {0.75, 0, 0}, [](const Point& p) { return norm(p) > 0.75; }, 100000, 3);
    CHECK(std::abs(e.value - std::log(1.5) / std::log(2.0)) <= 3 * e.std_err);
  }
  SUBCASE("off-centre disk point against the Poisson integral") {
    auto disk = gallery_domain("disk");
    auto e = harmonic_measure(disk, {0.5, 0, 0}, [](const Point& p) { return p[0] >= 0; }, 100000, 4);
    CHECK(std::abs(e.value - poisson_arc({0.5, 0, 0}, -pi / 2, pi / 2)) <= 3 * e.std_err);
  }
}

TEST_CASE("estimator invariants") {
  auto disk = gallery_domain("disk");
  auto S = run_walks(disk, {0.3, -0.2, 0}, 20000, 8);
  Stream rng(8, 1);
  for (int k = 0; k < 50; ++k) {
    double a = -pi + 2 * pi * rng.uniform(), b = a + pi * rng.uniform(), c = b + pi * rng.uniform();
    auto e1 = S.estimate(arc_set({0, 0, 0}, a, b));
    auto e2 = S.estimate(arc_set({0, 0, 0}, std::nextafter(b, 10.0), c));
    auto e12 = S.estimate(arc_set({0, 0, 0}, a, c));
    CHECK(e1.hits + e2.hits == e12.hits);  // additivity
    CHECK(e1.value <= e12.value);          // monotonicity
    for (const auto& e : {e1, e2, e12}) {
      CHECK(e.value >= 0);
      CHECK(e.value <= 1);
      CHECK(e.std_err == doctest::Approx(std::sqrt(e.value * (1 - e.value) / e.n_walks)));
    }
  }
  CHECK(S.estimate(empty_set()).value == 0);
}

TEST_CASE("walks are reproducible and independent of the worker count") {
  auto hp = gallery_domain("half_space");
  WoSOptions one, three;
  one.workers = 1;
  three.workers = 3;
  auto a = run_walks(hp, {0.2, 0.7, 0}, 5000, 77, one);
  auto b = run_walks(hp, {0.2, 0.7, 0}, 5000, 77, three);
  auto c = run_walks(hp, {0.2, 0.7, 0}, 5000, 78, one);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.point(i) == b.point(i));
    CHECK(a.escaped(i) == b.escaped(i));
    differs = differs || a.point(i) != c.point(i);
  }
  CHECK(a.total_steps() == b.total_steps());
  CHECK(differs);
}

TEST_CASE("convergence and shell bias") {
  auto disk = gallery_domain("disk");
  auto F = arc_set({0, 0, 0}, 0, 1);
  auto e1 = harmonic_measure(disk, {0.3, 0.2, 0}, F, 25000, 2);
  auto e4 = harmonic_measure(disk, {0.3, 0.2, 0}, F, 100000, 2);
  CHECK(e1.std_err / e4.std_err == doctest::Approx(2).epsilon(0.2).scale(0));

  WoSOptions fine;
  fine.eps_shell = 5e-7;
  auto a = run_walks(disk, {0.3, 0.2, 0}, 100000, 6);
  auto b = run_walks(disk, {0.3, 0.2, 0}, 100000, 6, fine);
  auto ea = a.estimate(F), eb = b.estimate(F);
  CHECK(std::abs(ea.value - eb.value) < ea.std_err);
  CHECK(b.total_steps() > a.total_steps());
}

TEST_CASE("input errors") {
  auto disk = gallery_domain("disk");
  Stream rng(1, 1);
  CHECK_THROWS_AS(wos_sample(disk, {2, 0, 0}, rng), InputError);
  CHECK_THROWS_AS(wos_sample(disk, {1 - 1e-7, 0, 0}, rng), InputError);
  CHECK_THROWS_AS(harmonic_measure(disk, {0, 0, 0}, empty_set(), 999, 1), InputError);
  CHECK_THROWS_AS(arc_set({0, 0, 0}, 1, 0), InputError);
  auto a = run_walks(disk, {0, 0, 0}, 100, 1), b = run_walks(disk, {0, 0, 0}, 100, 2);
  CHECK_THROWS_AS(paired_difference(a, b, empty_set()), InputError);
}

TEST_CASE("doubling profile matches Cauchy ratios") {
  auto hp = gallery_domain("half_space");
  DoublingGrid g;
  g.xi0 = {0, 0, 0};
  g.r0 = 2;
  g.centres = {{-0.5, 0, 0}, {0, 0, 0}, {0.5, 0, 0}};
  g.radii = {0.125, 0.25, 0.5, 1};
  Point z0{0, 4, 0};
  auto t = doubling_profile_omega(hp, z0, g, 200000, 12);
  CHECK(t.skipped == 2);  // r = 1 only fits at the centre
  REQUIRE(t.rows.size() == 10);
  CHECK(t.indeterminate == 0);
  for (const auto& row : t.rows) {
    double x = row.xi[0];
    double exact = cauchy(z0, x - 2 * row.r, x + 2 * row.r) / cauchy(z0, x - row.r, x + row.r);
    CHECK(std::abs(row.ratio - exact) <= 3 * row.ratio_err);
    CHECK(row.ratio <= 2.5);
  }
  CHECK(t.sup_ratio == t.rows[t.argmax].ratio);
  CHECK_THROWS_AS(doubling_profile_omega(hp, {0, 0.2, 0}, g, 1000, 1), InputError);

  auto disk = gallery_domain("disk");
  DoublingGrid dg;
  dg.xi0 = {1, 0, 0};
  dg.r0 = 0.5;
  dg.centres = {{1, 0, 0}};
  dg.radii = {0.05, 0.1};
  auto dt = doubling_profile_omega(disk, {0, 0, 0}, dg, 200000, 3);
  for (const auto& row : dt.rows) {
    double exact = std::asin(row.r) / std::asin(row.r / 2);  // arc half-angles 2 asin(s / 2)
    CHECK(std::abs(row.ratio - exact) <= 3 * row.ratio_err);
    CHECK(exact == doctest::Approx(2).epsilon(0.01).scale(0));
  }
}

TEST_CASE("Harnack on the disk") {
  auto disk = gallery_domain("disk");
  auto A = arc_set({0, 0, 0}, -0.3, 0.3);
  double rho = 0.1;
  auto S0 = run_walks(disk, {rho, 0, 0}, 100000, 21);
  for (double phi : {0.5, 1.0, 2.0}) {
    Point y{rho * std::cos(phi), rho * std::sin(phi), 0};
    auto Sy = run_walks(disk, y, 100000, 22);
    auto ex = S0.estimate(A), ey = Sy.estimate(A);
    CHECK(std::abs(ey.value - poisson_arc(y, -0.3, 0.3)) <= 3 * ey.std_err);
    double ratio = ex.value / ey.value;
    CHECK(ratio >= 1.0 / 3);
    CHECK(ratio <= 3);
    // Harnack bound of the Poisson kernel on |z| = rho.
    double bound = (1 + rho) * (1 + rho) / ((1 - rho) * (1 - rho));
    CHECK(ratio <= bound * (1 + 3 * (ex.std_err / ex.value + ey.std_err / ey.value)));
  }
}

TEST_CASE("comparison suite on the half-plane") {
  auto hp = gallery_domain("half_space");
  ComparisonConfig cfg;
  cfg.z0 = {0, 4, 0};
  cfg.centres = {{0, 0, 0}, {1, 0, 0}};
  cfg.radii = {0.25, 1};
  cfg.sub_fractions = {0.5, 0};
  cfg.n_walks = 50000;
  cfg.seed = 5;
  auto rep = comparison_suite(hp, cfg);
  CHECK(rep.missing_corkscrews == 0);
  REQUIRE(rep.big_rows.size() == 4);
  for (const auto& b : rep.big_rows) {
    double exact = cauchy(b.z, b.xi[0] - b.r, b.xi[0] + b.r);
    CHECK(std::abs(b.omega.value - exact) <= 3 * b.omega.std_err);
    CHECK(b.omega.value > 0.3);
  }
  CHECK(rep.big_min > 0.3);
  for (const auto& row : rep.ratio_rows) {
    if (row.fraction == 0) {
      CHECK(row.lhs == 0);
      CHECK(row.rhs == 0);
      CHECK(row.comparability == 1);
      continue;
    }
    double rhs = cauchy(row.z, row.xi[0] - row.fraction * row.r, row.xi[0] + row.fraction * row.r);
    CHECK(std::abs(row.rhs - rhs) <= 3 * row.omega_z_E.std_err);
    CHECK(row.comparability < 4);
  }
  REQUIRE(rep.harnack_rows.size() == 4);
  for (const auto& h : rep.harnack_rows) {
    CHECK(dist(h.x, h.y) == doctest::Approx(h.x[1] / 2));
    CHECK(std::abs(h.at_y.value - cauchy(h.y, h.xi[0] - h.r, h.xi[0] + h.r)) <= 3 * h.at_y.std_err);
  }
  CHECK(rep.harnack_constant < 2);

  // z = (0, r / 2) sees B(0, r) with mass 2 atan(2) / pi.
  auto e = harmonic_measure(hp, {0, 0.5, 0}, interval(-1, 1), 50000, 6);
  CHECK(std::abs(e.value - 2 * std::atan(2.0) / pi) <= 3 * e.std_err);
  CHECK(e.value > 0.7);
}

TEST_CASE("maximum principle sandwich") {
  auto hp = gallery_domain("half_space");
  auto disk = gallery_domain("ball", {{"cy", 1}});
  double h = 0.01;
  std::vector<PointCloud> Fs{segment_cloud({-0.01, 0, 0}, {0.01, 0, 0}, 5)};
  auto rep = max_principle_check(disk, hp, Fs, h, {0, 1, 0}, 100000, 3);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.pass);
  CHECK(rep.rows[0].inner.value < rep.rows[0].outer.value);
  // Swapping the roles breaks the inequality.
  auto bad = max_principle_check(hp, disk, Fs, h, {0, 1, 0}, 100000, 3);
  CHECK_FALSE(bad.pass);

  auto small = gallery_domain("ball", {{"radius", 0.5}});
  auto big = gallery_domain("disk");
  std::vector<PointCloud> circle{circle_cloud(64, 0.5)};
  CHECK_THROWS_AS(max_principle_check(small, big, circle, h, {0, 0, 0}, 1000, 1), InputError);
  CHECK_THROWS_AS(max_principle_check(disk, hp, Fs, h, {0, 3, 0}, 1000, 1), InputError);
}

TEST_CASE("A-infinity scatter on a flat boundary") {
  auto hp = gallery_domain("half_space");
  double h = 1.0 / 128;
  auto E = segment_cloud({0, 0, 0}, {1, 0, 0}, 129);
  auto tree = build_cube_tree(E, 0.25, 4);
  AinftyConfig cfg;
  cfg.centres = {{0.5, 0, 0}, {0.25, 0, 0}};
  cfg.radii = {0.5, 0.25};
  Point z0{0.5, 1, 0};
  std::size_t n = 100000;
  auto sc = ainfty_scatter(hp, tree, h, z0, cfg, n, 17);
  CHECK(sc.dropped == 0);
  CHECK(sc.domain == "half_space");
  std::size_t empties = 0, cells = 0;
  for (const auto& row : sc.rows) {
    CHECK(row.omega_ratio >= 0);
    CHECK(row.omega_ratio <= 1);
    if (!row.cube) {
      ++empties;
      CHECK(row.omega_ratio == 0);
      CHECK(row.hd_ratio == 0);
      continue;
    }
    ++cells;
    // Exits attributed to a cell fill the interval spanned by its Voronoi cells.
    double lo = kInf, hi = -kInf;
    for (std::size_t i : tree.cube(*row.cube).members) {
      lo = std::min(lo, E.points[i][0]);
      hi = std::max(hi, E.points[i][0]);
    }
    double len = hi - lo + h;
    double wB = cauchy(z0, row.xi[0] - row.r, row.xi[0] + row.r);
    double a = lo == 0 ? -2 * h : lo - h / 2, b = hi == 1 ? 1 + 2 * h : hi + h / 2;
    double wF = cauchy(z0, a, b);
    CHECK(std::abs(row.omega_ratio - wF / wB) <= 3 * row.omega_err + 0.02);
    // Per-point H^d shares average out over larger cells only; a cover cell
    // holding a single sample hands it the whole cell mass.
    if (tree.cube(*row.cube).members.size() >= 16) {
      CHECK(row.hd_ratio == doctest::Approx(len / row.r).epsilon(0.15).scale(0));
    } else {
      CHECK(row.hd_ratio >= 0.5 * len / row.r);
      CHECK(row.hd_ratio <= 2 * len / row.r);
    }
    double length_ratio = (b - a) / (2 * row.r);
    CHECK(row.omega_ratio <= 2 * length_ratio);
    CHECK(row.omega_ratio >= length_ratio / 2);
  }
  CHECK(empties == 4);
  CHECK(cells > 20);
  REQUIRE(sc.modulus.size() == 3);
  for (const auto& m : sc.modulus) {
    CHECK(m.delta_omega > 0);
    CHECK(m.delta_hd > 0);
  }
}

TEST_CASE("perforations lower the measure of the plane") {
  WoSOptions opt;
  opt.workers = 1;
  auto F = [](const Point& p) { return std::abs(p[2]) < 1e-9 && p[0] * p[0] + p[1] * p[1] <= 1; };
  auto a = run_walks(gallery_domain("perforated_half_space", {{"m", 0}}), {0.1, 0.2, 1.5}, 20000, 4, opt);
  auto b = run_walks(gallery_domain("perforated_half_space", {{"m", 2}}), {0.1, 0.2, 1.5}, 20000, 4, opt);
  auto d = paired_difference(a, b, F);
  CHECK(d.diff > 0);
  CHECK(d.diff == doctest::Approx((double(a.count(F)) - double(b.count(F))) / 20000));
}
