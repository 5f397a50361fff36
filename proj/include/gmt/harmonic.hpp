#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gmt/cloud.hpp"
#include "gmt/domain.hpp"
#include "gmt/kdtree.hpp"
#include "gmt/metric_cubes.hpp"
#include "gmt/rng.hpp"

namespace gmt {

struct WoSOptions {
  double eps_shell = 1e-6;
  double r0 = 1;               // reference scale of the escape radius
  double escape_radius = -1;   // negative: 1e3 r0 for unbounded domains, none for bounded ones
  std::size_t max_steps = 100000;
  unsigned workers = 0;        // 0: hardware concurrency
};

/// Escape radius in force for a domain, or nullopt.
std::optional<double> escape_radius(const ImplicitDomain& domain, const WoSOptions& opt);

struct WoSExit {
  Point point{0, 0, 0};
  bool escaped = false;
  std::size_t steps = 0;
};

/// One walk from z. Jumps by |sdist| in a uniform direction until the shell is
/// reached, then projects to the boundary (when the domain has a projector;
/// otherwise the shell point itself is returned).
WoSExit wos_sample(const ImplicitDomain& domain, const Point& z, Stream& rng, const WoSOptions& opt = {});

/// Boundary-set oracle evaluated on exit points.
using BoundarySet = std::function<bool(const Point&)>;

BoundarySet ball_set(const Point& centre, double r);  // closed ball
BoundarySet box_set(const Box& box);                  // closed box
BoundarySet arc_set(const Point& centre, double a0, double a1);  // polar angle in [a0, a1], planar
/// Points within `radius` of the cloud (closed).
BoundarySet cloud_set(const PointCloud& F, double radius);
BoundarySet empty_set();

struct WoSEstimate {
  double value = 0;
  std::size_t n_walks = 0;
  std::size_t hits = 0;
  double std_err = 0;
  double eps_shell = 0;
  std::optional<double> escape_radius;
  std::uint64_t seed = 0;
  double escaped_fraction = 0;
  bool unreliable = false;  // more than half of the walks escaped
};

/// Exit points of n independent walks from one start point. Walk i uses
/// Stream(seed, i), so the sample does not depend on the worker count.
class ExitSample {
 public:
  ExitSample() = default;

  const Point& start() const { return z_; }
  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  bool escaped(std::size_t i) const { return escaped_[i] != 0; }
  std::size_t escaped_count() const { return n_escaped_; }
  std::size_t total_steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t count(const BoundarySet& F) const;
  WoSEstimate estimate(const BoundarySet& F) const;
  WoSEstimate estimate_count(std::size_t hits) const;

  friend ExitSample run_walks(const ImplicitDomain& domain, const Point& z, std::size_t n_walks, std::uint64_t seed,
                              const WoSOptions& opt);

 private:
  Point z_{0, 0, 0};
  std::uint64_t seed_ = 0;
  double eps_ = 0;
  std::optional<double> escape_;
  std::vector<Point> points_;
  std::vector<char> escaped_;
  std::size_t n_escaped_ = 0;
  std::size_t steps_ = 0;
};

ExitSample run_walks(const ImplicitDomain& domain, const Point& z, std::size_t n_walks, std::uint64_t seed,
                     const WoSOptions& opt = {});

/// Requires n_walks >= 1000.
WoSEstimate harmonic_measure(const ImplicitDomain& domain, const Point& z, const BoundarySet& F, std::size_t n_walks,
                             std::uint64_t seed, const WoSOptions& opt = {});

struct PairedDifference {
  double diff = 0;     // omega_a(F) - omega_b(F)
  double std_err = 0;  // from the per-walk differences
};

/// Difference of two estimates from samples sharing seed and size. Walk i of
/// both samples uses the same stream, so nearby domains give coupled walks.
PairedDifference paired_difference(const ExitSample& a, const ExitSample& b, const BoundarySet& F);

/// Standard error of a ratio of nested-set estimates p2 / p1 (p1 <= p2) from one sample.
double nested_ratio_err(double p1, double p2, std::size_t n);

struct DoublingRow {
  Point xi{0, 0, 0};
  double r = 0;
  WoSEstimate small, large;  // B(xi, r) and B(xi, 2r)
  double ratio = 0;
  double ratio_err = 0;
  bool indeterminate = false;  // small.value < 10 small.std_err
};

struct DoublingTable {
  std::vector<DoublingRow> rows;
  double sup_ratio = 0;  // over determinate rows
  std::size_t argmax = 0;
  std::size_t indeterminate = 0;
  std::size_t skipped = 0;  // grid points with B(xi, 2r) not inside B(xi0, r0)
};

struct DoublingGrid {
  Point xi0{0, 0, 0};
  double r0 = 1;
  std::vector<Point> centres;  // boundary points
  std::vector<double> radii;
};

/// omega^{z0}(B(xi, 2r)) / omega^{z0}(B(xi, r)) over the admissible grid, all
/// from one exit sample. z0 must lie outside B(xi0, 2 r0) or at depth >= r0 / 8.
DoublingTable doubling_profile_omega(const ImplicitDomain& domain, const Point& z0, const DoublingGrid& grid,
                                     std::size_t n_walks, std::uint64_t seed, const WoSOptions& opt = {});

struct ComparisonConfig {
  Point z0{0, 0, 0};
  std::vector<Point> centres;
  std::vector<double> radii;
  std::vector<double> sub_fractions{0.5, 0.25};  // E = boundary in B(xi, f r); f = 0 is the empty set
  double corkscrew_C = 4;
  std::size_t n_walks = 100000;
  std::uint64_t seed = 1;
  WoSOptions wos;
};

struct RatioRow {
  Point xi{0, 0, 0};
  double r = 0;
  double fraction = 0;
  Point z{0, 0, 0};          // corkscrew point of B(xi, r)
  WoSEstimate omega0_E, omega0_B, omega_z_E;
  double lhs = 0;            // omega0(E) / omega0(B)
  double rhs = 0;            // omega^z(E)
  double comparability = 1;  // max(lhs / rhs, rhs / lhs); 1 when both vanish
  bool indeterminate = false;
};

struct BigRow {
  Point xi{0, 0, 0};
  double r = 0;
  Point z{0, 0, 0};
  WoSEstimate omega;  // omega^z(B(xi, r))
};

struct HarnackRow {
  Point xi{0, 0, 0};
  double r = 0;
  Point x{0, 0, 0}, y{0, 0, 0};
  WoSEstimate at_x, at_y;  // omega(B(xi, r)) from x and from y
  double ratio = 1;        // at_x / at_y
  bool indeterminate = false;
};

struct ComparisonReport {
  std::vector<RatioRow> ratio_rows;
  std::vector<BigRow> big_rows;
  std::vector<HarnackRow> harnack_rows;
  double ratio_constant = 1;    // max comparability over determinate rows
  double big_min = 1;           // min omega^z(B)
  double harnack_constant = 1;  // max of ratio and 1/ratio over determinate rows
  std::size_t indeterminate = 0;
  std::size_t missing_corkscrews = 0;
};

/// Both sides of the ratio, positivity and Harnack comparisons at every grid
/// ball. The Harnack partner of the corkscrew point x is x moved tangentially
/// by half its depth (a neighbouring Whitney cube).
ComparisonReport comparison_suite(const ImplicitDomain& domain, const ComparisonConfig& cfg);

struct SandwichRow {
  WoSEstimate inner, outer;
  double margin = 0;  // outer + 3 joint std_err - inner
  bool pass = false;
};

struct MaxPrincipleReport {
  std::vector<SandwichRow> rows;
  bool pass = false;
};

/// omega_inner^z(F) <= omega_outer^z(F) within three joint standard errors for
/// each F, a cloud neighbourhood of radius 2h whose points lie within 2h of
/// both boundaries.
MaxPrincipleReport max_principle_check(const ImplicitDomain& inner, const ImplicitDomain& outer,
                                       const std::vector<PointCloud>& Fs, double h, const Point& z,
                                       std::size_t n_walks, std::uint64_t seed, const WoSOptions& opt = {});

struct AinftyRow {
  Point xi{0, 0, 0};
  double r = 0;
  std::optional<std::size_t> cube;  // nullopt for the empty set
  double omega_ratio = 0;           // omega(F) / omega(B(xi, r))
  double hd_ratio = 0;              // H^d(F) / r^d
  double omega_err = 0;
};

struct AinftyModulus {
  double epsilon = 0;
  double delta_omega = kInf;  // omega_ratio < delta implies hd_ratio < epsilon
  double delta_hd = kInf;     // hd_ratio < delta implies omega_ratio < epsilon
};

struct AinftyScatter {
  std::string domain;
  std::uint64_t seed = 0;
  std::vector<AinftyRow> rows;
  std::vector<AinftyModulus> modulus;
  std::size_t dropped = 0;  // grid balls with indeterminate omega(B)
};

struct AinftyConfig {
  std::vector<Point> centres;
  std::vector<double> radii;
  int level_span = 4;  // cube levels used below the coarsest one with ell <= r
  std::vector<double> epsilons{0.5, 0.2, 0.1};
  int d = 1;
  double hd_scale = -1;  // cover scale of the H^d weights; negative means 4 x mesh of E
};

/// Test sets are cube-tree cells of E whose members lie in B(xi, r - 2h) with
/// ell(cell) <= r, down to `level_span` levels below the first such level; each
/// ball also gets an empty-set row. An exit point belongs to the cell of its
/// nearest E point when that point is within 2h.
AinftyScatter ainfty_scatter(const ImplicitDomain& domain, const CubeTree& E_tree, double h, const Point& z0,
                             const AinftyConfig& cfg, std::size_t n_walks, std::uint64_t seed,
                             const WoSOptions& opt = {});

}  // namespace gmt
