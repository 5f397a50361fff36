#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gmt/box_index.hpp"
#include "gmt/cloud.hpp"
#include "gmt/kdtree.hpp"
#include "gmt/whitney.hpp"

namespace gmt {

enum class SawtoothKind { inner, outer };

struct SawtoothParams {
  double C0 = 7;
  int C_tilde = 8;
  double lambda = 9.0 / 8.0;
  double K = 12;  // outer only; the inner forest is W_3(Omega)
  double r0 = 1;
  Point xi0{0, 0, 0};
};

/// E is treated as the closed rho-neighbourhood of its sample cloud, rho = E.mesh,
/// so that a sampled curve is not porous between its samples.
struct ThickSet {
  KdTree index;
  double rho = 0;
  int dim = 2;

  ThickSet() = default;
  explicit ThickSet(const PointCloud& E);
  double distance(const Point& x) const { return std::max(0.0, index.nearest(x).distance - rho); }
  bool meets(const Box& b) const;
};

struct SawtoothDomain {
  SawtoothKind kind = SawtoothKind::inner;
  ImplicitDomain base;
  SawtoothParams params;
  WhitneyForest forest;
  Box forest_box;
  PointCloud E;
  ThickSet E_thick;
  std::vector<std::size_t> seed;  // C_E^- for inner, C_E^+ for outer
  std::vector<std::size_t> core;  // sorted forest indices (C~_E^- or C_E^+)
  std::vector<char> in_core;      // per forest cube
  std::vector<std::size_t> boundary_cubes;  // core cubes with an out-of-core neighbour
  bool truncated = false;  // forest truncation meets the cubes the core is drawn from
  double trace_tol = 0;    // distance to the base boundary counted as touching it

  int dim() const { return base.dim; }
  /// Open dilated core boxes, in core order.
  const BoxIndex& boxes() const { return *boxes_; }
  const BoxIndex& boundary_index() const { return *boundary_index_; }
  /// Inner only: exposed face pieces, whose union is the sawtooth boundary.
  const BoxIndex& exposed() const { return *exposed_; }

  bool inside(const Point& x) const { return sdist(x) < 0; }
  /// Negative inside; the magnitude never exceeds the distance to the boundary
  /// (and equals it for the inner sawtooth).
  double sdist(const Point& x) const;

  /// Rebuilds the derived indices after `core` changed.
  void refresh();

 private:
  std::shared_ptr<const BoxIndex> boxes_;
  std::shared_ptr<const BoxIndex> boundary_index_;
  std::shared_ptr<const BoxIndex> exposed_;
};

/// W_3(Omega) over the cube [xi0 - C r0, xi0 + C r0]^D, pruned to cubes within
/// 64 side lengths of E.
WhitneyForest inner_forest(const ImplicitDomain& domain, const PointCloud& E, const SawtoothParams& params, int n_min,
                           double C_minus = 16);
Box inner_forest_box(const SawtoothParams& params, int dim, double C_minus = 16);

/// Default finest level for a cloud of mesh h: floor(log2 h) - 4.
int sawtooth_n_min(double h);

SawtoothDomain build_inner_sawtooth(const ImplicitDomain& domain, WhitneyForest forest, const Box& forest_box,
                                    const PointCloud& E, const SawtoothParams& params);

/// Omega union the open dilates of the cubes of W_K(R^D minus E) meeting the
/// boundary, computed inside `box` down to n_min.
SawtoothDomain build_outer_sawtooth(const ImplicitDomain& domain, const PointCloud& E, const SawtoothParams& params,
                                    const Box& box, int n_min);

/// Same sawtooth with a different core (seed and in_core are recomputed).
SawtoothDomain with_core(const SawtoothDomain& saw, std::vector<std::size_t> core);

/// Adapter for walk-on-spheres and the NTA checks.
ImplicitDomain sawtooth_as_domain(std::shared_ptr<const SawtoothDomain> saw);

/// Points of the sawtooth boundary: box faces sampled at spacing <= s that lie
/// in no open box (and, for outer, outside Omega), plus for outer the uncovered
/// base boundary samples.
PointCloud sample_sawtooth_boundary(const SawtoothDomain& saw, double s);

struct SawtoothStats {
  double C_minus_emp = 0;   // max |x - xi0| / r0 over the core boxes
  double diam_ratio = 0;    // diam of the boundary sample over r0
  std::size_t core_size = 0, seed_size = 0, boundary_size = 0;
  int min_level = 0, max_level = 0;
};
SawtoothStats sawtooth_stats(const SawtoothDomain& saw, const PointCloud& boundary_sample);

struct BoundaryCubeSet {
  Point xi{0, 0, 0};
  double r = 0;
  std::vector<std::size_t> cubes;  // forest indices
  double sum_d = 0;                // sum of side^(D-1)
  std::size_t tail_cubes = 0;      // listed cubes at the finest level
  double tail_sum = 0;
  bool clipped = false;  // B(xi, r) leaves the forest box
  bool xi_in_E = true;
};

BoundaryCubeSet boundary_cube_sum(const SawtoothDomain& saw, const Point& xi, double r);

struct BoundarySumSweep {
  std::vector<BoundaryCubeSet> rows;
  double sup_ratio = 0;  // max sum_d / r^(D-1)
  std::size_t argmax = 0;
  bool any_clipped = false, any_outside_E = false;
};

BoundarySumSweep boundary_sum_sweep(const SawtoothDomain& saw, const std::vector<Point>& xis,
                                    const std::vector<double>& radii);

struct RegularityProfile {
  double A_upper = 1, A_lower = 1;          // clamped below by 1
  double raw_upper = 0, raw_lower = 0;      // max mass/r^d and max r^d/mass
  Point upper_witness{0, 0, 0}, lower_witness{0, 0, 0};
  double upper_witness_r = 0, lower_witness_r = 0;
  bool zero_mass = false;  // some ball had no mass; A_lower is then infinite
  std::size_t balls = 0;
};

/// Closed-ball masses of a weighted surface sample against r^d.
RegularityProfile regularity_profile(const PointCloud& surface, const std::vector<double>& weights,
                                     const std::vector<double>& radii, const std::vector<Point>& centers, int d);

struct TraceReport {
  bool pass = false;
  bool covers_E = false;       // every E point within 2h of the sawtooth boundary
  bool trace_in_E = false;     // sawtooth boundary near the base boundary lies within 2h of E
  double worst_E_gap = 0;      // max over E of the distance to the boundary sample
  double worst_trace_gap = 0;  // max over the near-boundary sample of the distance to E
  std::size_t near_boundary = 0;
  std::size_t box_cut = 0;  // outer: near-boundary samples skipped next to the forest box cut
  Point witness{0, 0, 0};
  std::string detail;
};

TraceReport check_trace(const SawtoothDomain& saw, const PointCloud& E, double h);

}  // namespace gmt
