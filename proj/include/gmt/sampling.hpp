#pragma once

#include <string>
#include <vector>

#include "gmt/cloud.hpp"
#include "gmt/domain.hpp"

namespace gmt {

struct BoundarySample {
  PointCloud cloud;
  bool empty_warning = false;
};

/// Boundary points of the domain inside its bbox at resolution h: every sample
/// lies within the oracle tolerance of the boundary and every boundary point in
/// the bbox is within 2h of a sample.
BoundarySample sample_boundary(const ImplicitDomain& domain, double h);

struct HausdorffEstimate {
  double value = 0;
  bool empty = false;
};

/// Grid-cover surrogate for the d-dimensional Hausdorff measure of a densely
/// sampled set F in R^dim: the number of h-cells meeting F times h^d, averaged
/// over a fixed family of rotated and shifted grids and divided by the mean
/// cell-count inflation of a flat d-set. Never below h^d for nonempty F.
HausdorffEstimate hausdorff_estimate(const std::vector<Point>& F, int dim, int d, double h);

/// Per-point share of the same estimate (before the h^d floor).
std::vector<double> hausdorff_weights(const std::vector<Point>& F, int dim, int d, double h);

/// Mean count of h-cells met by a unit flat d-set, in units of h^-d, for a
/// uniformly oriented grid.
double cover_inflation(int dim, int d);

}  // namespace gmt
