#pragma once

#include <map>
#include <string>
#include <vector>

#include "gmt/domain.hpp"

namespace gmt {

/// Named numeric parameters of a gallery entry.
using Params = std::map<std::string, double>;

double param(const Params& p, const std::string& key, double fallback);

/// Builds a named test domain.
///
/// Entries and parameters (defaults in parentheses):
///   ball                  dim (2), radius (1), cx, cy, cz (0)
///   disk                  alias of ball in the plane
///   half_space            dim (2), extent (4); Omega = {x_last > 0}
///   slab                  eps (2^-10), extent (4); Omega = {0 < y < eps}
///   lipschitz_graph       slope (0.5), period (1), extent (4); region above a triangle wave
///   perforated_half_space m (3), extent (2); upper half-space minus the balls
///                         B(i 2^-n e1 + j 2^-n e2 + 2^-n e3, 2^(-n-10)), 0 <= n <= m
///   cube_complement       dim (2), half_side (1)
///   annulus               dim (2), r_in (0.5), r_out (1)
///   punctured_plane       dim (2), extent (4); R^D minus the origin
///   rooms_and_corridor    w (2^-8), t (1/8); two rooms of (-1,1)^2 joined by a gap of width w
ImplicitDomain gallery_domain(const std::string& name, const Params& params = {});

std::vector<std::string> gallery_names();

}  // namespace gmt
