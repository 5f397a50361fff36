#pragma once

#include <functional>
#include <string>

#include "gmt/geometry.hpp"

namespace gmt {

using SdistFn = std::function<double(const Point&)>;
using BoxPredicate = std::function<bool(const Box&)>;
using ProjectFn = std::function<Point(const Point&)>;

/// An open set Omega described by a signed-distance oracle.
///
/// sdist is negative inside, positive outside and zero on the boundary; its
/// absolute value never exceeds the true distance to the boundary. The optional
/// predicates make Whitney decompositions exact; when absent, callers fall back
/// to oracle subdivision (see box_hits_complement).
struct ImplicitDomain {
  std::string name;
  int dim = 2;
  SdistFn sdist;
  Box bbox;                     // region of interest containing the relevant part of the boundary
  double diam_boundary = kInf;  // kInf flags an unbounded boundary
  double tol = 1e-9;            // oracle tolerance
  double nta_constant = std::numeric_limits<double>::quiet_NaN();

  BoxPredicate hits_complement;  // closed box meets the complement of Omega
  BoxPredicate hits_closure;     // closed box meets the closure of Omega
  ProjectFn project;             // nearest boundary point

  bool unbounded() const { return !std::isfinite(diam_boundary); }
};

/// Signed distance with input validation.
double signed_distance(const ImplicitDomain& domain, const Point& x);

inline bool inside(const ImplicitDomain& domain, const Point& x) { return domain.sdist(x) < 0; }

bool box_hits_complement(const ImplicitDomain& domain, const Box& box);
bool box_hits_closure(const ImplicitDomain& domain, const Box& box);

/// Closed box meets the boundary (a closed box is connected, so meeting both the
/// complement and the closure is equivalent).
inline bool box_meets_boundary(const ImplicitDomain& domain, const Box& box) {
  return box_hits_complement(domain, box) && box_hits_closure(domain, box);
}

/// Nearest boundary point, via the domain's projector or Newton steps on sdist.
Point project_to_boundary(const ImplicitDomain& domain, const Point& x);

/// Central-difference gradient of sdist.
Point sdist_gradient(const ImplicitDomain& domain, const Point& x, double step = 1e-7);

}  // namespace gmt
