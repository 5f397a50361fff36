#include "gmt/domain.hpp"

#include <algorithm>

namespace gmt {

namespace {

// Subdivision depth for oracle-only box tests; beyond it the answer is the
// conservative one (box treated as touching).
int max_subdivision(int dim) { return dim == 2 ? 9 : 6; }

bool hits_complement_rec(const ImplicitDomain& d, const Box& b, int depth) {
  double s = d.sdist(b.center());
  if (s >= 0) return true;
  if (-s > b.half_diagonal()) return false;
  if (depth == 0) return true;
  Point c = b.center();
  for (int mask = 0; mask < (1 << d.dim); ++mask) {
    Box child = b;
    for (int k = 0; k < d.dim; ++k) {
      if (mask & (1 << k))
        child.lo[k] = c[k];
      else
        child.hi[k] = c[k];
    }
    if (hits_complement_rec(d, child, depth - 1)) return true;
  }
  return false;
}

bool hits_closure_rec(const ImplicitDomain& d, const Box& b, int depth) {
  double s = d.sdist(b.center());
  if (s <= 0) return true;
  if (s > b.half_diagonal()) return false;
  if (depth == 0) return true;
  Point c = b.center();
  for (int mask = 0; mask < (1 << d.dim); ++mask) {
    Box child = b;
    for (int k = 0; k < d.dim; ++k) {
      if (mask & (1 << k))
        child.lo[k] = c[k];
      else
        child.hi[k] = c[k];
    }
    if (hits_closure_rec(d, child, depth - 1)) return true;
  }
  return false;
}

}  // namespace

double signed_distance(const ImplicitDomain& domain, const Point& x) {
  if (!is_finite(x)) throw InputError("signed_distance: non-finite point");
  return domain.sdist(x);
}

bool box_hits_complement(const ImplicitDomain& domain, const Box& box) {
  if (domain.hits_complement) return domain.hits_complement(box);
  return hits_complement_rec(domain, box, max_subdivision(domain.dim));
}

bool box_hits_closure(const ImplicitDomain& domain, const Box& box) {
  if (domain.hits_closure) return domain.hits_closure(box);
  return hits_closure_rec(domain, box, max_subdivision(domain.dim));
}

Point sdist_gradient(const ImplicitDomain& domain, const Point& x, double step) {
  Point g{0, 0, 0};
  for (int k = 0; k < domain.dim; ++k) {
    Point a = x, b = x;
    a[k] += step;
    b[k] -= step;
    g[k] = (domain.sdist(a) - domain.sdist(b)) / (2 * step);
  }
  return g;
}

Point project_to_boundary(const ImplicitDomain& domain, const Point& x) {
  if (domain.project) return domain.project(x);
  Point y = x;
  for (int it = 0; it < 8; ++it) {
    double s = domain.sdist(y);
    if (std::abs(s) <= domain.tol) break;
    Point g = sdist_gradient(domain, y, 1e-7 * std::max(1.0, std::abs(s)));
    double gn = norm(g);
    if (!(gn > 0)) break;
    y = y - (s / gn) * ((1.0 / gn) * g);
  }
  return y;
}

}  // namespace gmt
