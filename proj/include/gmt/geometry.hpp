#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace gmt {

/// Ambient dimensions up to three are supported. A point of R^2 is stored with
/// its third coordinate equal to zero, so Euclidean norms need no dimension tag.
inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Point& a) { return dot(a, a); }
inline double norm(const Point& a) { return std::sqrt(norm2(a)); }
inline double dist(const Point& a, const Point& b) { return norm(a - b); }
inline double dist2(const Point& a, const Point& b) { return norm2(a - b); }

inline bool is_finite(const Point& p) {
  return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
}

/// Raised for precondition violations on caller-supplied arguments.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void check_dim(int dim) {
  if (dim < 2 || dim > kMaxDim)
    throw InputError("ambient dimension must be 2 or 3, got " + std::to_string(dim));
}

/// Axis-aligned closed box [lo, hi]. Unused coordinates are [0, 0].
struct Box {
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};

  Point center() const { return 0.5 * (lo + hi); }
  double half_diagonal() const { return 0.5 * dist(lo, hi); }
  bool contains(const Point& p) const {
    for (int k = 0; k < kMaxDim; ++k)
      if (p[k] < lo[k] || p[k] > hi[k]) return false;
    return true;
  }
  bool is_finite() const { return gmt::is_finite(lo) && gmt::is_finite(hi); }
};

inline Box make_box(int dim, double lo, double hi) {
  Box b;
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = lo;
    b.hi[k] = hi;
  }
  return b;
}

/// Euclidean distance from p to the closed box (0 inside).
inline double dist_to_box(const Point& p, const Box& b) {
  double s = 0;
  for (int k = 0; k < kMaxDim; ++k) {
    double d = std::max({b.lo[k] - p[k], 0.0, p[k] - b.hi[k]});
    s += d * d;
  }
  return std::sqrt(s);
}

/// Largest distance from p to a point of the box.
inline double farthest_in_box(const Point& p, const Box& b) {
  double s = 0;
  for (int k = 0; k < kMaxDim; ++k) {
    double d = std::max(std::abs(p[k] - b.lo[k]), std::abs(p[k] - b.hi[k]));
    s += d * d;
  }
  return std::sqrt(s);
}

/// Signed distance to the boundary of a box: negative inside, exact everywhere.
inline double box_sdist(const Point& p, const Box& b, int dim) {
  double outside = 0, inside = -kInf;
  for (int k = 0; k < dim; ++k) {
    double q = std::max(b.lo[k] - p[k], p[k] - b.hi[k]);
    inside = std::max(inside, q);
    if (q > 0) outside += q * q;
  }
  return inside > 0 ? std::sqrt(outside) : inside;
}

/// Euclidean distance between two closed boxes.
inline double box_box_dist(const Box& a, const Box& b) {
  double s = 0;
  for (int k = 0; k < kMaxDim; ++k) {
    double d = std::max({a.lo[k] - b.hi[k], 0.0, b.lo[k] - a.hi[k]});
    s += d * d;
  }
  return std::sqrt(s);
}

/// B(center, radius); open unless stated otherwise.
struct Ball {
  Point center{0, 0, 0};
  double radius = 1;

  Ball() = default;
  Ball(Point c, double r) : center(c), radius(r) {
    if (!(r > 0)) throw InputError("ball radius must be positive");
  }
  bool contains(const Point& p) const { return dist(p, center) < radius; }
};

}  // namespace gmt
