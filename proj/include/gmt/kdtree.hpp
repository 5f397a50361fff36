#pragma once

#include <cstdint>
#include <vector>

#include "gmt/geometry.hpp"

namespace gmt {

/// Static k-d tree over a point array. Queries are const and thread-safe.
class KdTree {
 public:
  KdTree() = default;
  KdTree(std::vector<Point> points, int dim);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& point(std::size_t i) const { return points_[i]; }

  struct Hit {
    std::size_t index = 0;
    double distance = kInf;
  };

  /// Nearest neighbour; distance is +inf for an empty tree. Ties resolve to the
  /// lowest original index.
  Hit nearest(const Point& q) const;

  /// Indices with |p - q| < r (strict) or <= r when closed is set, sorted ascending.
  std::vector<std::size_t> within(const Point& q, double r, bool closed = false) const;

  /// True if some point lies in the closed box.
  bool any_in_box(const Box& b) const;

  /// Indices of points inside the closed box, sorted ascending.
  std::vector<std::size_t> in_box(const Box& b) const;

 private:
  struct Node {
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
    Box bounds;
  };

  int build(std::uint32_t begin, std::uint32_t end, int depth);
  void nearest_rec(int node, const Point& q, Hit& best) const;
  void within_rec(int node, const Point& q, double r2, bool closed, std::vector<std::size_t>& out) const;
  bool any_in_box_rec(int node, const Box& b) const;
  void in_box_rec(int node, const Box& b, std::vector<std::size_t>& out) const;

  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  int dim_ = 2;
};

}  // namespace gmt
