#pragma once

#include <cstdint>
#include <vector>

#include "gmt/geometry.hpp"

namespace gmt {

/// Static bounding-volume hierarchy over axis-aligned boxes.
class BoxIndex {
 public:
  BoxIndex() = default;
  BoxIndex(std::vector<Box> boxes, int dim);

  std::size_t size() const { return boxes_.size(); }
  const Box& box(std::size_t i) const { return boxes_[i]; }
  const Box& bounds() const { return nodes_.empty() ? empty_ : nodes_[0].bounds; }

  /// Largest depth of p inside an open box (distance to that box's faces); 0 if none.
  double max_depth(const Point& p) const;

  /// Distance from p to the union of the closed boxes (+inf when empty).
  double min_dist(const Point& p) const;

  /// True if p lies in the open interior of some box.
  bool open_contains(const Point& p) const { return max_depth(p) > 0; }

  /// Indices of boxes whose closure meets the closed query box, sorted.
  std::vector<std::size_t> intersecting(const Box& q) const;

 private:
  struct Node {
    Box bounds;
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };
  int build(std::uint32_t begin, std::uint32_t end);
  void depth_rec(int node, const Point& p, double& best) const;
  void dist_rec(int node, const Point& p, double& best) const;
  void intersect_rec(int node, const Box& q, std::vector<std::size_t>& out) const;

  std::vector<Box> boxes_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  int dim_ = 2;
  Box empty_;
};

/// Boundary of the union of the open boxes, as closed (possibly degenerate)
/// pieces of box faces that no open box covers.
std::vector<Box> exposed_faces(const BoxIndex& boxes, int dim);

}  // namespace gmt
