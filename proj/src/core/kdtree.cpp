#include "gmt/kdtree.hpp"

#include <algorithm>

namespace gmt {

namespace {
constexpr std::uint32_t kLeafSize = 12;

Box bounds_of(const std::vector<Point>& pts, const std::vector<std::uint32_t>& order, std::uint32_t b,
              std::uint32_t e) {
  Box box;
  box.lo = {kInf, kInf, kInf};
  box.hi = {-kInf, -kInf, -kInf};
  for (std::uint32_t i = b; i < e; ++i) {
    const Point& p = pts[order[i]];
    for (int k = 0; k < kMaxDim; ++k) {
      box.lo[k] = std::min(box.lo[k], p[k]);
      box.hi[k] = std::max(box.hi[k], p[k]);
    }
  }
  return box;
}

bool boxes_overlap(const Box& a, const Box& b) {
  for (int k = 0; k < kMaxDim; ++k)
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
  return true;
}
}  // namespace

KdTree::KdTree(std::vector<Point> points, int dim) : points_(std::move(points)), dim_(dim) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()), 0);
  }
}

int KdTree::build(std::uint32_t begin, std::uint32_t end, int depth) {
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, bounds_of(points_, order_, begin, end)});
  if (end - begin <= kLeafSize) return id;
  const Box& bb = nodes_[id].bounds;
  int axis = 0;
  double extent = -1;
  for (int k = 0; k < dim_; ++k) {
    if (bb.hi[k] - bb.lo[k] > extent) {
      extent = bb.hi[k] - bb.lo[k];
      axis = k;
    }
  }
  (void)depth;
  std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (points_[a][axis] != points_[b][axis]) return points_[a][axis] < points_[b][axis];
                     return a < b;
                   });
  int l = build(begin, mid, depth + 1);
  int r = build(mid, end, depth + 1);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

KdTree::Hit KdTree::nearest(const Point& q) const {
  Hit best;
  if (nodes_.empty()) return best;
  nearest_rec(0, q, best);
  best.distance = std::sqrt(best.distance);
  return best;
}

void KdTree::nearest_rec(int node, const Point& q, Hit& best) const {
  const Node& n = nodes_[node];
  double lb = dist_to_box(q, n.bounds);
  if (lb * lb > best.distance) return;
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      std::uint32_t idx = order_[i];
      double d2 = dist2(points_[idx], q);
      if (d2 < best.distance || (d2 == best.distance && idx < best.index)) {
        best.distance = d2;
        best.index = idx;
      }
    }
    return;
  }
  double dl = dist_to_box(q, nodes_[n.left].bounds);
  double dr = dist_to_box(q, nodes_[n.right].bounds);
  if (dl <= dr) {
    nearest_rec(n.left, q, best);
    nearest_rec(n.right, q, best);
  } else {
    nearest_rec(n.right, q, best);
    nearest_rec(n.left, q, best);
  }
}

std::vector<std::size_t> KdTree::within(const Point& q, double r, bool closed) const {
  std::vector<std::size_t> out;
  if (nodes_.empty() || !(r >= 0)) return out;
  within_rec(0, q, r * r, closed, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree::within_rec(int node, const Point& q, double r2, bool closed, std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  double lb = dist_to_box(q, n.bounds);
  if (lb * lb > r2) return;
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      double d2 = dist2(points_[order_[i]], q);
      if (d2 < r2 || (closed && d2 == r2)) out.push_back(order_[i]);
    }
    return;
  }
  within_rec(n.left, q, r2, closed, out);
  within_rec(n.right, q, r2, closed, out);
}

bool KdTree::any_in_box(const Box& b) const {
  if (nodes_.empty()) return false;
  return any_in_box_rec(0, b);
}

bool KdTree::any_in_box_rec(int node, const Box& b) const {
  const Node& n = nodes_[node];
  if (!boxes_overlap(n.bounds, b)) return false;
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i)
      if (b.contains(points_[order_[i]])) return true;
    return false;
  }
  return any_in_box_rec(n.left, b) || any_in_box_rec(n.right, b);
}

std::vector<std::size_t> KdTree::in_box(const Box& b) const {
  std::vector<std::size_t> out;
  if (!nodes_.empty()) in_box_rec(0, b, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree::in_box_rec(int node, const Box& b, std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (!boxes_overlap(n.bounds, b)) return;
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i)
      if (b.contains(points_[order_[i]])) out.push_back(order_[i]);
    return;
  }
  in_box_rec(n.left, b, out);
  in_box_rec(n.right, b, out);
}

}  // namespace gmt
