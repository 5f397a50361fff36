#include "gmt/box_index.hpp"

#include <algorithm>

namespace gmt {

namespace {

constexpr std::uint32_t kLeaf = 4;

Box hull(const Box& a, const Box& b) {
  Box h;
  for (int k = 0; k < kMaxDim; ++k) {
    h.lo[k] = std::min(a.lo[k], b.lo[k]);
    h.hi[k] = std::max(a.hi[k], b.hi[k]);
  }
  return h;
}

bool boxes_meet(const Box& a, const Box& b) {
  for (int k = 0; k < kMaxDim; ++k)
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
  return true;
}

}  // namespace

BoxIndex::BoxIndex(std::vector<Box> boxes, int dim) : boxes_(std::move(boxes)), dim_(dim) {
  check_dim(dim);
  order_.resize(boxes_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!boxes_.empty()) build(0, static_cast<std::uint32_t>(order_.size()));
}

int BoxIndex::build(std::uint32_t begin, std::uint32_t end) {
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Box b = boxes_[order_[begin]];
  for (auto i = begin + 1; i < end; ++i) b = hull(b, boxes_[order_[i]]);
  nodes_[id].bounds = b;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeaf) return id;
  int axis = 0;
  for (int k = 1; k < dim_; ++k)
    if (b.hi[k] - b.lo[k] > b.hi[axis] - b.lo[axis]) axis = k;
  auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t x, std::uint32_t y) {
                     double cx = boxes_[x].lo[axis] + boxes_[x].hi[axis], cy = boxes_[y].lo[axis] + boxes_[y].hi[axis];
                     return cx < cy || (cx == cy && x < y);
                   });
  int l = build(begin, mid);
  int r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void BoxIndex::depth_rec(int node, const Point& p, double& best) const {
  const Node& n = nodes_[node];
  if (-box_sdist(p, n.bounds, dim_) <= best) return;
  if (n.left < 0) {
    for (auto i = n.begin; i < n.end; ++i) best = std::max(best, -box_sdist(p, boxes_[order_[i]], dim_));
    return;
  }
  depth_rec(n.left, p, best);
  depth_rec(n.right, p, best);
}

double BoxIndex::max_depth(const Point& p) const {
  double best = 0;
  if (!nodes_.empty()) depth_rec(0, p, best);
  return best;
}

void BoxIndex::dist_rec(int node, const Point& p, double& best) const {
  const Node& n = nodes_[node];
  if (dist_to_box(p, n.bounds) >= best) return;
  if (n.left < 0) {
    for (auto i = n.begin; i < n.end; ++i) best = std::min(best, dist_to_box(p, boxes_[order_[i]]));
    return;
  }
  double dl = dist_to_box(p, nodes_[n.left].bounds), dr = dist_to_box(p, nodes_[n.right].bounds);
  if (dl <= dr) {
    dist_rec(n.left, p, best);
    dist_rec(n.right, p, best);
  } else {
    dist_rec(n.right, p, best);
    dist_rec(n.left, p, best);
  }
}

double BoxIndex::min_dist(const Point& p) const {
  double best = kInf;
  if (!nodes_.empty()) dist_rec(0, p, best);
  return best;
}

void BoxIndex::intersect_rec(int node, const Box& q, std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (!boxes_meet(n.bounds, q)) return;
  if (n.left < 0) {
    for (auto i = n.begin; i < n.end; ++i)
      if (boxes_meet(boxes_[order_[i]], q)) out.push_back(order_[i]);
    return;
  }
  intersect_rec(n.left, q, out);
  intersect_rec(n.right, q, out);
}

std::vector<std::size_t> BoxIndex::intersecting(const Box& q) const {
  std::vector<std::size_t> out;
  if (!nodes_.empty()) intersect_rec(0, q, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Box> exposed_faces(const BoxIndex& boxes, int dim) {
  check_dim(dim);
  std::vector<Box> out;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const Box& B = boxes.box(b);
    for (int k = 0; k < dim; ++k)
      for (double c : {B.lo[k], B.hi[k]}) {
        Box face = B;
        face.lo[k] = face.hi[k] = c;
        // Open boxes crossing the face plane, and the face grid they induce.
        std::vector<const Box*> cover;
        for (std::size_t j : boxes.intersecting(face)) {
          const Box& J = boxes.box(j);
          if (j != b && J.lo[k] < c && c < J.hi[k]) cover.push_back(&J);
        }
        std::vector<int> axes;
        for (int a = 0; a < dim; ++a)
          if (a != k) axes.push_back(a);
        std::vector<std::vector<double>> xs(axes.size());
        for (std::size_t t = 0; t < axes.size(); ++t) {
          int a = axes[t];
          xs[t] = {face.lo[a], face.hi[a]};
          for (const Box* J : cover)
            for (double v : {J->lo[a], J->hi[a]})
              if (v > face.lo[a] && v < face.hi[a]) xs[t].push_back(v);
          std::sort(xs[t].begin(), xs[t].end());
          xs[t].erase(std::unique(xs[t].begin(), xs[t].end()), xs[t].end());
        }
        // Grid elements: per axis, even e = vertex e/2, odd e = open interval.
        auto covered = [&](const std::array<std::size_t, 2>& e) {
          Point p = face.lo;
          for (std::size_t t = 0; t < axes.size(); ++t) {
            const auto& x = xs[t];
            p[axes[t]] = e[t] % 2 ? 0.5 * (x[e[t] / 2] + x[e[t] / 2 + 1]) : x[e[t] / 2];
          }
          for (const Box* J : cover) {
            bool in = true;
            for (int a : axes) in = in && J->lo[a] < p[a] && p[a] < J->hi[a];
            if (in) return true;
          }
          return false;
        };
        std::array<std::size_t, 2> n{1, 1};
        for (std::size_t t = 0; t < axes.size(); ++t) n[t] = 2 * xs[t].size() - 1;
        std::vector<char> open_state(n[0] * n[1]);
        for (std::size_t i = 0; i < n[0]; ++i)
          for (std::size_t j = 0; j < n[1]; ++j) open_state[i * n[1] + j] = !covered({i, j});
        for (std::size_t i = 0; i < n[0]; ++i)
          for (std::size_t j = 0; j < n[1]; ++j) {
            if (!open_state[i * n[1] + j]) continue;
            // Skip elements lying in the closure of an exposed neighbour of higher dimension.
            bool redundant = false;
            std::array<std::size_t, 2> e{i, j};
            for (std::size_t t = 0; t < axes.size() && !redundant; ++t) {
              if (e[t] % 2) continue;
              for (int s : {-1, 1}) {
                auto f = e;
                if ((s < 0 && f[t] == 0) || (s > 0 && f[t] + 1 >= n[t])) continue;
                f[t] += s;
                if (open_state[f[0] * n[1] + f[1]]) redundant = true;
              }
            }
            if (redundant) continue;
            Box piece = face;
            for (std::size_t t = 0; t < axes.size(); ++t) {
              const auto& x = xs[t];
              piece.lo[axes[t]] = x[e[t] / 2];
              piece.hi[axes[t]] = e[t] % 2 ? x[e[t] / 2 + 1] : x[e[t] / 2];
            }
            out.push_back(piece);
          }
      }
  }
  return out;
}

}  // namespace gmt
