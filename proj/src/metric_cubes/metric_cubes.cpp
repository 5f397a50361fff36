#include "gmt/metric_cubes.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

namespace gmt {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Hash grid used to grow a greedy r-separated net.
class NetGrid {
 public:
  NetGrid(const std::vector<Point>& pts, int dim, double r) : pts_(pts), dim_(dim), r_(r) {}

  void insert(std::size_t i) { cells_[key(cell(pts_[i]))].push_back(i); }

  bool has_within(const Point& p) const {
    auto c = cell(p);
    std::array<std::int64_t, 3> o{0, 0, 0};
    int span = dim_ == 3 ? 27 : 9;
    for (int s = 0; s < span; ++s) {
      int t = s;
      for (int k = 0; k < dim_; ++k) {
        o[k] = c[k] + (t % 3) - 1;
        t /= 3;
      }
      auto it = cells_.find(key(o));
      if (it == cells_.end()) continue;
      for (std::size_t j : it->second)
        if (dist(p, pts_[j]) < r_) return true;
    }
    return false;
  }

 private:
  std::array<std::int64_t, 3> cell(const Point& p) const {
    std::array<std::int64_t, 3> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k) c[k] = static_cast<std::int64_t>(std::floor(p[k] / r_));
    return c;
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto v : c) h = (h ^ static_cast<std::uint64_t>(v)) * 0x100000001b3ULL;
    return h;
  }

  const std::vector<Point>& pts_;
  int dim_;
  double r_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

// Nearest point among `subset` (sorted cloud indices); ties go to the lowest index.
struct SubsetIndex {
  std::vector<std::size_t> ids;
  KdTree kd;
  SubsetIndex(const std::vector<Point>& pts, const std::vector<std::size_t>& subset, int dim) : ids(subset) {
    std::vector<Point> sub;
    sub.reserve(subset.size());
    for (auto i : subset) sub.push_back(pts[i]);
    kd = KdTree(std::move(sub), dim);
  }
  std::size_t nearest(const Point& p) const { return ids[kd.nearest(p).index]; }
};

}  // namespace

bool CubeTree::contains(std::size_t b, std::size_t a) const { return is_subset(cubes_[a].members, cubes_[b].members); }

double CubeTree::dist_to_complement(std::size_t cube, std::size_t i) const {
  const auto& mem = cubes_[cube].members;
  if (mem.size() >= sigma_.size()) return kInf;
  const Point& p = sigma_.points[i];
  double r = ell_of(cube) / 8;
  for (;;) {
    double best = kInf;
    for (std::size_t j : kd_.within(p, r, true))
      if (!std::binary_search(mem.begin(), mem.end(), j)) best = std::min(best, dist(p, sigma_.points[j]));
    if (best <= r) return best;
    r *= 2;
  }
}

std::vector<double> CubeTree::centre_clearance() const {
  std::vector<double> out(cubes_.size());
  for (std::size_t c = 0; c < cubes_.size(); ++c) out[c] = dist_to_complement(c, cubes_[c].center) / ell_of(c);
  return out;
}

void CubeTree::index_levels() {
  int top = 0;
  for (const auto& c : cubes_) top = std::max(top, c.level);
  levels_.assign(cubes_.empty() ? 0 : top + 1, {});
  for (auto& c : cubes_) c.children.clear();
  for (std::size_t id = 0; id < cubes_.size(); ++id) {
    levels_[cubes_[id].level].push_back(id);
    if (cubes_[id].parent) cubes_[*cubes_[id].parent].children.push_back(id);
  }
  cube_of_.assign(levels_.size(), std::vector<std::size_t>(sigma_.size(), kNone));
  for (std::size_t id = 0; id < cubes_.size(); ++id)
    for (std::size_t i : cubes_[id].members)
      if (i < sigma_.size()) cube_of_[cubes_[id].level][i] = id;
  kd_ = KdTree(sigma_.points, sigma_.dim);
  c1_achieved_ = kInf;
  for (double v : centre_clearance()) c1_achieved_ = std::min(c1_achieved_, v);
}

CubeTree build_cube_tree(const PointCloud& sigma, double c0, int depth) {
  check_dim(sigma.dim);
  if (sigma.empty()) throw InputError("cube tree needs a non-empty point set");
  if (!(c0 > 0 && c0 <= 0.25)) throw InputError("c0 must lie in (0, 1/4]");
  if (depth < 1) throw InputError("depth must be at least 1");
  const auto& pts = sigma.points;
  const std::size_t n = pts.size();
  const int dim = sigma.dim;

  // Root centre: the point minimising the covering radius of sigma.
  std::size_t zeta = 0;
  double r1 = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0;
    for (std::size_t j = 0; j < n && m < r1; ++j) m = std::max(m, dist(pts[i], pts[j]));
    if (m < r1) r1 = m, zeta = i;
  }

  CubeTree t;
  t.sigma_ = sigma;
  t.c0_ = c0;
  t.ell0_ = r1 > 0 ? 2 * r1 : 1;

  // nets[k] sorted; up[k][z] is the coarser centre of z.
  std::vector<std::vector<std::size_t>> nets{{zeta}};
  std::vector<std::unordered_map<std::size_t, std::size_t>> up(1);
  while (static_cast<int>(nets.size()) <= depth && nets.back().size() < n) {
    int lvl = static_cast<int>(nets.size());
    double r = t.ell(lvl) / 2;
    const auto& prev = nets.back();
    NetGrid grid(pts, dim, r);
    std::vector<char> in(n, 0);
    for (auto z : prev) grid.insert(z), in[z] = 1;
    std::vector<std::size_t> net = prev;
    for (std::size_t i = 0; i < n; ++i) {
      if (in[i] || grid.has_within(pts[i])) continue;
      grid.insert(i);
      in[i] = 1;
      net.push_back(i);
    }
    std::sort(net.begin(), net.end());
    SubsetIndex coarse(pts, prev, dim);
    std::unordered_map<std::size_t, std::size_t> parent;
    for (auto z : net) parent[z] = std::binary_search(prev.begin(), prev.end(), z) ? z : coarse.nearest(pts[z]);
    nets.push_back(std::move(net));
    up.push_back(std::move(parent));
  }
  const int L = static_cast<int>(nets.size()) - 1;
  t.truncated_ = L < depth;

  // Assign every point a centre at the finest level, then walk up.
  std::vector<std::vector<std::size_t>> centre(L + 1, std::vector<std::size_t>(n));
  {
    SubsetIndex fine(pts, nets[L], dim);
    for (std::size_t i = 0; i < n; ++i)
      centre[L][i] = std::binary_search(nets[L].begin(), nets[L].end(), i) ? i : fine.nearest(pts[i]);
    for (int k = L; k > 0; --k)
      for (std::size_t i = 0; i < n; ++i) centre[k - 1][i] = up[k].at(centre[k][i]);
  }

  std::vector<std::unordered_map<std::size_t, std::size_t>> id_of(L + 1);
  for (int k = 0; k <= L; ++k)
    for (auto z : nets[k]) {
      id_of[k][z] = t.cubes_.size();
      MetricCube c;
      c.level = k;
      c.center = z;
      if (k > 0) c.parent = id_of[k - 1].at(up[k].at(z));
      t.cubes_.push_back(std::move(c));
    }
  for (int k = 0; k <= L; ++k)
    for (std::size_t i = 0; i < n; ++i) t.cubes_[id_of[k].at(centre[k][i])].members.push_back(i);
  t.index_levels();
  return t;
}

CubeTree tree_from_parts(const PointCloud& sigma, double c0, double ell0, std::vector<MetricCube> cubes) {
  check_dim(sigma.dim);
  if (cubes.empty()) throw InputError("cube tree needs at least a root");
  for (std::size_t id = 0; id < cubes.size(); ++id) {
    const auto& c = cubes[id];
    if (c.level < 0 || (id > 0 && c.level < cubes[id - 1].level)) throw InputError("cubes must be level-major");
    if (c.parent && *c.parent >= id) throw InputError("parent must precede child");
    if (c.center >= sigma.size()) throw InputError("cube centre out of range");
    if (!std::is_sorted(c.members.begin(), c.members.end())) throw InputError("cube members must be sorted");
  }
  CubeTree t;
  t.sigma_ = sigma;
  t.c0_ = c0;
  t.ell0_ = ell0;
  t.cubes_ = std::move(cubes);
  t.index_levels();
  return t;
}

InnerCube inner_cube(const CubeTree& tree, std::size_t cube, double t) {
  if (!(t > 0 && t < 1)) throw InputError("inner cube parameter t must lie in (0, 1)");
  InnerCube out{cube, t, {}};
  double cut = t * tree.ell_of(cube);
  for (std::size_t i : tree.cube(cube).members)
    if (tree.dist_to_complement(cube, i) > cut) out.members.push_back(i);
  return out;
}

CubeAxiomReport verify_cube_axioms(const CubeTree& tree) {
  CubeAxiomReport rep;
  const auto& cubes = tree.cubes();
  const std::size_t n = tree.sigma().size();
  auto fail = [](AxiomCheck& a, std::optional<std::size_t> pt, std::size_t cube, std::string why) {
    if (!a.pass) return;
    a.pass = false;
    a.witness_point = pt;
    a.witness_cube = cube;
    a.detail = std::move(why);
  };

  for (int k = 0; k <= tree.depth(); ++k) {
    std::vector<int> count(n, 0);
    std::vector<std::size_t> where(n, 0);
    for (std::size_t id : tree.level(k))
      for (std::size_t i : cubes[id].members) {
        if (i >= n) {
          fail(rep.partition, i, id, "member index out of range");
          continue;
        }
        ++count[i];
        where[i] = id;
      }
    for (std::size_t i = 0; i < n; ++i)
      if (count[i] != 1)
        fail(rep.partition, i, where[i],
             "level " + std::to_string(k) + ": point in " + std::to_string(count[i]) + " cubes");
  }

  for (std::size_t id = 0; id < cubes.size(); ++id) {
    const auto& c = cubes[id];
    if (!c.parent) {
      if (c.level != 0) fail(rep.nesting, std::nullopt, id, "non-root cube without parent");
      continue;
    }
    const auto& p = cubes[*c.parent];
    if (p.level != c.level - 1) fail(rep.nesting, std::nullopt, id, "parent is not one level up");
    for (std::size_t i : c.members)
      if (!std::binary_search(p.members.begin(), p.members.end(), i)) {
        fail(rep.nesting, i, id, "member missing from parent cube");
        break;
      }
  }
  if (tree.level(0).size() != 1) fail(rep.nesting, std::nullopt, 0, "top level is not a single cube");

  double c1 = kInf;
  for (std::size_t id = 0; id < cubes.size(); ++id) {
    const auto& c = cubes[id];
    double ell = tree.ell(c.level);
    if (!std::binary_search(c.members.begin(), c.members.end(), c.center)) {
      fail(rep.sandwich, c.center, id, "centre outside its cube");
      c1 = 0;
      continue;
    }
    const Point& z = tree.sigma().points[c.center];
    for (std::size_t i : c.members)
      if (i < n && !(dist(tree.sigma().points[i], z) < ell)) {
        fail(rep.sandwich, i, id, "member outside B(zeta, ell)");
        break;
      }
    c1 = std::min(c1, tree.dist_to_complement(id, c.center) / ell);
  }
  if (!(c1 > 0)) fail(rep.sandwich, std::nullopt, 0, "no inner ball");
  rep.c1_achieved = c1;

  if (!(tree.c0() > 0 && tree.c0() <= 0.25)) fail(rep.lengths, std::nullopt, 0, "c0 outside (0, 1/4]");
  if (!(tree.ell0() > 0)) fail(rep.lengths, std::nullopt, 0, "non-positive top length");
  return rep;
}

std::vector<double> cube_masses(const CubeTree& tree, const DiscreteMeasure& mu) {
  if (mu.size() != tree.sigma().size()) throw InputError("measure size does not match the point set");
  std::vector<double> out(tree.cubes().size());
  for (std::size_t id = 0; id < out.size(); ++id) out[id] = mu.mass(tree.cube(id).members);
  return out;
}

}  // namespace gmt
