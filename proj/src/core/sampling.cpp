#include "gmt/sampling.hpp"

#include <algorithm>
#include <map>
#include <numbers>
#include <unordered_map>

#include "gmt/rng.hpp"

namespace gmt {

namespace {

using CellKey = std::array<std::int64_t, kMaxDim>;

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 0;
    for (auto v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

struct Sampler {
  const ImplicitDomain& domain;
  Point origin;
  double g;
  std::map<CellKey, Point> kept;  // ordered, so output order is canonical

  Box cell_range_box(const std::array<std::int64_t, kMaxDim>& lo, const std::array<std::int64_t, kMaxDim>& hi) const {
    Box b;
    for (int k = 0; k < domain.dim; ++k) {
      b.lo[k] = origin[k] + static_cast<double>(lo[k]) * g;
      b.hi[k] = origin[k] + static_cast<double>(hi[k]) * g;
    }
    return b;
  }

  void visit(std::array<std::int64_t, kMaxDim> lo, std::array<std::int64_t, kMaxDim> hi) {
    Box b = cell_range_box(lo, hi);
    double s = domain.sdist(b.center());
    if (std::abs(s) > b.half_diagonal() * (1 + 1e-12)) return;
    int axis = -1;
    std::int64_t widest = 1;
    for (int k = 0; k < domain.dim; ++k) {
      if (hi[k] - lo[k] > widest) {
        widest = hi[k] - lo[k];
        axis = k;
      }
    }
    if (axis < 0) {
      emit(b.center());
      return;
    }
    std::int64_t mid = lo[axis] + widest / 2;
    auto hi_left = hi, lo_right = lo;
    hi_left[axis] = mid;
    lo_right[axis] = mid;
    visit(lo, hi_left);
    visit(lo_right, hi);
  }

  void emit(const Point& c) {
    Point q = project_to_boundary(domain, c);
    if (!is_finite(q) || !domain.bbox.contains(q)) return;
    if (std::abs(domain.sdist(q)) > domain.tol) return;
    CellKey key{0, 0, 0};
    for (int k = 0; k < domain.dim; ++k) key[k] = static_cast<std::int64_t>(std::floor((q[k] - origin[k]) / g));
    kept.emplace(key, q);
  }
};

}  // namespace

BoundarySample sample_boundary(const ImplicitDomain& domain, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw InputError("sample_boundary: h must be positive");
  if (!domain.bbox.is_finite()) throw InputError("sample_boundary: bbox must be finite");
  Sampler s{domain, domain.bbox.lo, h / 2, {}};
  std::array<std::int64_t, kMaxDim> lo{0, 0, 0}, hi{1, 1, 1};
  for (int k = 0; k < domain.dim; ++k) {
    double cells = std::ceil((domain.bbox.hi[k] - domain.bbox.lo[k]) / s.g);
    if (cells > 1e7) throw InputError("sample_boundary: h too small for bbox");
    hi[k] = std::max<std::int64_t>(1, static_cast<std::int64_t>(cells));
  }
  s.visit(lo, hi);
  BoundarySample out;
  out.cloud.dim = domain.dim;
  out.cloud.mesh = h;
  out.cloud.source = CloudSource::boundary;
  out.cloud.points.reserve(s.kept.size());
  for (const auto& [key, p] : s.kept) out.cloud.points.push_back(p);
  out.empty_warning = out.cloud.empty();
  return out;
}

double cover_inflation(int dim, int d) {
  check_dim(dim);
  if (d < 0 || d > dim) throw InputError("cover_inflation: need 0 <= d <= dim");
  if (d == 0 || d == dim) return 1;
  if (dim == 2) return 4 / std::numbers::pi;  // mean of |cos| + |sin|
  return 1.5;                                  // mean l1-norm of a unit normal or tangent in R^3
}

namespace {

struct Frame {
  std::array<Point, kMaxDim> rows;
  Point shift;
};

std::vector<Frame> grid_frames(int dim) {
  std::vector<Frame> frames;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  if (dim == 2) {
    const int R = 16;
    for (int k = 0; k < R; ++k) {
      double a = (k + 0.5) * (std::numbers::pi / 2) / R;
      Frame f;
      f.rows = {Point{std::cos(a), -std::sin(a), 0}, Point{std::sin(a), std::cos(a), 0}, Point{0, 0, 1}};
      f.shift = {std::fmod(k * phi, 1.0), std::fmod(k * phi * phi, 1.0), 0};
      frames.push_back(f);
    }
    return frames;
  }
  Stream rng(0x5eed, 3);
  const int R = 64;
  for (int k = 0; k < R; ++k) {
    double q[4];
    double n = 0;
    for (double& v : q) {
      v = rng.normal();
      n += v * v;
    }
    n = std::sqrt(n);
    for (double& v : q) v /= n;
    double w = q[0], x = q[1], y = q[2], z = q[3];
    Frame f;
    f.rows = {Point{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
              Point{2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
              Point{2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};
    f.shift = {rng.uniform(), rng.uniform(), rng.uniform()};
    frames.push_back(f);
  }
  return frames;
}

const std::vector<Frame>& frames_for(int dim) {
  static const std::vector<Frame> f2 = grid_frames(2);
  static const std::vector<Frame> f3 = grid_frames(3);
  return dim == 2 ? f2 : f3;
}

CellKey cell_of(const Frame& f, const Point& p, int dim, double h) {
  CellKey key{0, 0, 0};
  for (int k = 0; k < dim; ++k)
    key[k] = static_cast<std::int64_t>(std::floor(dot(f.rows[k], p) / h + f.shift[k]));
  return key;
}

void check_args(int dim, int d, double h) {
  check_dim(dim);
  if (d < 0 || d > dim) throw InputError("hausdorff_estimate: need 0 <= d <= dim");
  if (!(h > 0) || !std::isfinite(h)) throw InputError("hausdorff_estimate: h must be positive");
}

}  // namespace

HausdorffEstimate hausdorff_estimate(const std::vector<Point>& F, int dim, int d, double h) {
  check_args(dim, d, h);
  HausdorffEstimate est;
  if (F.empty()) {
    est.empty = true;
    return est;
  }
  const auto& frames = frames_for(dim);
  std::size_t total = 0;
  std::unordered_map<CellKey, char, CellHash> cells;
  cells.reserve(F.size());
  for (const Frame& f : frames) {
    cells.clear();
    for (const Point& p : F) cells.emplace(cell_of(f, p, dim, h), 0);
    total += cells.size();
  }
  double hd = std::pow(h, d);
  double mean = static_cast<double>(total) / static_cast<double>(frames.size());
  est.value = std::max(hd, mean * hd / cover_inflation(dim, d));
  return est;
}

std::vector<double> hausdorff_weights(const std::vector<Point>& F, int dim, int d, double h) {
  check_args(dim, d, h);
  std::vector<double> w(F.size(), 0.0);
  if (F.empty()) return w;
  const auto& frames = frames_for(dim);
  double unit = std::pow(h, d) / cover_inflation(dim, d) / static_cast<double>(frames.size());
  std::unordered_map<CellKey, std::uint32_t, CellHash> count;
  std::vector<CellKey> keys(F.size());
  for (const Frame& f : frames) {
    count.clear();
    for (std::size_t i = 0; i < F.size(); ++i) {
      keys[i] = cell_of(f, F[i], dim, h);
      ++count[keys[i]];
    }
    for (std::size_t i = 0; i < F.size(); ++i) w[i] += unit / count[keys[i]];
  }
  return w;
}

}  // namespace gmt
