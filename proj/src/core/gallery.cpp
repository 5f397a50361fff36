#include "gmt/gallery.hpp"

#include <algorithm>
#include <cmath>

namespace gmt {

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

namespace {

int dim_param(const Params& p, int fallback) {
  int d = static_cast<int>(param(p, "dim", fallback));
  if (d < 2 || d > kMaxDim) throw InputError("gallery: dim must be 2 or 3");
  return d;
}

double positive_param(const Params& p, const std::string& key, double fallback) {
  double v = param(p, key, fallback);
  if (!(v > 0) || !std::isfinite(v)) throw InputError("gallery: parameter '" + key + "' must be positive");
  return v;
}

// Nearest point on the boundary of the box b (push out from inside, clamp from outside).
Point rect_boundary_point(const Point& x, const Box& b, int dim) {
  Point y = x;
  bool in = true;
  for (int k = 0; k < dim; ++k)
    if (x[k] < b.lo[k] || x[k] > b.hi[k]) in = false;
  if (!in) {
    for (int k = 0; k < dim; ++k) y[k] = std::clamp(x[k], b.lo[k], b.hi[k]);
    return y;
  }
  int best = 0;
  double gap = kInf;
  bool to_hi = false;
  for (int k = 0; k < dim; ++k) {
    if (x[k] - b.lo[k] < gap) {
      gap = x[k] - b.lo[k];
      best = k;
      to_hi = false;
    }
    if (b.hi[k] - x[k] < gap) {
      gap = b.hi[k] - x[k];
      best = k;
      to_hi = true;
    }
  }
  y[best] = to_hi ? b.hi[best] : b.lo[best];
  return y;
}

bool boxes_meet(const Box& a, const Box& b) { return box_box_dist(a, b) == 0; }

Box cube_box(int dim, const Point& c, double half) {
  Box b;
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = c[k] - half;
    b.hi[k] = c[k] + half;
  }
  return b;
}

ImplicitDomain make_ball(const Params& p, int default_dim) {
  int dim = dim_param(p, default_dim);
  double R = positive_param(p, "radius", 1.0);
  Point c{param(p, "cx", 0), param(p, "cy", 0), dim == 3 ? param(p, "cz", 0) : 0.0};
  ImplicitDomain d;
  d.name = "ball";
  d.dim = dim;
  d.sdist = [c, R](const Point& x) { return dist(x, c) - R; };
  d.hits_complement = [c, R](const Box& b) { return farthest_in_box(c, b) >= R; };
  d.hits_closure = [c, R](const Box& b) { return dist_to_box(c, b) <= R; };
  d.project = [c, R](const Point& x) {
    Point v = x - c;
    double n = norm(v);
    if (n == 0) return c + Point{R, 0, 0};
    return c + (R / n) * v;
  };
  d.bbox = cube_box(dim, c, 1.25 * R);
  d.diam_boundary = 2 * R;
  d.nta_constant = 2;
  return d;
}

ImplicitDomain make_half_space(const Params& p) {
  int dim = dim_param(p, 2);
  double L = positive_param(p, "extent", 4);
  int a = dim - 1;
  ImplicitDomain d;
  d.name = "half_space";
  d.dim = dim;
  d.sdist = [a](const Point& x) { return -x[a]; };
  d.hits_complement = [a](const Box& b) { return b.lo[a] <= 0; };
  d.hits_closure = [a](const Box& b) { return b.hi[a] >= 0; };
  d.project = [a](const Point& x) {
    Point y = x;
    y[a] = 0;
    return y;
  };
  d.bbox = make_box(dim, -L, L);
  d.nta_constant = 2;
  return d;
}

ImplicitDomain make_slab(const Params& p) {
  int dim = dim_param(p, 2);
  double eps = positive_param(p, "eps", std::ldexp(1.0, -10));
  double L = positive_param(p, "extent", 4);
  int a = dim - 1;
  ImplicitDomain d;
  d.name = "slab";
  d.dim = dim;
  d.sdist = [a, eps](const Point& x) { return std::max(-x[a], x[a] - eps); };
  d.hits_complement = [a, eps](const Box& b) { return b.lo[a] <= 0 || b.hi[a] >= eps; };
  d.hits_closure = [a, eps](const Box& b) { return b.hi[a] >= 0 && b.lo[a] <= eps; };
  d.project = [a, eps](const Point& x) {
    Point y = x;
    y[a] = (std::abs(x[a]) <= std::abs(x[a] - eps)) ? 0.0 : eps;
    return y;
  };
  d.bbox = make_box(dim, -L, L);
  return d;
}

// Region above g(x) = slope * |x - period * round(x / period)|.
struct TriangleWave {
  double slope, period;

  double g(double x) const { return slope * std::abs(x - period * std::round(x / period)); }
  double peak() const { return slope * period / 2; }

  double max_on(double a, double b) const {
    if (b - a >= period) return peak();
    if (std::ceil(a / period - 0.5) <= std::floor(b / period - 0.5)) return peak();
    return std::max(g(a), g(b));
  }
  double min_on(double a, double b) const {
    if (b - a >= period) return 0;
    if (std::ceil(a / period) <= std::floor(b / period)) return 0;
    return std::min(g(a), g(b));
  }

  // Exact nearest graph point; the graph is period-periodic so the search
  // runs on the reduced abscissa.
  Point nearest(const Point& x) const {
    double shift = period * std::round(x[0] / period);
    double u = x[0] - shift, v = x[1];
    double vertical = std::abs(v - g(u));
    double window = std::min(vertical, 2 * period + 2 * peak()) + 1e-12;
    double half = period / 2;
    long k0 = static_cast<long>(std::floor((u - window) / half));
    long k1 = static_cast<long>(std::floor((u + window) / half));
    double best = kInf;
    Point out{u, g(u), 0};
    for (long k = k0; k <= k1; ++k) {
      double ax = k * half, bx = (k + 1) * half;
      double ay = g(ax), by = g(bx);
      double dx = bx - ax, dy = by - ay;
      double s = std::clamp(((u - ax) * dx + (v - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
      double px = ax + s * dx, py = ay + s * dy;
      double dd = (u - px) * (u - px) + (v - py) * (v - py);
      if (dd < best) {
        best = dd;
        out = {px, py, 0};
      }
    }
    out[0] += shift;
    return out;
  }
};

ImplicitDomain make_lipschitz_graph(const Params& p) {
  TriangleWave w{param(p, "slope", 0.5), positive_param(p, "period", 1)};
  if (!(w.slope >= 0) || !std::isfinite(w.slope)) throw InputError("gallery: slope must be nonnegative");
  double L = positive_param(p, "extent", 4);
  ImplicitDomain d;
  d.name = "lipschitz_graph";
  d.dim = 2;
  d.sdist = [w](const Point& x) {
    double dd = dist(x, w.nearest(x));
    return x[1] > w.g(x[0]) ? -dd : dd;
  };
  d.hits_complement = [w](const Box& b) { return b.lo[1] <= w.max_on(b.lo[0], b.hi[0]); };
  d.hits_closure = [w](const Box& b) { return b.hi[1] >= w.min_on(b.lo[0], b.hi[0]); };
  d.project = [w](const Point& x) { return w.nearest(x); };
  d.bbox = make_box(2, -L, L);
  return d;
}

struct Perforation {
  int m;

  static double spacing(int n) { return std::ldexp(1.0, -n); }
  static double radius(int n) { return std::ldexp(1.0, -n - 10); }
  static Point center(int n, double i, double j) {
    double s = spacing(n);
    return {i * s, j * s, s};
  }
  static Point nearest_center(int n, const Point& x) {
    double s = spacing(n);
    return center(n, std::round(x[0] / s), std::round(x[1] / s));
  }

  double sdist(const Point& x) const {
    double v = -x[2];
    for (int n = 0; n <= m; ++n) v = std::max(v, radius(n) - dist(x, nearest_center(n, x)));
    return v;
  }

  bool box_meets_ball(const Box& b) const {
    for (int n = 0; n <= m; ++n) {
      double s = spacing(n), r = radius(n);
      if (b.hi[2] < s - r || b.lo[2] > s + r) continue;
      double i0 = std::ceil((b.lo[0] - r) / s), i1 = std::floor((b.hi[0] + r) / s);
      double j0 = std::ceil((b.lo[1] - r) / s), j1 = std::floor((b.hi[1] + r) / s);
      if (i0 > i1 || j0 > j1) continue;
      // A lattice column over the footprint has zero offset in that axis;
      // otherwise at most two candidates remain per axis.
      double ii = std::ceil(b.lo[0] / s), jj = std::ceil(b.lo[1] / s);
      if (ii * s <= b.hi[0]) i0 = i1 = ii;
      if (jj * s <= b.hi[1]) j0 = j1 = jj;
      for (double i = i0; i <= i1; ++i)
        for (double j = j0; j <= j1; ++j)
          if (dist_to_box(center(n, i, j), b) <= r) return true;
    }
    return false;
  }

  bool box_inside_ball(const Box& b) const {
    Point c = b.center();
    for (int n = 0; n <= m; ++n)
      if (farthest_in_box(nearest_center(n, c), b) < radius(n)) return true;
    return false;
  }

  Point project(const Point& x) const {
    Point best{x[0], x[1], 0};
    double bd = std::abs(x[2]);
    for (int n = 0; n <= m; ++n) {
      Point c = nearest_center(n, x);
      Point v = x - c;
      double len = norm(v);
      double dd = std::abs(len - radius(n));
      if (dd < bd) {
        bd = dd;
        best = len == 0 ? c + Point{radius(n), 0, 0} : c + (radius(n) / len) * v;
      }
    }
    return best;
  }
};

ImplicitDomain make_perforated(const Params& p) {
  double mv = param(p, "m", 3);
  if (!(mv >= 0) || mv != std::floor(mv)) throw InputError("gallery: perforated_half_space needs integer m >= 0");
  if (mv > 40) throw InputError("gallery: perforation depth too large");
  double L = positive_param(p, "extent", 2);
  Perforation P{static_cast<int>(mv)};
  ImplicitDomain d;
  d.name = "perforated_half_space";
  d.dim = 3;
  d.sdist = [P](const Point& x) { return P.sdist(x); };
  d.hits_complement = [P](const Box& b) { return b.lo[2] <= 0 || P.box_meets_ball(b); };
  d.hits_closure = [P](const Box& b) { return b.hi[2] >= 0 && !P.box_inside_ball(b); };
  d.project = [P](const Point& x) { return P.project(x); };
  d.bbox.lo = {-L, -L, -0.25};
  d.bbox.hi = {L, L, 1.25};
  return d;
}

ImplicitDomain make_cube_complement(const Params& p) {
  int dim = dim_param(p, 2);
  double a = positive_param(p, "half_side", 1);
  Box cube = make_box(dim, -a, a);
  ImplicitDomain d;
  d.name = "cube_complement";
  d.dim = dim;
  d.sdist = [cube, dim](const Point& x) { return -box_sdist(x, cube, dim); };
  d.hits_complement = [cube](const Box& b) { return boxes_meet(b, cube); };
  d.hits_closure = [a, dim](const Box& b) {
    for (int k = 0; k < dim; ++k)
      if (b.lo[k] <= -a || b.hi[k] >= a) return true;
    return false;
  };
  d.project = [cube, dim](const Point& x) { return rect_boundary_point(x, cube, dim); };
  d.bbox = make_box(dim, -1.5 * a, 1.5 * a);
  d.diam_boundary = 2 * a * std::sqrt(static_cast<double>(dim));
  return d;
}

ImplicitDomain make_annulus(const Params& p) {
  int dim = dim_param(p, 2);
  double r_in = positive_param(p, "r_in", 0.5);
  double r_out = positive_param(p, "r_out", 1);
  if (!(r_in < r_out)) throw InputError("gallery: annulus needs r_in < r_out");
  Point o{0, 0, 0};
  ImplicitDomain d;
  d.name = "annulus";
  d.dim = dim;
  d.sdist = [r_in, r_out](const Point& x) {
    double n = norm(x);
    return std::max(n - r_out, r_in - n);
  };
  d.hits_complement = [o, r_in, r_out](const Box& b) {
    return farthest_in_box(o, b) >= r_out || dist_to_box(o, b) <= r_in;
  };
  d.hits_closure = [o, r_in, r_out](const Box& b) {
    return dist_to_box(o, b) <= r_out && farthest_in_box(o, b) >= r_in;
  };
  d.project = [r_in, r_out](const Point& x) {
    double n = norm(x);
    double r = std::abs(n - r_in) <= std::abs(n - r_out) ? r_in : r_out;
    if (n == 0) return Point{r, 0, 0};
    return (r / n) * x;
  };
  d.bbox = make_box(dim, -1.25 * r_out, 1.25 * r_out);
  d.diam_boundary = 2 * r_out;
  return d;
}

ImplicitDomain make_punctured(const Params& p) {
  int dim = dim_param(p, 2);
  double L = positive_param(p, "extent", 4);
  ImplicitDomain d;
  d.name = "punctured_plane";
  d.dim = dim;
  d.sdist = [](const Point& x) { return -norm(x); };
  d.hits_complement = [](const Box& b) { return b.contains(Point{0, 0, 0}); };
  d.hits_closure = [](const Box&) { return true; };
  d.project = [](const Point&) { return Point{0, 0, 0}; };
  d.bbox = make_box(dim, -L, L);
  d.diam_boundary = 0;
  return d;
}

ImplicitDomain make_rooms(const Params& p) {
  double w = param(p, "w", std::ldexp(1.0, -8));
  double t = positive_param(p, "t", 0.125);
  if (!(w >= 0) || !(w < 2)) throw InputError("gallery: rooms_and_corridor needs 0 <= w < 2");
  if (!(t < 1)) throw InputError("gallery: wall half-thickness must be < 1");
  Box S = make_box(2, -1, 1);
  Box W1, W2;
  W1.lo = {-t, w / 2, 0};
  W1.hi = {t, 1, 0};
  W2.lo = {-t, -1, 0};
  W2.hi = {t, -w / 2, 0};
  ImplicitDomain d;
  d.name = "rooms_and_corridor";
  d.dim = 2;
  d.sdist = [S, W1, W2](const Point& x) {
    return std::max({box_sdist(x, S, 2), -box_sdist(x, W1, 2), -box_sdist(x, W2, 2)});
  };
  d.hits_complement = [W1, W2](const Box& b) {
    bool in_open_square = b.lo[0] > -1 && b.lo[1] > -1 && b.hi[0] < 1 && b.hi[1] < 1;
    return !in_open_square || boxes_meet(b, W1) || boxes_meet(b, W2);
  };
  d.hits_closure = [S, t, w](const Box& b) {
    if (!boxes_meet(b, S)) return false;
    Box c = b;
    for (int k = 0; k < 2; ++k) {
      c.lo[k] = std::max(b.lo[k], -1.0);
      c.hi[k] = std::min(b.hi[k], 1.0);
    }
    bool in_wall_columns = c.lo[0] > -t && c.hi[0] < t;
    bool above = c.lo[1] > w / 2, below = c.hi[1] < -w / 2;
    return !(in_wall_columns && (above || below));
  };
  d.project = [S, W1, W2](const Point& x) {
    Point best = rect_boundary_point(x, S, 2);
    double bd = dist(x, best);
    for (const Box* r : {&W1, &W2}) {
      if (r->hi[1] <= r->lo[1]) continue;
      Point q = rect_boundary_point(x, *r, 2);
      if (dist(x, q) < bd) {
        bd = dist(x, q);
        best = q;
      }
    }
    return best;
  };
  d.bbox = make_box(2, -1, 1);
  d.diam_boundary = 2 * std::sqrt(2.0);
  return d;
}

}  // namespace

std::vector<std::string> gallery_names() {
  return {"ball",    "disk",           "half_space",     "slab",
          "lipschitz_graph", "perforated_half_space", "cube_complement",
          "annulus", "punctured_plane", "rooms_and_corridor"};
}

ImplicitDomain gallery_domain(const std::string& name, const Params& params) {
  ImplicitDomain d;
  if (name == "ball")
    d = make_ball(params, 2);
  else if (name == "disk") {
    if (param(params, "dim", 2) != 2) throw InputError("gallery: disk is planar");
    d = make_ball(params, 2);
    d.name = "disk";
  } else if (name == "half_space")
    d = make_half_space(params);
  else if (name == "slab")
    d = make_slab(params);
  else if (name == "lipschitz_graph")
    d = make_lipschitz_graph(params);
  else if (name == "perforated_half_space")
    d = make_perforated(params);
  else if (name == "cube_complement")
    d = make_cube_complement(params);
  else if (name == "annulus")
    d = make_annulus(params);
  else if (name == "punctured_plane")
    d = make_punctured(params);
  else if (name == "rooms_and_corridor")
    d = make_rooms(params);
  else
    throw InputError("gallery: unknown domain '" + name + "'");
  return d;
}

}  // namespace gmt
