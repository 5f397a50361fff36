#include "gmt/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "gmt/sampling.hpp"
#include "gmt/whitney.hpp"

namespace gmt {

namespace {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) { return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (k + 1)); }

double binomial_err(double p, std::size_t n) { return n ? std::sqrt(std::max(0.0, p * (1 - p)) / n) : 0; }

bool determinate(const WoSEstimate& e) { return e.hits > 0 && e.value >= 10 * e.std_err; }

Point unit_tangent(const Point& v, int dim) {
  double n = norm(v);
  Point u = n > 0 ? (1 / n) * v : Point{0, 1, 0};
  if (dim == 2) return {-u[1], u[0], 0};
  Point a = std::abs(u[0]) < 0.9 ? Point{1, 0, 0} : Point{0, 1, 0};
  Point t = a - dot(a, u) * u;
  return (1 / norm(t)) * t;
}

}  // namespace

std::optional<double> escape_radius(const ImplicitDomain& domain, const WoSOptions& opt) {
  if (opt.escape_radius > 0) return opt.escape_radius;
  if (domain.unbounded()) return 1e3 * opt.r0;
  return std::nullopt;
}

WoSExit wos_sample(const ImplicitDomain& domain, const Point& z, Stream& rng, const WoSOptions& opt) {
  if (!(opt.eps_shell > 0)) throw InputError("wos: eps_shell must be positive");
  if (!is_finite(z) || !(domain.sdist(z) < -opt.eps_shell)) throw InputError("wos: start point not inside the domain");
  auto R = escape_radius(domain, opt);
  WoSExit out;
  Point x = z;
  for (std::size_t k = 0; k < opt.max_steps; ++k) {
    double s = domain.sdist(x);
    if (s > -opt.eps_shell) {
      out.point = domain.project ? domain.project(x) : x;
      out.steps = k;
      return out;
    }
    if (R && dist(x, z) > *R) {
      out.escaped = true;
      out.point = x;
      out.steps = k;
      return out;
    }
    x = x + (-s) * rng.direction(domain.dim);
  }
  out.escaped = true;
  out.point = x;
  out.steps = opt.max_steps;
  return out;
}

BoundarySet ball_set(const Point& centre, double r) {
  return [centre, r](const Point& p) { return dist(p, centre) <= r; };
}

BoundarySet box_set(const Box& box) {
  return [box](const Point& p) { return box.contains(p); };
}

BoundarySet arc_set(const Point& centre, double a0, double a1) {
  if (!(a0 <= a1)) throw InputError("arc_set: empty angle range");
  return [centre, a0, a1](const Point& p) {
    double a = std::atan2(p[1] - centre[1], p[0] - centre[0]);
    for (double t : {a - 2 * std::numbers::pi, a, a + 2 * std::numbers::pi})
      if (t >= a0 && t <= a1) return true;
    return false;
  };
}

BoundarySet cloud_set(const PointCloud& F, double radius) {
  if (F.empty()) return empty_set();
  auto tree = std::make_shared<KdTree>(F.points, F.dim);
  return [tree, radius](const Point& p) { return tree->nearest(p).distance <= radius; };
}

BoundarySet empty_set() {
  return [](const Point&) { return false; };
}

std::size_t ExitSample::count(const BoundarySet& F) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (!escaped_[i] && F(points_[i])) ++c;
  return c;
}

WoSEstimate ExitSample::estimate_count(std::size_t hits) const {
  WoSEstimate e;
  e.n_walks = points_.size();
  e.hits = hits;
  e.value = e.n_walks ? static_cast<double>(hits) / e.n_walks : 0;
  e.std_err = binomial_err(e.value, e.n_walks);
  e.eps_shell = eps_;
  e.escape_radius = escape_;
  e.seed = seed_;
  e.escaped_fraction = e.n_walks ? static_cast<double>(n_escaped_) / e.n_walks : 0;
  e.unreliable = e.escaped_fraction > 0.5;
  return e;
}

WoSEstimate ExitSample::estimate(const BoundarySet& F) const { return estimate_count(count(F)); }

ExitSample run_walks(const ImplicitDomain& domain, const Point& z, std::size_t n_walks, std::uint64_t seed,
                     const WoSOptions& opt) {
  if (n_walks == 0) throw InputError("wos: n_walks must be positive");
  if (!is_finite(z) || !(domain.sdist(z) < -opt.eps_shell)) throw InputError("wos: start point not inside the domain");
  ExitSample s;
  s.z_ = z;
  s.seed_ = seed;
  s.eps_ = opt.eps_shell;
  s.escape_ = escape_radius(domain, opt);
  s.points_.resize(n_walks);
  s.escaped_.resize(n_walks);

  unsigned workers = opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, (n_walks + 1023) / 1024));
  std::vector<std::size_t> steps(workers, 0);
  std::vector<std::exception_ptr> errors(workers);
  auto job = [&](unsigned w) {
    try {
      std::size_t a = n_walks * w / workers, b = n_walks * (w + 1) / workers;
      for (std::size_t i = a; i < b; ++i) {
        Stream rng(seed, i);
        WoSExit e = wos_sample(domain, z, rng, opt);
        s.points_[i] = e.point;
        s.escaped_[i] = e.escaped;
        steps[w] += e.steps;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers <= 1) {
    job(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(job, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto v : steps) s.steps_ += v;
  s.n_escaped_ = static_cast<std::size_t>(std::count(s.escaped_.begin(), s.escaped_.end(), 1));
  return s;
}

WoSEstimate harmonic_measure(const ImplicitDomain& domain, const Point& z, const BoundarySet& F, std::size_t n_walks,
                             std::uint64_t seed, const WoSOptions& opt) {
  if (n_walks < 1000) throw InputError("harmonic_measure: n_walks must be at least 1000");
  if (!F) throw InputError("harmonic_measure: missing indicator");
  return run_walks(domain, z, n_walks, seed, opt).estimate(F);
}

PairedDifference paired_difference(const ExitSample& a, const ExitSample& b, const BoundarySet& F) {
  if (a.size() != b.size() || a.seed() != b.seed() || a.size() == 0)
    throw InputError("paired_difference: samples must share seed and size");
  long long sum = 0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    int x = !a.escaped(i) && F(a.point(i));
    int y = !b.escaped(i) && F(b.point(i));
    sum += x - y;
    nonzero += x != y;
  }
  double n = static_cast<double>(a.size());
  PairedDifference d;
  d.diff = sum / n;
  d.std_err = std::sqrt(std::max(0.0, nonzero / n - d.diff * d.diff) / n);
  return d;
}

double nested_ratio_err(double p1, double p2, std::size_t n) {
  if (!(p1 > 0) || n == 0) return kInf;
  double q = std::max(0.0, p2 - p1);
  return std::sqrt(q * (p2 / p1) / (n * p1 * p1));
}

DoublingTable doubling_profile_omega(const ImplicitDomain& domain, const Point& z0, const DoublingGrid& grid,
                                     std::size_t n_walks, std::uint64_t seed, const WoSOptions& opt) {
  if (!(grid.r0 > 0)) throw InputError("doubling_profile_omega: r0 must be positive");
  double depth = -domain.sdist(z0);
  if (!(depth > 0)) throw InputError("doubling_profile_omega: z0 not inside the domain");
  if (dist(z0, grid.xi0) < 2 * grid.r0 && depth < grid.r0 / 8)
    throw InputError("doubling_profile_omega: z0 too close to the reference ball");
  for (double r : grid.radii)
    if (!(r > 0)) throw InputError("doubling_profile_omega: radii must be positive");

  ExitSample S = run_walks(domain, z0, n_walks, seed, opt);
  DoublingTable t;
  for (const Point& xi : grid.centres)
    for (double r : grid.radii) {
      if (dist(xi, grid.xi0) + 2 * r > grid.r0) {
        ++t.skipped;
        continue;
      }
      DoublingRow row;
      row.xi = xi;
      row.r = r;
      row.small = S.estimate(ball_set(xi, r));
      row.large = S.estimate(ball_set(xi, 2 * r));
      row.indeterminate = !determinate(row.small);
      if (row.small.hits > 0) {
        row.ratio = row.large.value / row.small.value;
        row.ratio_err = nested_ratio_err(row.small.value, row.large.value, n_walks);
      } else {
        row.ratio = kInf;
        row.ratio_err = kInf;
      }
      if (row.indeterminate) {
        ++t.indeterminate;
      } else if (row.ratio > t.sup_ratio) {
        t.sup_ratio = row.ratio;
        t.argmax = t.rows.size();
      }
      t.rows.push_back(row);
    }
  return t;
}

ComparisonReport comparison_suite(const ImplicitDomain& domain, const ComparisonConfig& cfg) {
  for (double f : cfg.sub_fractions)
    if (!(f >= 0 && f <= 1)) throw InputError("comparison_suite: sub-ball fractions must lie in [0, 1]");
  ExitSample S0 = run_walks(domain, cfg.z0, cfg.n_walks, cfg.seed, cfg.wos);
  ComparisonReport rep;
  std::uint64_t k = 0;
  for (const Point& xi : cfg.centres)
    for (double r : cfg.radii) {
      auto ball = find_corkscrew(domain, xi, r, Side::interior, cfg.corkscrew_C);
      if (!ball) {
        ++rep.missing_corkscrews;
        continue;
      }
      Point z = ball->center;
      ExitSample Sz = run_walks(domain, z, cfg.n_walks, sub_seed(cfg.seed, k++), cfg.wos);
      auto B = ball_set(xi, r);
      WoSEstimate w0B = S0.estimate(B), wzB = Sz.estimate(B);
      rep.big_rows.push_back({xi, r, z, wzB});
      rep.big_min = std::min(rep.big_min, wzB.value);

      for (double f : cfg.sub_fractions) {
        RatioRow row;
        row.xi = xi;
        row.r = r;
        row.fraction = f;
        row.z = z;
        auto E = f > 0 ? ball_set(xi, f * r) : empty_set();
        row.omega0_E = S0.estimate(E);
        row.omega0_B = w0B;
        row.omega_z_E = Sz.estimate(E);
        row.rhs = row.omega_z_E.value;
        if (w0B.hits > 0) row.lhs = row.omega0_E.value / w0B.value;
        if (f == 0) {
          row.indeterminate = !determinate(w0B);
        } else {
          row.indeterminate = !determinate(w0B) || !determinate(row.omega0_E) || !determinate(row.omega_z_E);
        }
        if (row.lhs == 0 && row.rhs == 0)
          row.comparability = 1;
        else if (row.lhs == 0 || row.rhs == 0)
          row.comparability = kInf;
        else
          row.comparability = std::max(row.lhs / row.rhs, row.rhs / row.lhs);
        if (row.indeterminate)
          ++rep.indeterminate;
        else
          rep.ratio_constant = std::max(rep.ratio_constant, row.comparability);
        rep.ratio_rows.push_back(row);
      }

      double depth = -domain.sdist(z);
      Point y = z + (depth / 2) * unit_tangent(z - xi, domain.dim);
      if (!(domain.sdist(y) < -cfg.wos.eps_shell)) continue;
      ExitSample Sy = run_walks(domain, y, cfg.n_walks, sub_seed(cfg.seed, k++), cfg.wos);
      HarnackRow h;
      h.xi = xi;
      h.r = r;
      h.x = z;
      h.y = y;
      h.at_x = wzB;
      h.at_y = Sy.estimate(B);
      h.indeterminate = !determinate(h.at_x) || !determinate(h.at_y);
      h.ratio = h.at_y.value > 0 ? h.at_x.value / h.at_y.value : kInf;
      if (h.indeterminate)
        ++rep.indeterminate;
      else
        rep.harnack_constant = std::max({rep.harnack_constant, h.ratio, 1 / h.ratio});
      rep.harnack_rows.push_back(h);
    }
  return rep;
}

MaxPrincipleReport max_principle_check(const ImplicitDomain& inner, const ImplicitDomain& outer,
                                       const std::vector<PointCloud>& Fs, double h, const Point& z,
                                       std::size_t n_walks, std::uint64_t seed, const WoSOptions& opt) {
  if (!(h > 0)) throw InputError("max_principle_check: h must be positive");
  if (inner.dim != outer.dim) throw InputError("max_principle_check: dimension mismatch");
  if (!is_finite(z) || !(inner.sdist(z) < -opt.eps_shell))
    throw InputError("max_principle_check: z is not inside the inner domain");
  if (!(outer.sdist(z) < -opt.eps_shell)) throw InputError("max_principle_check: z is not inside the outer domain");
  for (const auto& F : Fs) {
    if (F.empty()) throw InputError("max_principle_check: empty test set");
    for (const auto& p : F.points)
      if (std::abs(inner.sdist(p)) > 2 * h || std::abs(outer.sdist(p)) > 2 * h)
        throw InputError("max_principle_check: test set not on the shared boundary");
  }
  ExitSample Si = run_walks(inner, z, n_walks, seed, opt);
  ExitSample So = run_walks(outer, z, n_walks, seed, opt);
  MaxPrincipleReport rep;
  rep.pass = true;
  for (const auto& F : Fs) {
    auto set = cloud_set(F, 2 * h);
    SandwichRow row;
    row.inner = Si.estimate(set);
    row.outer = So.estimate(set);
    double joint = std::hypot(row.inner.std_err, row.outer.std_err);
    row.margin = row.outer.value + 3 * joint - row.inner.value;
    row.pass = row.margin >= 0;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

AinftyScatter ainfty_scatter(const ImplicitDomain& domain, const CubeTree& E_tree, double h, const Point& z0,
                             const AinftyConfig& cfg, std::size_t n_walks, std::uint64_t seed, const WoSOptions& opt) {
  const PointCloud& E = E_tree.sigma();
  if (E.empty()) throw InputError("ainfty_scatter: empty E");
  if (!(h > 0)) throw InputError("ainfty_scatter: h must be positive");
  if (cfg.d < 1 || cfg.d >= E.dim) throw InputError("ainfty_scatter: need 1 <= d < D");
  if (cfg.level_span < 0) throw InputError("ainfty_scatter: level_span must be non-negative");
  double scale = cfg.hd_scale > 0 ? cfg.hd_scale : 4 * E.mesh;
  if (!(scale > 0)) throw InputError("ainfty_scatter: H^d scale undefined (E has no mesh)");
  std::vector<double> w = hausdorff_weights(E.points, E.dim, cfg.d, scale);

  ExitSample S = run_walks(domain, z0, n_walks, seed, opt);
  std::vector<std::size_t> hits(E.size(), 0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (S.escaped(i)) continue;
    auto nn = E_tree.index().nearest(S.point(i));
    if (nn.distance <= 2 * h) ++hits[nn.index];
  }

  AinftyScatter out;
  out.domain = domain.name;
  out.seed = seed;
  for (const Point& xi : cfg.centres)
    for (double r : cfg.radii) {
      if (!(r > 2 * h)) throw InputError("ainfty_scatter: radii must exceed 2h");
      WoSEstimate wB = S.estimate(ball_set(xi, r));
      if (!determinate(wB)) {
        ++out.dropped;
        continue;
      }
      out.rows.push_back({xi, r, std::nullopt, 0, 0, 0});
      int L0 = 0;
      while (L0 <= E_tree.depth() && E_tree.ell(L0) > r) ++L0;
      int L1 = std::min(E_tree.depth(), L0 + cfg.level_span);
      double rd = std::pow(r, cfg.d);
      for (int L = L0; L <= L1; ++L)
        for (std::size_t c : E_tree.level(L)) {
          const auto& cube = E_tree.cube(c);
          if (dist(E.points[cube.center], xi) > r) continue;
          bool inside = true;
          std::size_t cnt = 0;
          double mass = 0;
          for (std::size_t i : cube.members) {
            if (dist(E.points[i], xi) > r - 2 * h) {
              inside = false;
              break;
            }
            cnt += hits[i];
            mass += w[i];
          }
          if (!inside) continue;
          double p = static_cast<double>(cnt) / n_walks;
          out.rows.push_back({xi, r, c, p / wB.value, mass / rd, binomial_err(p, n_walks) / wB.value});
        }
    }
  for (double eps : cfg.epsilons) {
    AinftyModulus m;
    m.epsilon = eps;
    for (const auto& row : out.rows) {
      if (row.hd_ratio >= eps) m.delta_omega = std::min(m.delta_omega, row.omega_ratio);
      if (row.omega_ratio >= eps) m.delta_hd = std::min(m.delta_hd, row.hd_ratio);
    }
    out.modulus.push_back(m);
  }
  return out;
}

}  // namespace gmt
