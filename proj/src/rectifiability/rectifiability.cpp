#include "gmt/rectifiability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "gmt/rng.hpp"

namespace gmt {

namespace {

Point normalized(const Point& p) {
  double n = norm(p);
  return n > 0 ? (1 / n) * p : Point{0, 0, 1};
}

// Orthonormal basis of the plane with normal n (3D).
std::pair<Point, Point> tangent_basis(const Point& n) {
  Point a = std::abs(n[0]) < 0.9 ? Point{1, 0, 0} : Point{0, 1, 0};
  Point u = normalized(a - dot(a, n) * n);
  Point v{n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2], n[0] * u[1] - n[1] * u[0]};
  return {u, v};
}

Point canonical(Point n, int dim) {
  // n and -n describe the same plane; fix the sign of the last nonzero coordinate.
  for (int k = dim - 1; k >= 0; --k) {
    if (n[k] > 0) return n;
    if (n[k] < 0) return -1.0 * n;
  }
  return n;
}

Point pca_normal(const std::vector<Point>& pts, const std::vector<std::size_t>& ball, int dim) {
  if (ball.size() < 2) {
    Point n{0, 0, 0};
    n[dim - 1] = 1;
    return n;
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (auto i : ball) mean += Eigen::Vector3d(pts[i][0], pts[i][1], pts[i][2]);
  mean /= static_cast<double>(ball.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : ball) {
    Eigen::Vector3d d = Eigen::Vector3d(pts[i][0], pts[i][1], pts[i][2]) - mean;
    cov += d * d.transpose();
  }
  if (dim == 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es2(cov.topLeftCorner<2, 2>());
    Eigen::Vector2d v = es2.eigenvectors().col(0);
    return canonical({v[0], v[1], 0}, 2);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d v = es.eigenvectors().col(0);
  return canonical({v[0], v[1], v[2]}, 3);
}

}  // namespace

BetaEvaluator::BetaEvaluator(PointCloud Z, BetaOptions opt) : Z_(std::move(Z)), opt_(opt) {
  check_dim(Z_.dim);
  if (Z_.empty()) throw InputError("bbeta: Z is empty");
  if (opt_.disc_steps < 4 || opt_.coarse_normals < 1 || opt_.refine_rounds < 0)
    throw InputError("bbeta: invalid search options");
  tree_ = KdTree(Z_.points, Z_.dim);
  rho_ = opt_.disc_radius >= 0 ? opt_.disc_radius : std::max(0.0, Z_.mesh);
  normals_.assign(Z_.size(), Point{0, 0, 0});
  has_disc_.assign(Z_.size(), 0);
  if (rho_ > 0)
    for (std::size_t i = 0; i < Z_.size(); ++i) {
      auto nb = tree_.within(Z_.points[i], 2 * rho_, true);
      if (nb.size() < static_cast<std::size_t>(Z_.dim)) continue;
      normals_[i] = pca_normal(Z_.points, nb, Z_.dim);
      has_disc_[i] = 1;
    }
}

double BetaEvaluator::distance_to_Z(const Point& p) const {
  auto hit = tree_.nearest(p);
  if (rho_ <= 0) return hit.distance;
  double best = hit.distance;
  for (auto i : tree_.within(p, hit.distance + rho_ * (1 + 1e-12), true)) {
    if (!has_disc_[i]) continue;
    Point v = p - Z_.points[i];
    double a = dot(v, normals_[i]);
    double t = std::sqrt(std::max(0.0, norm2(v) - a * a));
    double d = t <= rho_ ? std::abs(a) : std::sqrt(a * a + (t - rho_) * (t - rho_));
    best = std::min(best, d);
  }
  return best;
}

double BetaEvaluator::term_Z(const std::vector<std::size_t>& ball, const Point& xi, double r, const Point& n) const {
  double m = 0;
  for (auto i : ball) m = std::max(m, std::abs(dot(Z_.points[i] - xi, n)));
  return m / r;
}

double BetaEvaluator::term_P(const Point& xi, double r, const Point& n, double cutoff) const {
  double m = 0;
  double stop = cutoff * r;
  auto probe = [&](const Point& p) {
    m = std::max(m, distance_to_Z(p));
    return m >= stop;
  };
  // Outermost samples first: they usually carry the supremum.
  if (Z_.dim == 2) {
    Point u{-n[1], n[0], 0};
    int M = opt_.disc_steps;
    for (int i = M; i >= 0; --i)
      if (probe(xi + (r * i / M) * u) || probe(xi - (r * i / M) * u)) return m / r;
  } else {
    auto [u, v] = tangent_basis(n);
    int M = std::max(2, opt_.disc_steps / 4);
    int rim = 8 * M;
    for (int k = 0; k < rim; ++k) {
      double a = 2 * std::numbers::pi * k / rim;
      if (probe(xi + (r * std::cos(a)) * u + (r * std::sin(a)) * v)) return m / r;
    }
    for (int i = -M; i <= M; ++i)
      for (int j = -M; j <= M; ++j)
        if (i * i + j * j <= M * M && probe(xi + (r * i / M) * u + (r * j / M) * v)) return m / r;
  }
  return m / r;
}

BetaRecord BetaEvaluator::at_normal(const Point& xi, double r, const Point& normal) const {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("bbeta: r must be positive");
  if (!is_finite(xi)) throw InputError("bbeta: xi must be finite");
  BetaRecord rec;
  rec.xi = xi;
  rec.r = r;
  rec.normal = canonical(normalized(normal), Z_.dim);
  auto ball = tree_.within(xi, r, true);
  rec.n_points = ball.size();
  rec.degenerate = ball.size() < static_cast<std::size_t>(Z_.dim);
  rec.xi_in_Z = tree_.nearest(xi).distance <= 1e-9 * std::max(1.0, r);
  rec.term_Z = term_Z(ball, xi, r, rec.normal);
  rec.term_P = term_P(xi, r, rec.normal);
  rec.value = rec.term_Z + rec.term_P;
  return rec;
}

BetaRecord BetaEvaluator::operator()(const Point& xi, double r) const {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("bbeta: r must be positive");
  if (!is_finite(xi)) throw InputError("bbeta: xi must be finite");
  const int dim = Z_.dim;
  auto ball = tree_.within(xi, r, true);
  if (ball.empty()) throw InputError("bbeta: no point of Z in B(xi, r)");

  // Candidates: coarse sweep plus the PCA normal, evaluated in order of the
  // cheap term so that full evaluations stop once that term alone loses.
  std::vector<Point> cand;
  int N = opt_.coarse_normals;
  if (dim == 2) {
    for (int k = 0; k < N; ++k) {
      double a = std::numbers::pi * k / N;
      cand.push_back({std::cos(a), std::sin(a), 0});
    }
  } else {
    for (int k = 0; k < N; ++k) {  // Fibonacci points on the upper hemisphere
      double z = (k + 0.5) / N;
      double s = std::sqrt(1 - z * z);
      double a = k * std::numbers::pi * (3 - std::sqrt(5.0));
      cand.push_back({s * std::cos(a), s * std::sin(a), z});
    }
  }
  cand.push_back(pca_normal(Z_.points, ball, dim));
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < cand.size(); ++i) order.push_back({term_Z(ball, xi, r, cand[i]), i});
  std::sort(order.begin(), order.end());

  double best = kInf;
  Point best_n = cand[order.front().second];
  auto eval = [&](const Point& n) {
    double tz = term_Z(ball, xi, r, n);
    if (tz >= best) return;
    double v = tz + term_P(xi, r, n, best - tz);
    if (v < best) {
      best = v;
      best_n = n;
    }
  };
  for (auto [tz, i] : order) {
    if (tz >= best) break;
    eval(cand[i]);
  }

  double step = dim == 2 ? std::numbers::pi / N : std::sqrt(2 * std::numbers::pi / N);
  for (int round = 0; round < opt_.refine_rounds; ++round) {
    bool moved = true;
    while (moved) {
      moved = false;
      Point centre = best_n;
      std::vector<Point> nb;
      if (dim == 2) {
        double a = std::atan2(centre[1], centre[0]);
        for (double s : {-step, step}) nb.push_back({std::cos(a + s), std::sin(a + s), 0});
      } else {
        auto [u, v] = tangent_basis(centre);
        for (double s : {-step, step}) {
          nb.push_back(normalized(centre + s * u));
          nb.push_back(normalized(centre + s * v));
        }
      }
      double before = best;
      for (const auto& n : nb) eval(n);
      moved = best < before;
    }
    step /= 2;
  }
  BetaRecord rec = at_normal(xi, r, best_n);
  return rec;
}

BetaRecord bbeta(const PointCloud& Z, const Point& xi, double r, const BetaOptions& opt) {
  return BetaEvaluator(Z, opt)(xi, r);
}

IndexSet greedy_net(const KdTree& tree, const Point& centre, double radius, double spacing) {
  if (!(spacing > 0)) throw InputError("greedy_net: spacing must be positive");
  using Key = std::array<std::int64_t, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(splitmix64(splitmix64(splitmix64(k[0]) ^ k[1]) ^ k[2]));
    }
  };
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> grid;
  auto key = [spacing](const Point& p) {
    Key k;
    for (int a = 0; a < 3; ++a) k[a] = static_cast<std::int64_t>(std::floor(p[a] / spacing));
    return k;
  };
  IndexSet net;
  for (auto i : tree.within(centre, radius)) {
    const Point& p = tree.point(i);
    Key k = key(p);
    bool close = false;
    for (int dx = -1; dx <= 1 && !close; ++dx)
      for (int dy = -1; dy <= 1 && !close; ++dy)
        for (int dz = -1; dz <= 1 && !close; ++dz) {
          auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == grid.end()) continue;
          for (auto j : it->second)
            if (dist(tree.point(j), p) < spacing) {
              close = true;
              break;
            }
        }
    if (close) continue;
    net.push_back(i);
    grid[k].push_back(i);
  }
  return net;
}

std::vector<CarlesonEnergyReport> carleson_energy_sweep(const BetaEvaluator& beta, const std::vector<double>& weights,
                                                        const Point& xi0, double r0,
                                                        const std::vector<double>& epsilons, CarlesonEnergyConfig cfg,
                                                        int d) {
  const auto& Z = beta.cloud();
  if (weights.size() != Z.size()) throw InputError("carleson_energy: one weight per point required");
  if (!(r0 > 0)) throw InputError("carleson_energy: r0 must be positive");
  if (cfg.J < 1) throw InputError("carleson_energy: J must be >= 1");
  if (d < 1 || d > Z.dim - 1) throw InputError("carleson_energy: d out of range");
  for (double e : epsilons)
    if (!(e > 0)) throw InputError("carleson_energy: epsilon must be positive");
  double spacing = cfg.net_spacing > 0 ? cfg.net_spacing : std::ldexp(r0, -(cfg.J + 1));

  IndexSet net = greedy_net(beta.index(), xi0, r0, spacing);
  std::vector<Point> centres;
  for (auto i : net) centres.push_back(Z.points[i]);
  std::vector<double> w(centres.size(), 0);
  if (!centres.empty()) {
    KdTree ct(centres, Z.dim);
    for (auto i : beta.index().within(xi0, r0)) w[ct.nearest(Z.points[i]).index] += weights[i];
  }
  std::vector<double> values;
  values.reserve(centres.size() * cfg.J);
  for (const auto& c : centres)
    for (int j = 0; j < cfg.J; ++j) values.push_back(beta(c, std::ldexp(r0, -j)).value);

  std::vector<CarlesonEnergyReport> out;
  for (double eps : epsilons) {
    CarlesonEnergyReport rep;
    rep.epsilon = eps;
    rep.xi0 = xi0;
    rep.r0 = r0;
    rep.centres = centres.size();
    rep.cells = values.size();
    rep.beta = values;
    for (std::size_t c = 0; c < centres.size(); ++c)
      for (int j = 0; j < cfg.J; ++j)
        if (values[c * cfg.J + j] > eps) {
          ++rep.bad_cells;
          rep.estimate += w[c] * std::numbers::ln2;
        }
    rep.C_UR_emp = rep.estimate / std::pow(r0, d);
    out.push_back(std::move(rep));
  }
  return out;
}

CarlesonEnergyReport carleson_energy(const BetaEvaluator& beta, const std::vector<double>& weights, const Point& xi0,
                                     double r0, const CarlesonEnergyConfig& cfg, int d) {
  return carleson_energy_sweep(beta, weights, xi0, r0, {cfg.epsilon}, cfg, d).front();
}

PointCloud four_corner_cantor(int generations) {
  if (generations < 0 || generations > 10) throw InputError("four_corner_cantor: generations must be in [0, 10]");
  std::vector<Point> lo{{0, 0, 0}};
  double side = 1;
  for (int g = 0; g < generations; ++g) {
    std::vector<Point> next;
    side /= 4;
    for (const auto& p : lo)
      for (auto [a, b] : {std::pair{0, 0}, {3, 0}, {0, 3}, {3, 3}}) next.push_back({p[0] + a * side, p[1] + b * side, 0});
    lo = std::move(next);
  }
  PointCloud c;
  c.dim = 2;
  c.mesh = side;
  for (const auto& p : lo) c.points.push_back({p[0] + side / 2, p[1] + side / 2, 0});
  return c;
}

std::string to_string(WitnessStatus s) {
  switch (s) {
    case WitnessStatus::found: return "found";
    case WitnessStatus::hypotheses_not_met: return "hypotheses not met";
    case WitnessStatus::counterexample_candidate: return "counterexample candidate";
  }
  return "?";
}

FarPointWitness far_point_witness(const PointCloud& Z, const PointCloud& Sigma, const IndexSet& E, const Point& xi,
                                  double r, double epsilon, double C, const BetaOptions& opt) {
  if (!(C >= 1)) throw InputError("far_point_witness: C must be >= 1");
  if (!(epsilon > 0) || !(epsilon < 1 / (8 * C * C)))
    throw InputError("far_point_witness: epsilon must lie in (0, 1/(8C^2))");
  if (!(r > 0)) throw InputError("far_point_witness: r must be positive");
  if (Sigma.dim != Z.dim) throw InputError("far_point_witness: Sigma dimension does not match Z");
  std::vector<Point> ep;
  for (auto i : E) {
    if (i >= Z.size()) throw InputError("far_point_witness: E index out of range");
    ep.push_back(Z.points[i]);
  }
  KdTree et(ep, Z.dim);

  FarPointWitness out;
  out.beta = bbeta(Z, xi, r, opt);
  for (const auto& s : Sigma.points) {
    if (!(dist(s, xi) < r / (2 * C))) continue;
    double d = et.nearest(s).distance;
    if (d > (2 * C + 1) * epsilon * r && d > out.zeta_dist) {
      out.zeta = s;
      out.zeta_dist = d;
    }
  }
  bool beta_ok = out.beta.value < epsilon;
  if (!beta_ok || !out.zeta) {
    out.status = WitnessStatus::hypotheses_not_met;
    out.detail = !beta_ok ? "beta " + format_double(out.beta.value) + " >= epsilon"
                          : "no point of Sigma in B(xi, r/2C) at distance > (2C+1) epsilon r from E";
    return out;
  }
  KdTree zt(Z.points, Z.dim);
  for (auto i : zt.within(xi, r)) {
    double d = et.nearest(Z.points[i]).distance;
    if (!out.witness || d > out.witness_dist) {
      out.witness = Z.points[i];
      out.witness_dist = d;
    }
  }
  if (out.witness && out.witness_dist >= epsilon * r) {
    out.status = WitnessStatus::found;
  } else {
    out.status = WitnessStatus::counterexample_candidate;
    out.detail = "hypotheses hold on the samples but no point of Z is epsilon r from E; "
                 "either the sampling is too coarse or the sides of Sigma are not C-uniform at this scale";
  }
  return out;
}

}  // namespace gmt
