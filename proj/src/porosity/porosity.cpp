#include "gmt/porosity.hpp"

#include <algorithm>
#include <limits>

namespace gmt {

namespace {

KdTree subset_tree(const CubeTree& tree, const IndexSet& E) {
  std::vector<Point> pts;
  pts.reserve(E.size());
  for (auto i : E) pts.push_back(tree.sigma().points.at(i));
  return KdTree(std::move(pts), tree.dim());
}

void check_subset(const CubeTree& tree, const IndexSet& E) {
  if (!std::is_sorted(E.begin(), E.end()) || std::adjacent_find(E.begin(), E.end()) != E.end())
    throw InputError("index set must be sorted and duplicate-free");
  if (!E.empty() && E.back() >= tree.sigma().size()) throw InputError("index out of range");
}

}  // namespace

std::vector<std::size_t> cube_chain(const CubeTree& tree, std::size_t cube) {
  std::vector<std::size_t> out{cube};
  while (tree.cube(out.back()).parent) out.push_back(*tree.cube(out.back()).parent);
  return out;
}

bool descends_from(const CubeTree& tree, std::size_t a, std::size_t b) {
  int lb = tree.cube(b).level;
  if (tree.cube(a).level < lb) return false;
  return tree.cube_of(lb, tree.cube(a).center) == b;
}

DoublingProfile estimate_doubling(const DiscreteMeasure& mu, const PointCloud& cloud, const Ball& region, double r_lo,
                                  double r_hi, int per_octave, std::size_t max_centres) {
  if (mu.size() != cloud.size()) throw InputError("measure size does not match the cloud");
  if (!(r_lo > 0 && r_hi >= r_lo) || per_octave < 1) throw InputError("bad scale range");
  DoublingProfile prof;
  prof.region = region;
  prof.r_lo = r_lo;
  prof.r_hi = r_hi;
  std::vector<std::size_t> centres;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (mu[i] > 0 && region.contains(cloud.points[i])) centres.push_back(i);
  double region_mass = 0;
  for (auto i : centres) region_mass += mu[i];
  if (!(region_mass > 0)) throw InputError("measure has no mass in the region");
  std::size_t stride = std::max<std::size_t>(1, (centres.size() + max_centres - 1) / max_centres);

  KdTree kd(cloud.points, cloud.dim);
  int steps = static_cast<int>(std::floor(per_octave * std::log2(r_hi / r_lo) + 1e-9));
  auto ball_mass = [&](const Point& p, double r) {
    double m = 0;
    for (auto j : kd.within(p, r)) m += mu[j];
    return m;
  };
  for (std::size_t c = 0; c < centres.size(); c += stride) {
    const Point& p = cloud.points[centres[c]];
    for (int s = 0; s <= steps; ++s) {
      double r = r_lo * std::exp2(static_cast<double>(s) / per_octave);
      double small = ball_mass(p, r);
      if (!(small > 0)) {
        ++prof.skipped;
        continue;
      }
      ++prof.samples;
      prof.C_mu = std::max(prof.C_mu, ball_mass(p, 2 * r) / small);
    }
  }
  prof.beta0 = std::log2(prof.C_mu);
  return prof;
}

std::vector<std::size_t> complement_cubes(const CubeTree& tree, const IndexSet& E, double M) {
  check_subset(tree, E);
  if (!(M > 1)) throw InputError("M must exceed 1");
  KdTree ekd = subset_tree(tree, E);
  std::vector<std::size_t> out, stack{tree.root()};
  while (!stack.empty()) {
    std::size_t c = stack.back();
    stack.pop_back();
    const auto& cube = tree.cube(c);
    if (ekd.nearest(tree.sigma().points[cube.center]).distance >= M * tree.ell(cube.level)) {
      out.push_back(c);
      continue;
    }
    for (auto ch : cube.children) stack.push_back(ch);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool cube_in_ball(const CubeTree& tree, std::size_t inner, std::size_t outer, double M) {
  const auto& pts = tree.sigma().points;
  const Point& z = pts[tree.cube(outer).center];
  double R = M * tree.ell_of(outer);
  double d0 = dist(z, pts[tree.cube(inner).center]);
  if (d0 >= R) return false;
  if (d0 + tree.ell_of(inner) < R) return true;
  for (auto i : tree.cube(inner).members)
    if (!(dist(pts[i], z) < R)) return false;
  return true;
}

double lambda_from_complement(const CubeTree& tree, const std::vector<std::size_t>& w, std::size_t cube, double M,
                              double beta) {
  double ell = tree.ell_of(cube), sum = 0;
  for (auto c : w)
    if (cube_in_ball(tree, c, cube, M)) sum += std::pow(tree.ell_of(c) / ell, beta);
  return sum;
}

double lambda_coefficient(const CubeTree& tree, const IndexSet& E, std::size_t cube, double M, double beta) {
  if (!(beta > 0)) throw InputError("beta must be positive");
  return lambda_from_complement(tree, complement_cubes(tree, E, M), cube, M, beta);
}

std::vector<std::size_t> porous_cubes(const CubeTree& tree, const IndexSet& E, double M, double delta,
                                      std::size_t top) {
  check_subset(tree, E);
  if (!(M > 1)) throw InputError("M must exceed 1");
  if (!(delta > 0 && delta < 1)) throw InputError("delta must lie in (0, 1)");
  std::vector<std::size_t> out;
  if (E.empty()) return out;
  const auto& pts = tree.sigma().points;
  KdTree ekd = subset_tree(tree, E);
  std::vector<double> dE(pts.size());
  std::vector<char> inE(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) dE[i] = ekd.nearest(pts[i]).distance;
  for (auto i : E) inE[i] = 1;
  for (std::size_t c = 0; c < tree.cubes().size(); ++c) {
    if (!descends_from(tree, c, top)) continue;
    const auto& cube = tree.cube(c);
    if (std::none_of(cube.members.begin(), cube.members.end(), [&](std::size_t i) { return inE[i] != 0; })) continue;
    double ell = tree.ell(cube.level);
    for (auto j : tree.index().within(pts[cube.center], M * ell))
      if (dE[j] >= delta * ell) {
        out.push_back(c);
        break;
      }
  }
  return out;
}

double carleson_sum(const CubeTree& tree, const std::vector<std::size_t>& family, const DiscreteMeasure& mu,
                    std::size_t cube) {
  double denom = mu.mass(tree.cube(cube).members);
  if (!(denom > 0)) return NAN;
  double s = 0;
  for (auto c : family)
    if (descends_from(tree, c, cube)) s += mu.mass(tree.cube(c).members);
  return s / denom;
}

CarlesonReport carleson_report(const CubeTree& tree, const std::vector<std::size_t>& family, const DiscreteMeasure& mu,
                               std::size_t top) {
  auto mass = cube_masses(tree, mu);
  const std::size_t n = mass.size();
  std::vector<double> acc(n, 0);
  for (auto c : family) acc.at(c) += mass[c];
  for (std::size_t c = n; c-- > 1;)
    if (tree.cube(c).parent) acc[*tree.cube(c).parent] += acc[c];
  CarlesonReport rep;
  rep.ratio.assign(n, NAN);
  rep.argmax = top;
  for (std::size_t c = 0; c < n; ++c) {
    if (!descends_from(tree, c, top)) continue;
    if (!(mass[c] > 0)) {
      ++rep.zero_mass;
      continue;
    }
    rep.ratio[c] = acc[c] / mass[c];
    if (rep.ratio[c] > rep.sup) rep.sup = rep.ratio[c], rep.argmax = c;
  }
  return rep;
}

IndexSet shell_members(const CubeTree& tree, std::size_t cube, double r) {
  const auto& mem = tree.cube(cube).members;
  IndexSet out;
  if (mem.size() >= tree.sigma().size()) return out;
  for (auto i : mem)
    for (auto j : tree.index().within(tree.sigma().points[i], r, true))
      if (!std::binary_search(mem.begin(), mem.end(), j)) {
        out.push_back(i);
        break;
      }
  return out;
}

ShellFit shell_decay(const CubeTree& tree, const DiscreteMeasure& mu, const std::vector<double>& t_grid) {
  if (t_grid.size() < 4) throw InputError("shell fit needs at least four t values");
  for (double t : t_grid)
    if (!(t > 0 && t < 1)) throw InputError("t values must lie in (0, 1)");
  if (mu.size() != tree.sigma().size()) throw InputError("measure size does not match the point set");
  ShellFit fit;
  fit.t_grid = t_grid;
  fit.envelope.assign(t_grid.size(), 0);
  double tmax = *std::max_element(t_grid.begin(), t_grid.end());
  const auto& pts = tree.sigma().points;

  std::vector<double> d;
  for (std::size_t c = 0; c < tree.cubes().size(); ++c) {
    const auto& mem = tree.cube(c).members;
    double total = mu.mass(mem);
    if (!(total > 0)) continue;
    ++fit.cubes_used;
    if (mem.size() >= pts.size()) continue;
    double ell = tree.ell_of(c);
    d.assign(mem.size(), kInf);
    for (std::size_t k = 0; k < mem.size(); ++k) {
      if (mu[mem[k]] == 0) continue;
      for (auto j : tree.index().within(pts[mem[k]], tmax * ell, true))
        if (!std::binary_search(mem.begin(), mem.end(), j)) d[k] = std::min(d[k], dist(pts[mem[k]], pts[j]));
    }
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
      double shell = 0;
      for (std::size_t k = 0; k < mem.size(); ++k)
        if (d[k] <= t_grid[g] * ell) shell += mu[mem[k]];
      fit.envelope[g] = std::max(fit.envelope[g], shell / total);
    }
  }

  std::vector<double> xs, ys;
  for (std::size_t g = 0; g < t_grid.size(); ++g)
    if (fit.envelope[g] > 0) xs.push_back(std::log(t_grid[g])), ys.push_back(std::log(fit.envelope[g]));
  if (xs.size() < 2) return fit;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k], my += ys[k];
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) sxx += (xs[k] - mx) * (xs[k] - mx), sxy += (xs[k] - mx) * (ys[k] - my);
  if (!(sxx > 0)) return fit;
  fit.alpha_hat = sxy / sxx;
  double b = my - fit.alpha_hat * mx;
  fit.t0_hat = std::exp(b);
  fit.residual = 0;
  for (std::size_t k = 0; k < xs.size(); ++k)
    fit.residual = std::max(fit.residual, std::abs(ys[k] - (b + fit.alpha_hat * xs[k])));
  fit.defined = true;
  return fit;
}

RefinementResult refine_set(const CubeTree& tree, const IndexSet& E, const DiscreteMeasure& mu,
                            const PorosityConfig& cfg) {
  check_subset(tree, E);
  if (mu.size() != tree.sigma().size()) throw InputError("measure size does not match the point set");
  if (!(cfg.tau > 0 && cfg.tau < 1)) throw InputError("tau must lie in (0, 1)");
  if (!(cfg.t > 0 && cfg.t < 1)) throw InputError("t must lie in (0, 1)");
  if (cfg.top >= tree.cubes().size()) throw InputError("Delta0 is not a cube of the tree");
  if (std::isfinite(cfg.beta) && std::isfinite(cfg.beta0) && !(cfg.beta > cfg.beta0))
    throw InputError("beta must exceed beta0");
  const auto& top = tree.cube(cfg.top);
  if (!is_subset(E, top.members)) throw InputError("E must lie in Delta0");
  double muE = mu.mass(E), mu0 = mu.mass(top.members);
  if (!(muE > 0)) throw InputError("E must carry positive mass");
  double rho = std::isnan(cfg.rho) ? muE / mu0 : cfg.rho;
  if (!(rho > 0 && rho <= 1)) throw InputError("rho must lie in (0, 1]");
  if (muE / mu0 < rho * (1 - 1e-12)) throw InputError("mu(E) / mu(Delta0) is below rho");

  RefinementResult res;
  res.t_used = cfg.t;
  res.P = porous_cubes(tree, E, cfg.M, cfg.delta, cfg.top);
  res.C1 = carleson_report(tree, res.P, mu, cfg.top).sup;
  res.N = static_cast<int>(std::floor(2 * res.C1 / (cfg.tau * rho))) + 1;

  const std::size_t ncubes = tree.cubes().size(), npts = tree.sigma().size();
  std::vector<char> inP(ncubes, 0), inside(ncubes, 0);
  for (auto c : res.P) inP[c] = 1;
  std::vector<int> k(ncubes, 0);
  std::vector<char> excised(npts, 0);
  for (std::size_t c = cfg.top; c < ncubes; ++c) {
    const auto& cube = tree.cube(c);
    if (c == cfg.top) {
      inside[c] = 1;
    } else if (cube.parent && inside[*cube.parent]) {
      inside[c] = 1;
      k[c] = k[*cube.parent] + inP[*cube.parent];
    }
    if (!inside[c] || k[c] < res.N) continue;
    if (c != cfg.top && k[*cube.parent] >= res.N) continue;  // already covered by the ancestor
    for (auto i : cube.members) excised[i] = 1;
  }
  for (auto i : E)
    if (!excised[i]) res.E_N.push_back(i);

  std::vector<char> inEN(npts, 0), removed(npts, 0);
  for (auto i : res.E_N) inEN[i] = 1;
  for (auto c : res.P) {
    const auto& mem = tree.cube(c).members;
    if (std::none_of(mem.begin(), mem.end(), [&](std::size_t i) { return inEN[i] != 0; })) continue;
    res.T.push_back(c);
    for (auto i : shell_members(tree, c, cfg.t * tree.ell_of(c))) removed[i] = 1;
  }
  for (auto i : res.E_N)
    if (!removed[i]) res.E_prime.push_back(i);

  // Checks by enumeration.
  res.chain_ok = is_subset(res.E_prime, res.E_N) && is_subset(res.E_N, E);
  res.mass_ratio = mu.mass(res.E_prime) / muE;
  res.mass_ok = res.mass_ratio >= 1 - cfg.tau;
  std::vector<int> count(npts, 0);
  std::vector<char> inEp(npts, 0);
  for (auto i : res.E_prime) inEp[i] = 1;
  for (auto c : res.T)
    for (auto i : tree.cube(c).members)
      if (inEp[i]) res.max_membership = std::max(res.max_membership, ++count[i]);
  res.membership_ok = res.max_membership <= res.N;
  res.T_carleson = carleson_report(tree, res.T, mu, cfg.top).sup;
  res.ok = res.chain_ok && res.mass_ok && res.membership_ok;
  if (!res.chain_ok) res.diagnostics += "subset chain violated; ";
  if (!res.mass_ok)
    res.diagnostics += "mass ratio " + format_double(res.mass_ratio) + " below " + format_double(1 - cfg.tau) +
                       " (t = " + format_double(cfg.t) + " too large); ";
  if (!res.membership_ok)
    res.diagnostics += "membership " + std::to_string(res.max_membership) + " exceeds N = " + std::to_string(res.N) + "; ";
  return res;
}

RefinementResult refine_set_adaptive(const CubeTree& tree, const IndexSet& E, const DiscreteMeasure& mu,
                                     PorosityConfig cfg, int max_halvings) {
  RefinementResult res = refine_set(tree, E, mu, cfg);
  for (int h = 0; h < max_halvings && !res.mass_ok && res.chain_ok && res.membership_ok; ++h) {
    cfg.t /= 2;
    res = refine_set(tree, E, mu, cfg);
  }
  return res;
}

}  // namespace gmt
