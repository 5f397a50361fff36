#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gmt/metric_cubes.hpp"

namespace gmt {

struct DoublingProfile {
  double C_mu = 1;
  Ball region;
  double r_lo = 0, r_hi = 0;
  double beta0 = 0;  // log2 C_mu
  std::size_t samples = 0;
  std::size_t skipped = 0;  // pairs with mu(B(xi, r)) = 0
};

/// max mu(B(xi, 2r)) / mu(B(xi, r)) over xi in region with positive weight and
/// r on a geometric grid of `per_octave` steps per doubling in [r_lo, r_hi].
/// At most `max_centres` centres are used (evenly strided in index order).
DoublingProfile estimate_doubling(const DiscreteMeasure& mu, const PointCloud& cloud, const Ball& region, double r_lo,
                                  double r_hi, int per_octave = 4, std::size_t max_centres = 2048);

/// Maximal cubes with MB_Delta disjoint from E, i.e. dist(zeta, E) >= M ell.
std::vector<std::size_t> complement_cubes(const CubeTree& tree, const IndexSet& E, double M);

/// True if every member of `inner` lies in B(zeta_outer, M ell(outer)).
bool cube_in_ball(const CubeTree& tree, std::size_t inner, std::size_t outer, double M);

double lambda_coefficient(const CubeTree& tree, const IndexSet& E, std::size_t cube, double M, double beta);

/// Same sum with W(E^c) precomputed by complement_cubes.
double lambda_from_complement(const CubeTree& tree, const std::vector<std::size_t>& w, std::size_t cube, double M,
                              double beta);

/// P_{M,delta} among the descendants of `top` (inclusive), in id order.
std::vector<std::size_t> porous_cubes(const CubeTree& tree, const IndexSet& E, double M, double delta,
                                      std::size_t top = 0);

/// Sum of mu(Delta) over family members descending from `cube`, over mu(cube).
/// NaN when mu(cube) = 0.
double carleson_sum(const CubeTree& tree, const std::vector<std::size_t>& family, const DiscreteMeasure& mu,
                    std::size_t cube);

struct CarlesonReport {
  std::vector<double> ratio;  // per cube id; NaN outside `top` or for zero mass
  double sup = 0;
  std::size_t argmax = 0;
  std::size_t zero_mass = 0;
};

CarlesonReport carleson_report(const CubeTree& tree, const std::vector<std::size_t>& family, const DiscreteMeasure& mu,
                               std::size_t top = 0);

struct ShellFit {
  std::vector<double> t_grid;
  std::vector<double> envelope;  // max over cubes of mu(Delta minus (1-t)Delta) / mu(Delta)
  double t0_hat = NAN, alpha_hat = NAN;
  double residual = NAN;  // max |ln envelope - fit| over the grid
  std::size_t cubes_used = 0;
  bool defined = false;  // false when fewer than two grid points carry shell mass
};

ShellFit shell_decay(const CubeTree& tree, const DiscreteMeasure& mu, const std::vector<double>& t_grid);

/// Members of `cube` whose distance to the complement is at most r (the t-shell for r = t ell).
IndexSet shell_members(const CubeTree& tree, std::size_t cube, double r);

struct PorosityConfig {
  double M = 2;
  double delta = 0.05;
  double beta = NAN;
  double beta0 = NAN;  // when known, beta must exceed it
  double tau = 0.1;
  double t = 0.01;
  double rho = NAN;  // defaults to mu(E) / mu(Delta0)
  std::size_t top = 0;  // Delta0
};

struct RefinementResult {
  IndexSet E_prime;
  IndexSet E_N;
  std::vector<std::size_t> T;
  std::vector<std::size_t> P;
  int N = 0;
  double C1 = 0;
  double t_used = 0;
  double mass_ratio = 1;  // mu(E') / mu(E)
  double T_carleson = 0;  // sup Carleson ratio of T
  int max_membership = 0;  // max over E' of the number of T cubes containing the point
  bool chain_ok = false;       // E' within E_N within E
  bool mass_ok = false;        // mu(E') >= (1 - tau) mu(E)
  bool membership_ok = false;  // max_membership <= N
  bool ok = false;
  std::string diagnostics;
};

/// Porous-cube excision followed by shell removal. Every invariant of the
/// result is checked by enumeration; `ok` is false (with diagnostics) when the
/// mass bound fails, which means t was too large.
RefinementResult refine_set(const CubeTree& tree, const IndexSet& E, const DiscreteMeasure& mu,
                            const PorosityConfig& cfg);

/// Halves t until refine_set succeeds (at most max_halvings times).
RefinementResult refine_set_adaptive(const CubeTree& tree, const IndexSet& E, const DiscreteMeasure& mu,
                                     PorosityConfig cfg, int max_halvings = 40);

/// Ancestors-or-self of a cube, from the cube up to the root.
std::vector<std::size_t> cube_chain(const CubeTree& tree, std::size_t cube);

/// True if `a` is `b` or a descendant of it.
bool descends_from(const CubeTree& tree, std::size_t a, std::size_t b);

}  // namespace gmt
