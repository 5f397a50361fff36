#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmt/cloud.hpp"
#include "gmt/kdtree.hpp"

namespace gmt {

struct BetaRecord {
  Point xi{0, 0, 0};
  double r = 0;
  double value = 0;   // term_Z + term_P
  double term_Z = 0;  // sup over Z in the ball of dist to the plane, over r
  double term_P = 0;  // sup over the plane disc of dist to Z, over r
  Point normal{0, 1, 0};
  std::size_t n_points = 0;  // Z points in the closed ball
  bool degenerate = false;   // fewer than D points in the ball
  bool xi_in_Z = true;
};

struct BetaOptions {
  int disc_steps = 64;     // plane disc sampled at spacing r / disc_steps
  int coarse_normals = 90; // initial sweep (angles in 2D, hemisphere directions in 3D)
  int refine_rounds = 12;  // step halvings of the local search
  double disc_radius = -1; // tangent-disc radius of each sample; negative means Z.mesh
};

/// Centred bilateral beta numbers of a fixed cloud.
class BetaEvaluator {
 public:
  explicit BetaEvaluator(PointCloud Z, BetaOptions opt = {});

  /// Best plane found by a coarse normal sweep plus a PCA seed, refined by
  /// local search. The value is an upper bound on the infimum over planes
  /// through xi, evaluated on the samples.
  BetaRecord operator()(const Point& xi, double r) const;

  /// Both terms for a given unit normal.
  BetaRecord at_normal(const Point& xi, double r, const Point& normal) const;

  const PointCloud& cloud() const { return Z_; }
  const KdTree& index() const { return tree_; }
  double disc_radius() const { return rho_; }

  /// Distance to the union of the sample discs: each sample carries a disc of
  /// radius disc_radius in its local PCA tangent plane (fitted on the samples
  /// within twice that radius), or is a bare point when it has fewer than D
  /// such neighbours.
  double distance_to_Z(const Point& p) const;

 private:
  double term_Z(const std::vector<std::size_t>& ball, const Point& xi, double r, const Point& n) const;
  /// Stops early once the value reaches cutoff.
  double term_P(const Point& xi, double r, const Point& n, double cutoff = kInf) const;

  PointCloud Z_;
  KdTree tree_;
  BetaOptions opt_;
  double rho_ = 0;
  std::vector<Point> normals_;
  std::vector<char> has_disc_;
};

BetaRecord bbeta(const PointCloud& Z, const Point& xi, double r, const BetaOptions& opt = {});

struct CarlesonEnergyConfig {
  double epsilon = 0.3;
  int J = 6;                // scales r0 2^-j, j = 0..J-1
  double net_spacing = -1;  // centre net spacing; negative means r0 2^-(J+1)
};

struct CarlesonEnergyReport {
  double epsilon = 0;
  Point xi0{0, 0, 0};
  double r0 = 0;
  double estimate = 0;  // sum over (centre, scale) cells with beta > epsilon of weight * ln 2
  double C_UR_emp = 0;  // estimate / r0^d
  std::size_t centres = 0, cells = 0, bad_cells = 0;
  std::vector<double> beta;  // centre-major, one value per scale
};

/// Discrete sigma-mass of the bad set in B(xi0, r0) x (0, r0]. Each net centre
/// carries the weights of the Z points in the ball nearest to it.
CarlesonEnergyReport carleson_energy(const BetaEvaluator& beta, const std::vector<double>& weights, const Point& xi0,
                                     double r0, const CarlesonEnergyConfig& cfg, int d);

/// Same report for several thresholds from one evaluation of the grid.
std::vector<CarlesonEnergyReport> carleson_energy_sweep(const BetaEvaluator& beta, const std::vector<double>& weights,
                                                        const Point& xi0, double r0,
                                                        const std::vector<double>& epsilons, CarlesonEnergyConfig cfg,
                                                        int d);

/// Greedy net of the cloud points inside B(centre, radius) (closed), index order.
IndexSet greedy_net(const KdTree& tree, const Point& centre, double radius, double spacing);

/// Four-corner Cantor set of the unit square after g generations (4^g points,
/// the lower-left corners of the surviving squares shifted to their centres).
PointCloud four_corner_cantor(int generations);

enum class WitnessStatus { found, hypotheses_not_met, counterexample_candidate };

struct FarPointWitness {
  WitnessStatus status = WitnessStatus::hypotheses_not_met;
  BetaRecord beta;
  std::optional<Point> zeta;     // the farthest admissible point of Sigma
  double zeta_dist = 0;          // its distance to E
  std::optional<Point> witness;  // point of Z in B(xi, r) farthest from E
  double witness_dist = 0;
  std::string detail;
};

/// Searches Z in B(xi, r) for a point at distance >= epsilon r from E (indices into Z)
/// after checking beta < epsilon and the existence of zeta in Sigma near xi far from E.
FarPointWitness far_point_witness(const PointCloud& Z, const PointCloud& Sigma, const IndexSet& E, const Point& xi,
                                  double r, double epsilon, double C, const BetaOptions& opt = {});

std::string to_string(WitnessStatus s);

}  // namespace gmt
