#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gmt/domain.hpp"

namespace gmt {

using Anchor = std::array<std::int64_t, kMaxDim>;

/// Q = prod [a_k 2^n, (a_k + 1) 2^n] over the first dim axes.
struct DyadicCube {
  int level = 0;
  Anchor anchor{0, 0, 0};

  double side() const { return std::ldexp(1.0, level); }
  Box box(int dim) const;
  /// lambda Q: same center, side lambda * side().
  Box dilate(int dim, double lambda) const;
  Point center(int dim) const;
  double diameter(int dim) const { return side() * std::sqrt(static_cast<double>(dim)); }
  DyadicCube parent(int dim) const;

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;
};

/// Dyadic cube at the given level containing x (half-open convention).
DyadicCube cube_at(const Point& x, int level, int dim);

struct DyadicCubeHash {
  std::size_t operator()(const DyadicCube& q) const;
};

struct WhitneyForest {
  int dim = 2;
  double K = 3;
  int n_min = 0;
  std::vector<DyadicCube> cubes;                  // sorted by (level, anchor)
  std::vector<std::vector<std::size_t>> adjacency;  // sorted neighbour indices
  std::vector<DyadicCube> truncated_flags;        // cubes at n_min that are not admissible but meet the region

  std::optional<std::size_t> find(const DyadicCube& q) const;
  /// Index of a forest cube containing x, if any; shared faces resolve by the
  /// half-open convention of cube_at, finest level first.
  std::optional<std::size_t> locate(const Point& x) const;
  int min_level() const { return min_level_; }
  int max_level() const { return max_level_; }
  std::size_t size() const { return cubes.size(); }

  /// Rebuilds the lookup index and adjacency lists from `cubes`.
  void finalize();

 private:
  std::unordered_map<DyadicCube, std::size_t, DyadicCubeHash> index_;
  int min_level_ = 0, max_level_ = 0;
};

/// Whitney decomposition of an abstract open set.
///
/// `dilate_hits_complement(B)` answers whether the closed box B meets the
/// complement; `region(B)` whether the closed box B may contain cubes of
/// interest (recursion is pruned where it is false). Maximal admissible cubes
/// overlapping the interior of `box` are returned, down to level n_min.
WhitneyForest whitney_build(int dim, double K, const Box& box, int n_min, const BoxPredicate& dilate_hits_complement,
                            const BoxPredicate& region);

/// W_K(Omega) restricted to cubes overlapping `box`.
WhitneyForest whitney_decompose(const ImplicitDomain& domain, double K, const Box& box, int n_min);

struct CubePath {
  std::vector<std::size_t> cubes;  // forest indices, Q first
  bool connected = false;
  int length_d = 0;  // number of cubes on the path (edges + 1); 0 when disconnected
};

/// Breadth-first shortest path of adjacent cubes.
CubePath whitney_distance(const WhitneyForest& forest, std::size_t q, std::size_t r);

/// All d_Omega values from a source cube (0 marks unreachable).
std::vector<int> whitney_distances_from(const WhitneyForest& forest, std::size_t q);

/// Euclidean distance between two closed dyadic cubes.
double cube_distance(const DyadicCube& a, const DyadicCube& b, int dim);

struct UniformityFit {
  std::vector<double> s_grid;
  std::vector<int> envelope;  // N-hat(s); 0 where no pair has ratio <= s
  std::vector<double> pair_s;
  std::vector<int> pair_d;
  double A = 8, B = 4;
  bool consistent = false;  // envelope <= A + B log2(2 + s) on the grid
};

class DisconnectedPairs : public std::runtime_error {
 public:
  DisconnectedPairs(std::vector<std::pair<std::size_t, std::size_t>> pairs);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

UniformityFit fit_uniformity(const WhitneyForest& forest, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             double A = 8, double B = 4);

enum class Side { interior, exterior };

/// Deterministic grid search plus local ascent for a ball of radius r/C inside
/// B(xi, r) on the requested side of the boundary. Among certified centres the
/// one nearest xi along the ray to the deepest point is returned.
std::optional<Ball> find_corkscrew(const ImplicitDomain& domain, const Point& xi, double r, Side side, double C,
                                   double boundary_tol = 1e-6);

/// Whitney-cube side bounds: for a cube of W_K containing x with d = dist(x, complement),
/// d / (sqrt(D)(1 + K)) <= side <= 2 d / (K - 1).
std::pair<int, int> whitney_level_range(double d, double K, int dim);

}  // namespace gmt
