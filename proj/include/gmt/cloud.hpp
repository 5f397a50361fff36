#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gmt/geometry.hpp"

namespace gmt {

/// Sorted, duplicate-free list of point indices.
using IndexSet = std::vector<std::size_t>;

enum class CloudSource { boundary, user };

struct PointCloud {
  int dim = 2;
  std::vector<Point> points;
  double mesh = 0;
  CloudSource source = CloudSource::user;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<double> weights);

  const std::vector<double>& weights() const { return weights_; }
  double total() const { return total_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

  /// Mass of an index set, summed in index order.
  double mass(const IndexSet& idx) const;

 private:
  std::vector<double> weights_;
  double total_ = 0;
};

/// Uniform weights 1/n.
DiscreteMeasure uniform_measure(std::size_t n);

/// n equispaced points on the circle of given radius, starting at angle phase.
PointCloud circle_cloud(std::size_t n, double radius = 1, Point center = {0, 0, 0}, double phase = 0);

/// n equispaced points on the closed segment [a, b] (n >= 2).
PointCloud segment_cloud(const Point& a, const Point& b, std::size_t n, int dim = 2);

/// Arclength weights 2 pi r / n for an equispaced circle cloud.
DiscreteMeasure circle_arclength(std::size_t n, double radius = 1);

IndexSet make_index_set(std::vector<std::size_t> idx);
IndexSet all_indices(std::size_t n);
IndexSet set_difference(const IndexSet& a, const IndexSet& b);
IndexSet set_intersection(const IndexSet& a, const IndexSet& b);
bool is_subset(const IndexSet& a, const IndexSet& b);

/// CSV with header "x0,...,x{D-1},weight". Lines starting with # are skipped on reading.
void write_cloud_csv(std::ostream& out, const PointCloud& cloud, const DiscreteMeasure* measure = nullptr);
void write_cloud_csv(const std::string& path, const PointCloud& cloud, const DiscreteMeasure* measure = nullptr);

struct CloudFile {
  PointCloud cloud;
  DiscreteMeasure measure;  // ones when the file has no weight column
};
CloudFile read_cloud_csv(std::istream& in);
CloudFile read_cloud_csv(const std::string& path);

/// Shortest round-trippable decimal representation.
std::string format_double(double v);

}  // namespace gmt
