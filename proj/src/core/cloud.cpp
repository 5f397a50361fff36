#include "gmt/cloud.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gmt {

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  for (double w : weights_) {
    if (!(w >= 0) || !std::isfinite(w)) throw InputError("measure weights must be finite and nonnegative");
    total_ += w;
  }
}

double DiscreteMeasure::mass(const IndexSet& idx) const {
  double s = 0;
  for (std::size_t i : idx) s += weights_.at(i);
  return s;
}

DiscreteMeasure uniform_measure(std::size_t n) {
  return DiscreteMeasure(std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
}

PointCloud circle_cloud(std::size_t n, double radius, Point center, double phase) {
  if (n == 0) throw InputError("circle_cloud: n must be positive");
  PointCloud c;
  c.dim = 2;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = phase + 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    c.points.push_back({center[0] + radius * std::cos(a), center[1] + radius * std::sin(a), 0});
  }
  c.mesh = 2 * std::numbers::pi * radius / static_cast<double>(n);
  return c;
}

PointCloud segment_cloud(const Point& a, const Point& b, std::size_t n, int dim) {
  check_dim(dim);
  if (n < 2) throw InputError("segment_cloud: need at least two points");
  PointCloud c;
  c.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(n - 1);
    c.points.push_back(a + t * (b - a));
  }
  c.mesh = dist(a, b) / static_cast<double>(n - 1);
  return c;
}

DiscreteMeasure circle_arclength(std::size_t n, double radius) {
  return DiscreteMeasure(std::vector<double>(n, 2 * std::numbers::pi * radius / static_cast<double>(n)));
}

IndexSet make_index_set(std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

IndexSet all_indices(std::size_t n) {
  IndexSet s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(const IndexSet& a, const IndexSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_cloud_csv(std::ostream& out, const PointCloud& cloud, const DiscreteMeasure* measure) {
  if (measure && measure->size() != cloud.size()) throw InputError("write_cloud_csv: measure size mismatch");
  for (int k = 0; k < cloud.dim; ++k) out << 'x' << k << ',';
  out << "weight\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < cloud.dim; ++k) out << format_double(cloud.points[i][k]) << ',';
    out << format_double(measure ? (*measure)[i] : 1.0) << '\n';
  }
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud, const DiscreteMeasure* measure) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_cloud_csv(f, cloud, measure);
}

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("cloud csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}
}  // namespace

CloudFile read_cloud_csv(std::istream& in) {
  std::string line;
  bool got = false;
  while ((got = static_cast<bool>(std::getline(in, line))) && !line.empty() && line[0] == '#') {
  }
  if (!got) throw InputError("cloud csv: missing header");
  auto header = split_csv(line);
  int dim = 0;
  bool has_weight = false;
  for (const auto& h : header) {
    if (h == "weight")
      has_weight = true;
    else if (h == "x" + std::to_string(dim))
      ++dim;
    else
      throw InputError("cloud csv: unexpected column '" + h + "'");
  }
  check_dim(dim);
  CloudFile f;
  f.cloud.dim = dim;
  std::vector<double> w;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) throw InputError("cloud csv line " + std::to_string(line_no) + ": column count");
    Point p{0, 0, 0};
    for (int k = 0; k < dim; ++k) p[k] = parse_number(cells[k], line_no);
    if (!is_finite(p)) throw InputError("cloud csv line " + std::to_string(line_no) + ": non-finite point");
    f.cloud.points.push_back(p);
    w.push_back(has_weight ? parse_number(cells[dim], line_no) : 1.0);
  }
  f.measure = DiscreteMeasure(std::move(w));
  return f;
}

CloudFile read_cloud_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  return read_cloud_csv(f);
}

}  // namespace gmt
