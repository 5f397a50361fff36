#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "gmt/geometry.hpp"

namespace gmt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: the k-th draw of stream (seed, id) depends only on
/// those three numbers, so results do not depend on scheduling.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t id) : key_(splitmix64(seed ^ splitmix64(id + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() {
    double u = 1.0 - uniform();
    double v = uniform();
    return std::sqrt(-2 * std::log(u)) * std::cos(2 * std::numbers::pi * v);
  }

  /// Uniform direction on the unit sphere of R^dim.
  Point direction(int dim) {
    if (dim == 2) {
      double a = 2 * std::numbers::pi * uniform();
      return {std::cos(a), std::sin(a), 0};
    }
    double z = 2 * uniform() - 1;
    double a = 2 * std::numbers::pi * uniform();
    double s = std::sqrt(std::max(0.0, 1 - z * z));
    return {s * std::cos(a), s * std::sin(a), z};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gmt
