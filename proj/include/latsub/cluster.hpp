#pragma once

#include <cstddef>
#include <functional>
#include <unordered_set>
#include <vector>

#include "latsub/lattice.hpp"

namespace latsub {

struct IntVecHash {
  std::size_t operator()(const IntVec& v) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (Int x : v) {
      h ^= std::hash<Int>{}(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

using PointSet = std::unordered_set<IntVec, IntVecHash>;

/// Axis-aligned box in lattice coordinates, bounds inclusive.
struct Box {
  IntVec lo;
  IntVec hi;

  static Box cube(std::size_t dim, Int lo, Int hi);
  std::size_t dim() const { return lo.size(); }
  bool contains(const IntVec& x) const;
  bool empty() const;
  /// Number of lattice points; throws on overflow.
  Int volume() const;
  Box translated(const IntVec& t) const;
  template <class F>
  void for_each_point(F&& f) const {
    if (empty()) return;
    IntVec x = lo;
    while (true) {
      f(static_cast<const IntVec&>(x));
      std::size_t i = 0;
      while (i < x.size()) {
        if (x[i] < hi[i]) {
          ++x[i];
          break;
        }
        x[i] = lo[i];
        ++i;
      }
      if (i == x.size()) return;
    }
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// m colored point lists. Within a color points are distinct and sorted.
class Cluster {
 public:
  Cluster() = default;
  Cluster(std::size_t colors, std::size_t dim) : dim_(dim), points_(colors) {}
  /// Sorts and deduplicates each color.
  Cluster(std::size_t dim, std::vector<std::vector<IntVec>> points);

  std::size_t colors() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<IntVec>& operator[](std::size_t color) const { return points_[color]; }
  const std::vector<std::vector<IntVec>>& points() const { return points_; }

  std::vector<std::size_t> counts() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  bool contains(std::size_t color, const IntVec& x) const;
  /// Color-wise inclusion.
  bool subset_of(const Cluster& other) const;
  Cluster intersect(const Box& region) const;
  Cluster translated(const IntVec& t) const;
  /// True when no point carries two colors.
  bool colors_disjoint() const;

  friend bool operator==(const Cluster&, const Cluster&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<IntVec>> points_;
};

/// Point -> color lookup over a cluster whose colors are disjoint.
class ColorIndex {
 public:
  explicit ColorIndex(const Cluster& cluster);
  /// Color index, or -1 when absent.
  int color_of(const IntVec& x) const;
  bool has(std::size_t color, const IntVec& x) const;

 private:
  std::vector<PointSet> sets_;
};

}  // namespace latsub
