#include "latsub/cluster.hpp"

#include <algorithm>

namespace latsub {

Box Box::cube(std::size_t dim, Int lo, Int hi) { return Box{IntVec(dim, lo), IntVec(dim, hi)}; }

bool Box::contains(const IntVec& x) const {
  if (x.size() != lo.size()) throw DimensionError("box membership: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

bool Box::empty() const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) return true;
  return false;
}

Int Box::volume() const {
  if (empty()) return 0;
  Int v = 1;
  for (std::size_t i = 0; i < lo.size(); ++i) v = checked_mul(v, checked_add(hi[i] - lo[i], 1));
  return v;
}

Box Box::translated(const IntVec& t) const { return Box{add(lo, t), add(hi, t)}; }

Cluster::Cluster(std::size_t dim, std::vector<std::vector<IntVec>> points)
    : dim_(dim), points_(std::move(points)) {
  for (auto& color : points_) {
    for (const auto& p : color)
      if (p.size() != dim_) throw DimensionError("cluster point has wrong dimension");
    std::sort(color.begin(), color.end());
    color.erase(std::unique(color.begin(), color.end()), color.end());
  }
}

std::vector<std::size_t> Cluster::counts() const {
  std::vector<std::size_t> c;
  for (const auto& color : points_) c.push_back(color.size());
  return c;
}

std::size_t Cluster::size() const {
  std::size_t n = 0;
  for (const auto& color : points_) n += color.size();
  return n;
}

bool Cluster::contains(std::size_t color, const IntVec& x) const {
  const auto& v = points_.at(color);
  return std::binary_search(v.begin(), v.end(), x);
}

bool Cluster::subset_of(const Cluster& other) const {
  if (other.colors() != colors()) return false;
  for (std::size_t c = 0; c < colors(); ++c)
    if (!std::includes(other.points_[c].begin(), other.points_[c].end(), points_[c].begin(),
                       points_[c].end()))
      return false;
  return true;
}

Cluster Cluster::intersect(const Box& region) const {
  Cluster out(colors(), dim_);
  for (std::size_t c = 0; c < colors(); ++c)
    for (const auto& p : points_[c])
      if (region.contains(p)) out.points_[c].push_back(p);
  return out;
}

Cluster Cluster::translated(const IntVec& t) const {
  Cluster out(colors(), dim_);
  for (std::size_t c = 0; c < colors(); ++c) {
    out.points_[c].reserve(points_[c].size());
    for (const auto& p : points_[c]) out.points_[c].push_back(add(p, t));
  }
  return out;
}

bool Cluster::colors_disjoint() const {
  std::vector<IntVec> all;
  for (const auto& color : points_) all.insert(all.end(), color.begin(), color.end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) == all.end();
}

ColorIndex::ColorIndex(const Cluster& cluster) {
  sets_.resize(cluster.colors());
  for (std::size_t c = 0; c < cluster.colors(); ++c) {
    sets_[c].reserve(cluster[c].size() * 2);
    sets_[c].insert(cluster[c].begin(), cluster[c].end());
  }
}

int ColorIndex::color_of(const IntVec& x) const {
  for (std::size_t c = 0; c < sets_.size(); ++c)
    if (sets_[c].count(x)) return static_cast<int>(c);
  return -1;
}

bool ColorIndex::has(std::size_t color, const IntVec& x) const { return sets_.at(color).count(x) > 0; }

}  // namespace latsub
