#include "latsub/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "latsub/substitution.hpp"

namespace latsub {

namespace {

struct Hull {
  std::vector<double> lo, hi;
};

// Interior-overlap oracle for A_k + z against A_l, memoized.
class OverlapTester {
 public:
  OverlapTester(const std::vector<TileAttractor>& at, double threshold) : at_(at), threshold_(threshold) {
    exact_ = !at.empty() && at[0].dim() == 1 &&
             std::all_of(at.begin(), at.end(), [](const TileAttractor& a) { return a.exact_interval.has_value(); });
    for (const auto& a : at) {
      Hull h;
      const std::size_t d = a.dim();
      if (exact_) {
        h.lo = {a.exact_interval->first.convert_to<double>()};
        h.hi = {a.exact_interval->second.convert_to<double>()};
      } else {
        h.lo.assign(d, 1e300);
        h.hi.assign(d, -1e300);
        a.for_each_sample([&](const IntVec& p) {
          for (std::size_t c = 0; c < d; ++c) {
            h.lo[c] = std::min(h.lo[c], static_cast<double>(p[c]) * a.cell_size());
            h.hi[c] = std::max(h.hi[c], static_cast<double>(p[c] + 1) * a.cell_size());
          }
        });
      }
      hulls_.push_back(h);
    }
  }

  bool exact() const { return exact_; }
  const Hull& hull(std::size_t i) const { return hulls_[i]; }

  enum class Result { None, Uncertain, Certain };

  Result test(std::size_t k, const IntVec& z, std::size_t l) {
    const auto key = std::make_tuple(k, l, z);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const Result r = compute(k, z, l);
    memo_.emplace(key, r);
    return r;
  }

  // Integer displacements whose hulls can meet.
  Box candidates(std::size_t k, std::size_t l) const {
    const std::size_t d = hulls_[k].lo.size();
    Box b{IntVec(d), IntVec(d)};
    for (std::size_t c = 0; c < d; ++c) {
      b.lo[c] = static_cast<Int>(std::ceil(hulls_[l].lo[c] - hulls_[k].hi[c]));
      b.hi[c] = static_cast<Int>(std::floor(hulls_[l].hi[c] - hulls_[k].lo[c]));
    }
    return b;
  }

 private:
  Result compute(std::size_t k, const IntVec& z, std::size_t l) const {
    const std::size_t d = z.size();
    for (std::size_t c = 0; c < d; ++c) {
      const double zc = static_cast<double>(z[c]);
      if (hulls_[k].lo[c] + zc >= hulls_[l].hi[c] || hulls_[l].lo[c] >= hulls_[k].hi[c] + zc) return Result::None;
    }
    if (exact_) {
      const Rational zk(z[0]);
      const Rational lo = std::max(Rational(at_[k].exact_interval->first + zk), at_[l].exact_interval->first);
      const Rational hi = std::min(Rational(at_[k].exact_interval->second + zk), at_[l].exact_interval->second);
      return lo < hi ? Result::Certain : Result::None;
    }
    const TileAttractor& a = at_[k];
    const TileAttractor& b = at_[l];
    IntVec shift(d);
    for (std::size_t c = 0; c < d; ++c) shift[c] = z[c] * a.subdivisions;
    std::size_t shared = 0;
    a.for_each_sample([&](const IntVec& p) {
      IntVec q = p;
      for (std::size_t c = 0; c < d; ++c) q[c] += shift[c];
      if (b.contains(q)) ++shared;
    });
    const double base = static_cast<double>(std::min(a.count, b.count));
    const double frac = base > 0 ? static_cast<double>(shared) / base : 0.0;
    if (frac > threshold_) return Result::Certain;
    if (frac >= threshold_ / 4) return Result::Uncertain;
    return Result::None;
  }

  const std::vector<TileAttractor>& at_;
  double threshold_;
  bool exact_ = false;
  std::vector<Hull> hulls_;
  std::map<std::tuple<std::size_t, std::size_t, IntVec>, Result> memo_;
};

Box root_box(std::size_t dim) { return dim == 1 ? Box{{0}, {128}} : Box::cube(dim, 0, 24); }

ReachVerdict reach(const OverlapGraph& g, bool include_uncertain) {
  const std::size_t n = g.vertices.size();
  std::vector<std::vector<std::size_t>> reverse(n);
  for (const auto& e : g.edges)
    if (e.certain || include_uncertain) reverse[e.to].push_back(e.from);
  std::vector<char> good(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t v = 0; v < n; ++v)
    if (g.vertices[v].is_coincidence()) {
      good[v] = 1;
      queue.push_back(v);
    }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t u : reverse[v])
      if (!good[u]) {
        good[u] = 1;
        queue.push_back(u);
      }
  }
  ReachVerdict out;
  for (std::size_t v = 0; v < n; ++v)
    if (!good[v]) out.stuck.push_back(v);
  out.kind = out.stuck.empty() ? ReachKind::AllReach : ReachKind::Stuck;
  return out;
}

}  // namespace

bool OverlapClass::is_coincidence() const {
  return left == right && std::all_of(displacement.begin(), displacement.end(), [](Int x) { return x == 0; });
}

std::size_t OverlapGraph::find(const OverlapClass& v) const {
  const auto it = std::find(vertices.begin(), vertices.end(), v);
  return it == vertices.end() ? npos : static_cast<std::size_t>(it - vertices.begin());
}

std::vector<IntVec> default_shifts(const SubstitutionSystem& sys) {
  const std::size_t d = sys.dim();
  const SubgroupHNF target = compute_lprime(sys).lprime;
  const Box box = root_box(d);
  Box wide = box;
  for (std::size_t c = 0; c < d; ++c) {
    wide.lo[c] -= 16;
    wide.hi[c] += 16;
  }
  const ColorField field = ColorField::covering(sys, wide);
  // Same-color differences, shortest first, one of each +-x.
  std::vector<IntVec> diffs;
  Box::cube(d, -16, 16).for_each_point([&](const IntVec& x) {
    const auto lead = std::find_if(x.begin(), x.end(), [](Int v) { return v != 0; });
    if (lead == x.end() || *lead < 0) return;
    bool in_xi = false;
    box.for_each_point([&](const IntVec& u) {
      if (!in_xi && (field.at(u) & field.at(add(u, x))) != 0) in_xi = true;
    });
    if (in_xi) diffs.push_back(x);
  });
  auto norm = [](const IntVec& x) {
    Int n = 0;
    for (Int v : x) n = std::max(n, v < 0 ? -v : v);
    return n;
  };
  std::stable_sort(diffs.begin(), diffs.end(), [&](const IntVec& a, const IntVec& b) { return norm(a) < norm(b); });
  std::vector<IntVec> chosen;
  SubgroupHNF span = hnf(chosen, d);
  for (const auto& x : diffs) {
    if (span == target) break;
    if (span.contains(x)) continue;
    chosen.push_back(x);
    span = hnf(chosen, d);
  }
  if (!(span == target)) throw Error("default_shifts: same-color differences do not generate L'");
  return chosen;
}

OverlapGraph build_overlap_graph(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors,
                                 const std::vector<IntVec>& shifts, const OverlapOptions& options) {
  const std::size_t m = sys.color_count();
  const std::size_t d = sys.dim();
  if (attractors.size() != m) throw DimensionError("build_overlap_graph: one attractor per color required");
  for (const auto& a : attractors)
    if (!a.converged())
      throw Error("build_overlap_graph: attractor " + std::to_string(a.color) + " has not converged");
  for (const auto& x : shifts)
    if (x.size() != d) throw DimensionError("build_overlap_graph: shift dimension");

  OverlapTester tester(attractors, options.threshold);
  OverlapGraph g;
  g.shifts = shifts;
  g.exact = tester.exact();
  g.threshold = options.threshold;
  std::map<OverlapClass, std::size_t> ids;
  std::deque<std::size_t> queue;
  auto add_vertex = [&](const OverlapClass& v) {
    auto [it, fresh] = ids.emplace(v, g.vertices.size());
    if (fresh) {
      if (g.vertices.size() >= options.max_vertices) throw BudgetExceeded("build_overlap_graph: vertex budget");
      g.vertices.push_back(v);
      queue.push_back(it->second);
    }
    return it->second;
  };

  // Roots: classes realized in a patch by pairs u in Lambda_i, u + x - z in
  // Lambda_j, with overlapping interiors.
  const Box box = root_box(d);
  Box wide = box;
  for (std::size_t c = 0; c < d; ++c) {
    wide.lo[c] -= box.hi[c] - box.lo[c];
    wide.hi[c] += box.hi[c] - box.lo[c];
  }
  const ColorField field = ColorField::covering(sys, wide);
  std::set<std::size_t> roots;
  for (const auto& x : shifts) {
    bool in_xi = false;
    box.for_each_point([&](const IntVec& u) {
      if (!in_xi && (field.at(u) & field.at(add(u, x))) != 0) in_xi = true;
    });
    if (!in_xi) throw Error("build_overlap_graph: shift is not a same-color difference in the patch");
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const Box cand = tester.candidates(i, j);
        cand.for_each_point([&](const IntVec& z) {
          if (tester.test(i, z, j) == OverlapTester::Result::None) return;
          const IntVec offset = sub(x, z);
          bool realized = false;
          box.for_each_point([&](const IntVec& u) {
            if (realized || !(field.at(u) >> i & 1U)) return;
            if (field.at(add(u, offset)) >> j & 1U) realized = true;
          });
          if (realized) roots.insert(add_vertex({i, j, z}));
        });
      }
  }
  g.roots.assign(roots.begin(), roots.end());

  std::map<std::pair<std::size_t, std::size_t>, bool> edges;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    const OverlapClass cur = g.vertices[v];
    const IntVec qz = sys.expansion(cur.displacement);
    for (std::size_t k = 0; k < m; ++k)
      for (const auto& a : sys.digit_set(k, cur.left))
        for (std::size_t l = 0; l < m; ++l)
          for (const auto& b : sys.digit_set(l, cur.right)) {
            IntVec z(d);
            for (std::size_t c = 0; c < d; ++c) z[c] = qz[c] + a[c] - b[c];
            const auto r = tester.test(k, z, l);
            if (r == OverlapTester::Result::None) continue;
            const std::size_t w = add_vertex({k, l, z});
            bool& certain = edges.try_emplace({v, w}, false).first->second;
            certain = certain || r == OverlapTester::Result::Certain;
          }
  }
  for (const auto& [key, certain] : edges) {
    g.edges.push_back({key.first, key.second, certain});
    if (g.vertices[key.first].is_coincidence() && !g.vertices[key.second].is_coincidence())
      g.absorption_violations.push_back(g.edges.back());
  }
  return g;
}

std::string to_string(ReachKind k) { return k == ReachKind::AllReach ? "AllReach" : "Stuck"; }

Reachability coincidence_reachability(const OverlapGraph& g) {
  Reachability out;
  out.optimistic = reach(g, true);
  out.pessimistic = reach(g, false);
  out.agree = out.optimistic.kind == out.pessimistic.kind;
  out.exact = g.exact;
  return out;
}

std::vector<OverlapDensityRow> overlap_density_link(const SubstitutionSystem& sys,
                                                    const std::vector<TileAttractor>& attractors,
                                                    const std::vector<IntVec>& shifts, int window_n, int max_n,
                                                    std::size_t budget) {
  const auto lprime = compute_lprime(sys, 2, 40, budget).lprime;
  std::vector<OverlapDensityRow> rows;
  for (const auto& x : shifts) {
    OverlapDensityRow row;
    row.shift = x;
    const auto series = density_symdiff_series(sys, lprime, x, max_n, window_n, budget);
    row.complement = series.values();
    row.density = rate_fit(series).kind;
    const auto r = coincidence_reachability(build_overlap_graph(sys, attractors, {x}));
    row.graph = r.kind();
    row.graph_agree = r.agree;
    row.consistent = (row.density == RateKind::Decaying) == (row.graph == ReachKind::AllReach);
    rows.push_back(row);
  }
  return rows;
}

std::string dump_edge_list(const SubstitutionSystem& sys, const OverlapGraph& g) {
  std::ostringstream out;
  out << "# overlap graph: " << sys.name << "\n";
  out << "# v id left right displacement... coincidence root\n";
  out << "# e from to certain|uncertain\n";
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const auto& c = g.vertices[v];
    out << "v " << v << " " << sys.colors[c.left] << " " << sys.colors[c.right];
    for (Int z : c.displacement) out << " " << z;
    out << " " << (c.is_coincidence() ? 1 : 0) << " "
        << (std::binary_search(g.roots.begin(), g.roots.end(), v) ? 1 : 0) << "\n";
  }
  for (const auto& e : g.edges) out << "e " << e.from << " " << e.to << " " << (e.certain ? "certain" : "uncertain") << "\n";
  return out.str();
}

}  // namespace latsub
