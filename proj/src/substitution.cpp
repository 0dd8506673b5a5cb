#include "latsub/substitution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace latsub {

namespace {

std::string vec_str(const IntVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

Eigen::MatrixXd expansion_double(const ExpansionMatrix& q) {
  const auto n = static_cast<Eigen::Index>(q.dim());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      m(r, c) = static_cast<double>(q.entries()(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
  return m;
}

struct Provenance {
  IntVec point;
  std::size_t source_color;
  std::size_t source_index;
  std::size_t digit_index;
};

// Phi applied with optional pruning box (kept points must lie inside `keep`).
Cluster apply_impl(const SubstitutionSystem& sys, const Cluster& cluster,
                   const RealBox* keep) {
  const std::size_t m = sys.color_count();
  std::vector<std::vector<Provenance>> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& src = cluster[j];
    for (std::size_t x = 0; x < src.size(); ++x) {
      const IntVec qx = sys.expansion(src[x]);
      for (std::size_t i = 0; i < m; ++i) {
        const auto& cell = sys.digit_set(i, j);
        for (std::size_t a = 0; a < cell.size(); ++a) {
          IntVec y = add(qx, cell[a]);
          if (keep) {
            bool inside = true;
            for (std::size_t c = 0; c < y.size() && inside; ++c) {
              const double v = static_cast<double>(y[c]);
              inside = v >= keep->lo[c] && v <= keep->hi[c];
            }
            if (!inside) continue;
          }
          out[i].push_back(Provenance{std::move(y), j, x, a});
        }
      }
    }
  }
  std::vector<std::vector<IntVec>> points(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& v = out[i];
    std::sort(v.begin(), v.end(),
              [](const Provenance& a, const Provenance& b) { return a.point < b.point; });
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (v[k].point == v[k - 1].point) {
        auto witness = [&](const Provenance& p) {
          return DisjointnessViolation::Witness{
              p.source_color, cluster[p.source_color][p.source_index],
              sys.digit_set(i, p.source_color)[p.digit_index]};
        };
        throw DisjointnessViolation(i, v[k].point, witness(v[k - 1]), witness(v[k]));
      }
    }
    points[i].reserve(v.size());
    for (auto& p : v) points[i].push_back(std::move(p.point));
  }
  return Cluster(sys.dim(), std::move(points));
}

// Box of lattice points whose descendants after `remaining` further
// applications can still land in `region`.
RealBox ancestry_box(const SubstitutionSystem& sys, const Box& region, int remaining,
                     const RealBox& partial) {
  const std::size_t d = sys.dim();
  const Eigen::MatrixXd qinv = expansion_double(sys.expansion).inverse();
  Eigen::MatrixXd pinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                   static_cast<Eigen::Index>(d));
  for (int k = 0; k < remaining; ++k) pinv = qinv * pinv;
  RealBox box{std::vector<double>(d, std::numeric_limits<double>::infinity()),
              std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  const std::size_t corners = std::size_t{1} << d;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    Eigen::VectorXd corner(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < d; ++c)
      corner(static_cast<Eigen::Index>(c)) =
          static_cast<double>((mask >> c) & 1 ? region.hi[c] : region.lo[c]);
    const Eigen::VectorXd img = pinv * corner;
    for (std::size_t c = 0; c < d; ++c) {
      box.lo[c] = std::min(box.lo[c], img(static_cast<Eigen::Index>(c)));
      box.hi[c] = std::max(box.hi[c], img(static_cast<Eigen::Index>(c)));
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double slack = 1e-6 * (1.0 + std::abs(box.lo[c]) + std::abs(box.hi[c]));
    box.lo[c] = box.lo[c] - partial.hi[c] - slack;
    box.hi[c] = box.hi[c] - partial.lo[c] + slack;
  }
  return box;
}

}  // namespace

IntMatrix substitution_matrix(const SubstitutionSystem& sys) {
  const std::size_t m = sys.color_count();
  IntMatrix s(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) s(i, j) = static_cast<Int>(sys.digit_set(i, j).size());
  return s;
}

PrimitivityResult is_primitive(const IntMatrix& s) {
  const std::size_t m = s.rows();
  if (m == 0 || s.cols() != m) throw DimensionError("is_primitive: square matrix required");
  std::vector<char> pattern(m * m), power(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (s(i, j) < 0) throw Error("is_primitive: negative entry");
      pattern[i * m + j] = s(i, j) > 0;
    }
  power = pattern;
  const std::size_t bound = m * m - 2 * m + 2;
  for (std::size_t l = 1; l <= bound; ++l) {
    if (std::all_of(power.begin(), power.end(), [](char c) { return c != 0; }))
      return {true, static_cast<int>(l)};
    std::vector<char> next(m * m, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) {
        if (!power[i * m + k]) continue;
        for (std::size_t j = 0; j < m; ++j)
          if (pattern[k * m + j]) next[i * m + j] = 1;
      }
    power = std::move(next);
  }
  return {false, 0};
}

PFData pf_data(const IntMatrix& s, const ExpansionMatrix& q) {
  const auto prim = is_primitive(s);
  if (!prim.primitive) throw Error("pf_data: substitution matrix is not primitive");
  const std::size_t m = s.rows();

  auto iterate_vector = [&](bool transpose) {
    std::vector<double> v(m, 1.0 / static_cast<double>(m));
    for (int it = 0; it < 200000; ++it) {
      std::vector<double> w(m, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          w[i] += static_cast<double>(transpose ? s(j, i) : s(i, j)) * v[j];
      double total = 0.0;
      for (double x : w) total += x;
      double change = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        w[i] /= total;
        change = std::max(change, std::abs(w[i] - v[i]));
      }
      v = std::move(w);
      if (change < 1e-15) break;
    }
    return v;
  };

  PFData out;
  out.primitivity_power = prim.power;
  out.right = iterate_vector(false);
  out.left = iterate_vector(true);

  std::vector<double> sv(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) sv[i] += static_cast<double>(s(i, j)) * out.right[j];
  double num = 0.0;
  for (double x : sv) num += x;
  out.eigenvalue = num;  // right vector sums to 1

  double dot = 0.0;
  for (std::size_t i = 0; i < m; ++i) dot += out.left[i] * out.right[i];
  for (double& x : out.left) x /= dot;

  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    residual = std::max(residual, std::abs(sv[i] - out.eigenvalue * out.right[i]));
    double lt = 0.0;
    for (std::size_t j = 0; j < m; ++j) lt += static_cast<double>(s(j, i)) * out.left[j];
    residual = std::max(residual, std::abs(lt - out.eigenvalue * out.left[i]));
  }
  out.residual = residual;
  out.consistent = std::abs(out.eigenvalue - static_cast<double>(q.absdet())) <= 1e-6;
  return out;
}

DisjointnessViolation::DisjointnessViolation(std::size_t color_, IntVec point_, Witness first_,
                                             Witness second_)
    : Error("disjointness violation: color " + std::to_string(color_) + " point " +
            vec_str(point_) + " reached from color " + std::to_string(first_.source_color) +
            " point " + vec_str(first_.source_point) + " digit " + vec_str(first_.digit) +
            " and from color " + std::to_string(second_.source_color) + " point " +
            vec_str(second_.source_point) + " digit " + vec_str(second_.digit)),
      color(color_),
      point(std::move(point_)),
      first(std::move(first_)),
      second(std::move(second_)) {}

Cluster apply(const SubstitutionSystem& sys, const Cluster& cluster) {
  if (cluster.colors() != sys.color_count())
    throw DimensionError("apply: cluster color count differs from system");
  return apply_impl(sys, cluster, nullptr);
}

bool verify_fixed_point(const SubstitutionSystem& sys) {
  try {
    return sys.seed.subset_of(apply(sys, sys.seed));
  } catch (const DisjointnessViolation&) {
    return false;
  }
}

Cluster iterate(const SubstitutionSystem& sys, const Cluster& cluster, int n, std::size_t budget) {
  Cluster current = cluster;
  for (int k = 0; k < n; ++k) {
    std::size_t next_size = 0;
    const auto s = substitution_matrix(sys);
    const auto counts = current.counts();
    for (std::size_t i = 0; i < sys.color_count(); ++i)
      for (std::size_t j = 0; j < sys.color_count(); ++j)
        next_size += static_cast<std::size_t>(s(i, j)) * counts[j];
    if (next_size > budget)
      throw BudgetExceeded("iterate: " + std::to_string(next_size) + " points exceeds budget " +
                           std::to_string(budget));
    current = apply(sys, current);
  }
  return current;
}

Cluster generate_patch(const SubstitutionSystem& sys, int n, const Box& region,
                       std::size_t budget) {
  if (region.dim() != sys.dim()) throw DimensionError("generate_patch: region dimension mismatch");
  const RealBox partial = digit_expansion_box(sys, true);
  Cluster current = sys.seed;
  {
    const RealBox keep = ancestry_box(sys, region, n, partial);
    Cluster pruned(sys.color_count(), sys.dim());
    std::vector<std::vector<IntVec>> pts(sys.color_count());
    for (std::size_t c = 0; c < current.colors(); ++c)
      for (const auto& p : current[c]) {
        bool inside = true;
        for (std::size_t i = 0; i < p.size() && inside; ++i)
          inside = static_cast<double>(p[i]) >= keep.lo[i] && static_cast<double>(p[i]) <= keep.hi[i];
        if (inside) pts[c].push_back(p);
      }
    current = Cluster(sys.dim(), std::move(pts));
  }
  for (int k = 1; k <= n; ++k) {
    const RealBox keep = ancestry_box(sys, region, n - k, partial);
    current = apply_impl(sys, current, &keep);
    if (current.size() > budget)
      throw BudgetExceeded("generate_patch: " + std::to_string(current.size()) +
                           " points exceeds budget " + std::to_string(budget));
  }
  return current.intersect(region);
}

Cluster supertile(const SubstitutionSystem& sys, std::size_t color, int k, std::size_t budget) {
  if (color >= sys.color_count()) throw Error("supertile: color out of range");
  std::vector<std::vector<IntVec>> pts(sys.color_count());
  pts[color].push_back(IntVec(sys.dim(), 0));
  return iterate(sys, Cluster(sys.dim(), std::move(pts)), k, budget);
}

CoveredPatch covering_patch(const SubstitutionSystem& sys, const Box& region, int max_iterations,
                            std::size_t budget) {
  const Int volume = region.volume();
  CoveredPatch result;
  Cluster previous;
  int stable = 0;
  for (int n = 0; n <= max_iterations; ++n) {
    Cluster patch = generate_patch(sys, n, region, budget);
    result.patch = patch;
    result.iterations = n;
    if (static_cast<Int>(patch.size()) >= volume) {
      std::vector<IntVec> all;
      for (const auto& c : patch.points()) all.insert(all.end(), c.begin(), c.end());
      std::sort(all.begin(), all.end());
      all.erase(std::unique(all.begin(), all.end()), all.end());
      if (static_cast<Int>(all.size()) == volume) {
        result.covered = true;
        return result;
      }
    }
    if (n > 0 && patch == previous && patch.size() > 0) {
      if (++stable >= 3) return result;
    } else {
      stable = 0;
    }
    previous = std::move(patch);
  }
  return result;
}

std::string LegalityResult::verdict() const {
  if (!legal) return "NotFoundUpTo(" + std::to_string(kmax) + ")";
  return "Legal(j=" + std::to_string(color) + ", k=" + std::to_string(k) + ", t=" +
         vec_str(translation) + ")";
}

LegalityResult legality_check(const SubstitutionSystem& sys, const Cluster& p, int kmax,
                              std::size_t budget) {
  LegalityResult result;
  result.kmax = kmax;
  result.translation = IntVec(sys.dim(), 0);
  if (p.colors() != sys.color_count()) throw DimensionError("legality_check: color count mismatch");
  if (p.empty()) {
    result.legal = true;
    return result;
  }
  // Anchor on the first point of the sparsest non-empty color.
  std::size_t anchor_color = 0;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t c = 0; c < p.colors(); ++c)
    if (!p[c].empty() && p[c].size() < best) {
      best = p[c].size();
      anchor_color = c;
    }
  const IntVec& anchor = p[anchor_color].front();

  for (int k = 0; k <= kmax; ++k) {
    for (std::size_t j = 0; j < sys.color_count(); ++j) {
      const Cluster tile = supertile(sys, j, k, budget);
      const ColorIndex index(tile);
      for (const auto& s : tile[anchor_color]) {
        const IntVec t = sub(s, anchor);
        bool fits = true;
        for (std::size_t c = 0; c < p.colors() && fits; ++c)
          for (const auto& x : p[c])
            if (!index.has(c, add(x, t))) {
              fits = false;
              break;
            }
        if (fits) {
          result.legal = true;
          result.color = j;
          result.k = k;
          result.translation = t;
          return result;
        }
      }
    }
  }
  return result;
}

LprimeResult compute_lprime(const SubstitutionSystem& sys, int stabilization_window,
                            int max_iterations, std::size_t budget) {
  const std::size_t m = sys.color_count();
  const std::size_t d = sys.dim();
  LprimeResult result;
  std::vector<SubgroupHNF> groups(m, hnf(std::vector<IntVec>{}, d));
  SubgroupHNF total = hnf(std::vector<IntVec>{}, d);
  Cluster current = sys.seed;
  int unchanged = 0;
  for (int k = 0; k <= max_iterations; ++k) {
    if (k > 0) {
      try {
        current = iterate(sys, current, 1, budget);
      } catch (const BudgetExceeded&) {
        break;
      }
    }
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& pts = current[i];
      if (pts.size() < 2) continue;
      std::vector<IntVec> fresh;
      for (std::size_t x = 1; x < pts.size(); ++x) {
        IntVec diff = sub(pts[x], pts[0]);
        if (!groups[i].contains(diff)) {
          fresh.push_back(std::move(diff));
          // Re-canonicalize in batches to keep membership tests meaningful.
          if (fresh.size() >= 8) {
            auto gens = groups[i].int_columns();
            gens.insert(gens.end(), fresh.begin(), fresh.end());
            groups[i] = hnf(gens, d);
            fresh.clear();
            changed = true;
          }
        }
      }
      if (!fresh.empty()) {
        auto gens = groups[i].int_columns();
        gens.insert(gens.end(), fresh.begin(), fresh.end());
        groups[i] = hnf(gens, d);
        changed = true;
      }
    }
    std::vector<IntVec> gens;
    for (const auto& g : groups) {
      auto cols = g.int_columns();
      gens.insert(gens.end(), cols.begin(), cols.end());
    }
    SubgroupHNF next = hnf(gens, d);
    if (!(next == total)) changed = true;
    total = std::move(next);
    result.iterations = k;
    if (changed) {
      unchanged = 0;
    } else if (++unchanged >= stabilization_window && total.full_rank()) {
      result.stabilized = true;
      break;
    }
  }
  result.lprime = total;
  result.per_color = groups;
  if (total.full_rank()) {
    const SubgroupHNF qlp = scaled(total, sys.expansion, 1);
    result.inflation_relation = std::all_of(groups.begin(), groups.end(), [&](const SubgroupHNF& g) {
      return g.contains(qlp);
    });
  }
  if (result.stabilized) result.iterations -= stabilization_window;
  return result;
}

RealBox digit_expansion_box(const SubstitutionSystem& sys, bool partial_sums) {
  const std::size_t d = sys.dim();
  const auto digits = sys.all_digits();
  const Eigen::MatrixXd qinv = expansion_double(sys.expansion).inverse();
  RealBox box{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  Eigen::MatrixXd p = qinv;
  double amax = 0.0;
  for (const auto& a : digits)
    for (Int x : a) amax = std::max(amax, std::abs(static_cast<double>(x)));
  for (int k = 1; k < 100000; ++k) {
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& a : digits) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(d));
      for (std::size_t c = 0; c < d; ++c) v(static_cast<Eigen::Index>(c)) = static_cast<double>(a[c]);
      const Eigen::VectorXd img = p * v;
      for (std::size_t c = 0; c < d; ++c) {
        lo[c] = std::min(lo[c], img(static_cast<Eigen::Index>(c)));
        hi[c] = std::max(hi[c], img(static_cast<Eigen::Index>(c)));
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (partial_sums) {
        lo[c] = std::min(lo[c], 0.0);
        hi[c] = std::max(hi[c], 0.0);
      }
      box.lo[c] += lo[c];
      box.hi[c] += hi[c];
    }
    const double norm = p.cwiseAbs().rowwise().sum().maxCoeff();
    if (norm * amax * static_cast<double>(d) < 1e-13) break;
    p = qinv * p;
  }
  for (std::size_t c = 0; c < d; ++c) {
    box.lo[c] -= 1e-9;
    box.hi[c] += 1e-9;
  }
  return box;
}

}  // namespace latsub
