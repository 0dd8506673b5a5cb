#include "latsub/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "latsub/parallel.hpp"

namespace latsub {

namespace {

struct Chain {
  std::size_t source;
  std::size_t row;
  IntVec translation;
};

// Number of (row, map) pairs at `level`: sum of the entries of S^level.
BigInt chain_count(const IntMatrix& s, int level) {
  const std::size_t m = s.rows();
  BigInt total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<BigInt> v(m, 0);
    v[j] = 1;
    for (int k = 0; k < level; ++k) {
      std::vector<BigInt> w(m, 0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < m; ++c) w[i] += BigInt(s(i, c)) * v[c];
      v = std::move(w);
    }
    for (const auto& x : v) total += x;
  }
  return total;
}

std::vector<Chain> enumerate_chains(const SubstitutionSystem& sys, int level) {
  const std::size_t m = sys.color_count();
  std::vector<Chain> current;
  for (std::size_t j = 0; j < m; ++j) current.push_back({j, j, IntVec(sys.dim(), 0)});
  for (int k = 0; k < level; ++k) {
    std::vector<Chain> next;
    for (const auto& c : current) {
      const IntVec qt = sys.expansion(c.translation);
      for (std::size_t i = 0; i < m; ++i)
        for (const auto& a : sys.digit_set(i, c.row)) next.push_back({c.source, i, add(qt, a)});
    }
    current = std::move(next);
  }
  return current;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace

CoincidenceContext coincidence_context(const SubstitutionSystem& sys, std::size_t budget) {
  const auto lp = compute_lprime(sys, 2, 40, budget);
  if (!lp.lprime.full_rank()) throw Error("L' is not of full rank; coset arithmetic unavailable");
  CoincidenceContext ctx;
  ctx.lprime = lp.lprime;
  ctx.lprime_stabilized = lp.stabilized;
  ctx.lattice_index = lp.lprime.index();

  const std::size_t m = sys.color_count();
  ctx.color_reps.assign(m, IntVec());
  Cluster current = sys.seed;
  for (int k = 0; k <= 64; ++k) {
    bool complete = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (ctx.color_reps[j].empty() && !current[j].empty()) ctx.color_reps[j] = current[j].front();
      complete = complete && !ctx.color_reps[j].empty();
    }
    if (complete) return ctx;
    current = iterate(sys, current, 1, budget);
  }
  throw Error("some color never occurs in the iterates of the seed");
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::In: return "IN";
    case Membership::Out: return "OUT";
    case Membership::Boundary: return "BOUNDARY";
  }
  return "?";
}

const ResidueClass* ResidueClassTable::find(const Coset& c) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), c,
                             [](const ResidueClass& rc, const Coset& key) { return rc.coset < key; });
  if (it == classes.end() || !(it->coset == c)) return nullptr;
  return &*it;
}

Membership ResidueClassTable::membership(const ResidueClass& c, std::size_t color) const {
  std::size_t hits = 0;
  for (std::size_t idx : c.maps) {
    const auto& rows = maps[idx].rows;
    if (std::binary_search(rows.begin(), rows.end(), color)) ++hits;
  }
  if (hits == 0) return Membership::Out;
  return hits == c.maps.size() ? Membership::In : Membership::Boundary;
}

std::vector<std::size_t> ResidueClassTable::single_rows(const ResidueClass& c) const {
  std::vector<std::size_t> out;
  for (std::size_t row : c.rows)
    if (membership(c, row) == Membership::In) out.push_back(row);
  return out;
}

ResidueClassTable residue_table(const SubstitutionSystem& sys, const CoincidenceContext& ctx,
                                int level, std::size_t budget) {
  if (level < 0) throw Error("residue_table: level must be non-negative");
  const BigInt chains = chain_count(substitution_matrix(sys), level);
  if (chains > budget)
    throw BudgetExceeded("residue_table: " + chains.str() + " composite maps at level " +
                         std::to_string(level) + " exceed budget " + std::to_string(budget));

  const CosetSpace space(ctx.lprime, sys.expansion, level);
  ResidueClassTable table;
  table.level = level;
  table.class_count = space.index(level);

  auto all = enumerate_chains(sys, level);
  table.entry_count = all.size();
  std::sort(all.begin(), all.end(), [](const Chain& a, const Chain& b) {
    return std::tie(a.source, a.translation, a.row) < std::tie(b.source, b.translation, b.row);
  });
  for (std::size_t k = 0; k < all.size();) {
    CompositeMap map{all[k].source, all[k].translation, {}};
    while (k < all.size() && all[k].source == map.source && all[k].translation == map.translation) {
      if (map.rows.empty() || map.rows.back() != all[k].row) map.rows.push_back(all[k].row);
      ++k;
    }
    table.maps.push_back(std::move(map));
  }

  // Q^M y_j, then the class of each map's image.
  std::vector<IntVec> shifted(sys.color_count());
  for (std::size_t j = 0; j < sys.color_count(); ++j) {
    IntVec y = ctx.color_reps.at(j);
    for (int k = 0; k < level; ++k) y = sys.expansion(y);
    shifted[j] = std::move(y);
  }
  std::vector<Coset> cosets(table.maps.size());
  parallel_for(table.maps.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto& map = table.maps[k];
      cosets[k] = space.reduce(add(shifted[map.source], map.translation), level);
    }
  });

  std::vector<std::size_t> order(table.maps.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cosets[a] < cosets[b]; });
  for (std::size_t k = 0; k < order.size();) {
    ResidueClass rc{cosets[order[k]], {}, {}};
    while (k < order.size() && cosets[order[k]] == rc.coset) {
      rc.maps.push_back(order[k]);
      for (std::size_t row : table.maps[order[k]].rows) rc.rows.push_back(row);
      ++k;
    }
    std::sort(rc.rows.begin(), rc.rows.end());
    rc.rows.erase(std::unique(rc.rows.begin(), rc.rows.end()), rc.rows.end());
    table.classes.push_back(std::move(rc));
  }
  return table;
}

ResidueClassTable residue_table(const SubstitutionSystem& sys, int level, std::size_t budget) {
  return residue_table(sys, coincidence_context(sys), level, budget);
}

CoincidenceReport find_modular_coincidence(const SubstitutionSystem& sys,
                                           const CoincidenceContext& ctx, int max_level,
                                           std::size_t budget) {
  CoincidenceReport report;
  report.search_bound = max_level;
  report.lattice_covered = covering_patch(sys, Box::cube(sys.dim(), 0, 16)).covered;
  for (int level = 1; level <= max_level; ++level) {
    const auto table = residue_table(sys, ctx, level, budget);
    report.classes_per_level.push_back(table.classes.size());
    for (const auto& rc : table.classes)
      for (std::size_t row : table.single_rows(rc)) report.witnesses.push_back({rc.coset, row});
    if (!report.witnesses.empty()) {
      report.found = true;
      report.level = level;
      return report;
    }
  }
  return report;
}

CoincidenceReport find_modular_coincidence(const SubstitutionSystem& sys, int max_level,
                                           std::size_t budget) {
  return find_modular_coincidence(sys, coincidence_context(sys), max_level, budget);
}

WindowCosetTree window_tree(const ResidueClassTable& table, std::size_t color) {
  WindowCosetTree tree;
  tree.color = color;
  tree.depth = table.level;
  tree.class_count = table.class_count;
  for (const auto& rc : table.classes) {
    const auto mem = table.membership(rc, color);
    tree.classification.emplace_back(rc.coset, mem);
    if (mem == Membership::In) ++tree.in_count;
    if (mem == Membership::Boundary) ++tree.boundary_count;
  }
  tree.measure_in = Rational(BigInt(tree.in_count), table.class_count);
  tree.measure_boundary = Rational(BigInt(tree.boundary_count), table.class_count);
  return tree;
}

WindowCosetTree window_tree(const SubstitutionSystem& sys, std::size_t color, int depth) {
  if (color >= sys.color_count()) throw Error("window_tree: color out of range");
  return window_tree(residue_table(sys, depth), color);
}

WindowMeasures window_measures(const SubstitutionSystem& sys, const ResidueClassTable& table) {
  const std::size_t m = sys.color_count();
  WindowMeasures out;
  out.depth = table.level;
  for (std::size_t i = 0; i < m; ++i) {
    const auto tree = window_tree(table, i);
    out.inner.push_back(tree.measure_in);
    out.outer.push_back(tree.measure_in + tree.measure_boundary);
  }
  const auto s = substitution_matrix(sys);
  const double q = static_cast<double>(sys.expansion.absdet());
  auto residual = [&](const std::vector<Rational>& w) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double sw = 0.0;
      for (std::size_t j = 0; j < m; ++j) sw += static_cast<double>(s(i, j)) * to_double(w[j]);
      worst = std::max(worst, std::abs(to_double(w[i]) - sw / q));
    }
    return worst;
  };
  out.residual = residual(out.outer);
  out.inner_residual = residual(out.inner);
  return out;
}

WindowMeasures window_measures(const SubstitutionSystem& sys, int depth) {
  return window_measures(sys, residue_table(sys, depth));
}

DisjointnessReport interior_disjointness(const ResidueClassTable& table, std::size_t colors) {
  DisjointnessReport report;
  for (const auto& rc : table.classes) {
    const auto rows = table.single_rows(rc);
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = a + 1; b < rows.size(); ++b)
        if (rows[a] < colors && rows[b] < colors)
          report.violations.push_back({rc.coset, rows[a], rows[b]});
  }
  report.disjoint = report.violations.empty();
  return report;
}

DisjointnessReport interior_disjointness(const SubstitutionSystem& sys, int depth) {
  return interior_disjointness(residue_table(sys, depth), sys.color_count());
}

ModelSetReport model_set_report(const SubstitutionSystem& sys, int depth, int max_level,
                                std::size_t budget) {
  const auto ctx = coincidence_context(sys);
  const auto found = find_modular_coincidence(sys, ctx, max_level, budget);
  const std::size_t m = sys.color_count();
  const std::size_t d = sys.dim();

  ModelSetReport report;
  report.coincidence = found.found;
  report.coincidence_level = found.level;
  report.search_bound = found.search_bound;
  report.witnesses = found.witnesses;
  report.depth = depth;
  report.lattice_index = ctx.lattice_index;
  report.physical_space = "R^" + std::to_string(d);
  report.internal_group = "inverse limit of L/Q^k L' for k = 0.." + std::to_string(depth) +
                          ", |L/L'| = " + ctx.lattice_index.str() +
                          ", [L':QL'] = " + std::to_string(sys.expansion.absdet());
  report.embedding = "t -> (t, t) for t in L";

  const CosetSpace space(ctx.lprime, sys.expansion, depth);
  std::vector<ResidueClassTable> tables;
  for (int k = 0; k <= depth; ++k) tables.push_back(residue_table(sys, ctx, k, budget));

  report.windows.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& w = report.windows[i];
    w.color = i;
    for (int k = 0; k <= depth; ++k) {
      const auto& table = tables[static_cast<std::size_t>(k)];
      for (const auto& rc : table.classes) {
        if (table.membership(rc, i) != Membership::In) continue;
        bool parent_in = false;
        if (k > 0) {
          const auto& up = tables[static_cast<std::size_t>(k - 1)];
          const auto* p = up.find(space.reduce(rc.coset.rep, k - 1));
          parent_in = p && up.membership(*p, i) == Membership::In;
        }
        if (!parent_in) w.in_cosets.push_back(rc.coset);
      }
    }
    const auto tree = window_tree(tables.back(), i);
    w.inner = tree.measure_in;
    w.outer = tree.measure_in + tree.measure_boundary;
  }
  for (int k = 1; k <= depth; ++k) {
    Rational total = 0;
    for (std::size_t i = 0; i < m; ++i) total += window_tree(tables[static_cast<std::size_t>(k)], i).measure_boundary;
    report.boundary_by_depth.push_back(total);
  }
  report.interior_disjoint = interior_disjointness(tables.back(), m).disjoint;

  if (found.found) {
    report.verdict = "pure point; regular model set";
  } else {
    report.verdict = "no modular coincidence found up to M_max=" + std::to_string(max_level) +
                     "; model set structure unverified";
  }
  if (!found.lattice_covered) report.verdict += " (L is not the union of the colors on the test box)";
  return report;
}

}  // namespace latsub
