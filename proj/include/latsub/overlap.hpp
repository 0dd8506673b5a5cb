#pragma once

#include <string>
#include <vector>

#include "latsub/statistics.hpp"
#include "latsub/system.hpp"
#include "latsub/tiles.hpp"

namespace latsub {

/// Overlap class: A_left + displacement against A_right, in lattice
/// coordinates.
struct OverlapClass {
  std::size_t left = 0;
  std::size_t right = 0;
  IntVec displacement;

  bool is_coincidence() const;
  friend bool operator==(const OverlapClass&, const OverlapClass&) = default;
  friend auto operator<=>(const OverlapClass&, const OverlapClass&) = default;
};

struct OverlapEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  bool certain = true;
};

struct OverlapGraph {
  std::vector<OverlapClass> vertices;
  std::vector<OverlapEdge> edges;        // sorted by (from, to)
  std::vector<std::size_t> roots;        // vertex ids
  std::vector<IntVec> shifts;
  bool exact = false;                    // 1-d exact interval tests throughout
  double threshold = 0.0;                // theta for sampled tests
  /// Edges out of a coincidence that land elsewhere (empty for tilings).
  std::vector<OverlapEdge> absorption_violations;

  std::size_t find(const OverlapClass& v) const;  // npos when absent
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline constexpr double kOverlapThreshold = 0.02;

struct OverlapOptions {
  double threshold = kOverlapThreshold;
  std::size_t max_vertices = 200'000;
};

/// Closure of the edge rule (i, j, z) -> (k, l, Qz + a - b), a in D_ki,
/// b in D_lj, from the classes realized in a patch by the given shifts.
/// Throws when an attractor has not converged or a shift is not a
/// same-color difference in the patch.
OverlapGraph build_overlap_graph(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors,
                                 const std::vector<IntVec>& shifts, const OverlapOptions& options = {});

/// Shifts used when none are given: a generating set of L' made of the
/// shortest same-color differences (the HNF basis itself need not lie in
/// any Lambda_i - Lambda_i).
std::vector<IntVec> default_shifts(const SubstitutionSystem& sys);

enum class ReachKind { AllReach, Stuck };
std::string to_string(ReachKind k);

struct ReachVerdict {
  ReachKind kind = ReachKind::AllReach;
  std::vector<std::size_t> stuck;  // vertices with no path to a coincidence
};

struct Reachability {
  ReachVerdict optimistic;   // uncertain edges included
  ReachVerdict pessimistic;  // certain edges only
  bool agree = true;
  bool exact = false;
  /// The verdict when both agree.
  ReachKind kind() const { return pessimistic.kind; }
};

Reachability coincidence_reachability(const OverlapGraph& g);

struct OverlapDensityRow {
  IntVec shift;
  std::vector<double> complement;  // dens(Lambda xor (Q^n x + Lambda)) per n
  RateKind density = RateKind::Decaying;
  ReachKind graph = ReachKind::AllReach;
  bool graph_agree = true;
  bool consistent = true;  // Decaying iff AllReach
};

/// One row per shift: density series on F_window against the graph verdict
/// for that shift alone.
std::vector<OverlapDensityRow> overlap_density_link(const SubstitutionSystem& sys,
                                                    const std::vector<TileAttractor>& attractors,
                                                    const std::vector<IntVec>& shifts, int window_n, int max_n,
                                                    std::size_t budget = kDefaultPointBudget);

/// Edge-list text: "v id left right z... coincidence root" lines, then
/// "e from to certain|uncertain".
std::string dump_edge_list(const SubstitutionSystem& sys, const OverlapGraph& g);

}  // namespace latsub
