#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latsub/lattice.hpp"
#include "latsub/substitution.hpp"
#include "latsub/system.hpp"

namespace latsub {

/// Everything the symbolic coset arithmetic needs from a system: L' and one
/// point y_j per color, so that Lambda_j lies in y_j + L'.
struct CoincidenceContext {
  SubgroupHNF lprime;
  std::vector<IntVec> color_reps;
  BigInt lattice_index;         // |L / L'|
  bool lprime_stabilized = false;
};

/// Computes L' and representatives from iterates of the seed.
CoincidenceContext coincidence_context(const SubstitutionSystem& sys,
                                       std::size_t budget = kDefaultPointBudget);

inline constexpr std::size_t kDefaultEntryBudget = 4'000'000;

/// x -> Q^M x + translation applied to color `source`, landing in every row
/// listed in `rows`. A valid system lists one row; a map listed in several
/// rows comes from a digit duplicated across rows.
struct CompositeMap {
  std::size_t source = 0;
  IntVec translation;
  std::vector<std::size_t> rows;
};

struct ResidueClass {
  Coset coset;                     // level M
  std::vector<std::size_t> maps;   // indices into ResidueClassTable::maps
  std::vector<std::size_t> rows;   // union of the rows of those maps
};

enum class Membership { In, Out, Boundary };
std::string to_string(Membership m);

/// Level-M classes of the composite maps of Phi^M, keyed by the coset of
/// Q^M L' inside L that each map's image lies in.
class ResidueClassTable {
 public:
  int level = 0;
  BigInt class_count;                // |L / Q^M L'|
  std::size_t entry_count = 0;       // (row, map) pairs, i.e. sum of S^M
  std::vector<CompositeMap> maps;    // sorted by (source, translation)
  std::vector<ResidueClass> classes; // sorted by coset, only classes hit

  /// True when every coset of Q^M L' in L is hit by some map.
  bool covers_all() const { return BigInt(classes.size()) == class_count; }
  const ResidueClass* find(const Coset& c) const;
  /// In: every map of the class lands in `color`; Out: none does.
  Membership membership(const ResidueClass& c, std::size_t color) const;
  /// Colors whose row contains the whole class.
  std::vector<std::size_t> single_rows(const ResidueClass& c) const;
};

ResidueClassTable residue_table(const SubstitutionSystem& sys, const CoincidenceContext& ctx,
                                int level, std::size_t budget = kDefaultEntryBudget);
ResidueClassTable residue_table(const SubstitutionSystem& sys, int level,
                                std::size_t budget = kDefaultEntryBudget);

struct CoincidenceWitness {
  Coset coset;
  std::size_t row = 0;

  friend bool operator==(const CoincidenceWitness&, const CoincidenceWitness&) = default;
};

struct CoincidenceReport {
  bool found = false;
  int level = 0;                          // first M with a one-row class
  std::vector<CoincidenceWitness> witnesses;
  int search_bound = 0;                   // M_max
  bool lattice_covered = false;           // L = union of Lambda_i on a test box
  std::vector<std::size_t> classes_per_level;
};

inline constexpr int kDefaultMaxLevel = 8;

/// Scans M = 1..max_level. found = false only means none up to the bound.
CoincidenceReport find_modular_coincidence(const SubstitutionSystem& sys,
                                           int max_level = kDefaultMaxLevel,
                                           std::size_t budget = kDefaultEntryBudget);
CoincidenceReport find_modular_coincidence(const SubstitutionSystem& sys,
                                           const CoincidenceContext& ctx, int max_level,
                                           std::size_t budget = kDefaultEntryBudget);

/// Coset classification of one window at a fixed depth. Cosets not listed
/// are hit by no map and count as Out.
struct WindowCosetTree {
  std::size_t color = 0;
  int depth = 0;
  std::vector<std::pair<Coset, Membership>> classification;
  std::size_t in_count = 0;
  std::size_t boundary_count = 0;
  BigInt class_count;
  Rational measure_in;
  Rational measure_boundary;
};

WindowCosetTree window_tree(const ResidueClassTable& table, std::size_t color);
WindowCosetTree window_tree(const SubstitutionSystem& sys, std::size_t color, int depth);

struct WindowMeasures {
  int depth = 0;
  std::vector<Rational> inner;   // measure_in
  std::vector<Rational> outer;   // measure_in + measure_boundary
  double residual = 0.0;         // max_i |w_i - (1/q)(S w)_i| on the outer estimate
  double inner_residual = 0.0;   // same on the inner estimate
};

WindowMeasures window_measures(const SubstitutionSystem& sys, const ResidueClassTable& table);
WindowMeasures window_measures(const SubstitutionSystem& sys, int depth);

struct DisjointnessReport {
  bool disjoint = true;
  struct Violation {
    Coset coset;
    std::size_t first = 0;
    std::size_t second = 0;
  };
  std::vector<Violation> violations;
};

/// No coset is In for two colors.
DisjointnessReport interior_disjointness(const ResidueClassTable& table,
                                         std::size_t colors);
DisjointnessReport interior_disjointness(const SubstitutionSystem& sys, int depth);

struct WindowSummary {
  std::size_t color = 0;
  /// Cosets In at their level whose parent coset is not In; their union is
  /// the In part of the window at the report depth.
  std::vector<Coset> in_cosets;
  Rational inner;
  Rational outer;
};

struct ModelSetReport {
  bool coincidence = false;
  int coincidence_level = 0;
  int search_bound = 0;
  std::vector<CoincidenceWitness> witnesses;
  int depth = 0;
  BigInt lattice_index;
  std::string physical_space;
  std::string internal_group;
  std::string embedding;
  std::vector<WindowSummary> windows;
  std::vector<Rational> boundary_by_depth;  // total boundary measure, depth 1..depth
  bool interior_disjoint = false;
  std::string verdict;
};

ModelSetReport model_set_report(const SubstitutionSystem& sys, int depth,
                                int max_level = kDefaultMaxLevel,
                                std::size_t budget = kDefaultEntryBudget);

}  // namespace latsub
