#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latsub/cluster.hpp"
#include "latsub/system.hpp"

namespace latsub {

/// S_ij = |D_ij|.
IntMatrix substitution_matrix(const SubstitutionSystem& sys);

struct PrimitivityResult {
  bool primitive = false;
  int power = 0;  // least l with S^l > 0 when primitive
};

/// Searches l up to the Wielandt bound m^2 - 2m + 2.
PrimitivityResult is_primitive(const IntMatrix& s);

struct PFData {
  double eigenvalue = 0.0;
  std::vector<double> left;   // tile volumes up to scale; left . right = 1
  std::vector<double> right;  // relative frequencies; sums to 1
  double residual = 0.0;
  bool consistent = false;    // |eigenvalue - |det Q|| <= 1e-6
  int primitivity_power = 0;
};

/// Perron-Frobenius data by power iteration. Throws on non-primitive input.
PFData pf_data(const IntMatrix& s, const ExpansionMatrix& q);

class DisjointnessViolation : public Error {
 public:
  struct Witness {
    std::size_t source_color;
    IntVec source_point;
    IntVec digit;
  };
  DisjointnessViolation(std::size_t color, IntVec point, Witness first, Witness second);

  std::size_t color;
  IntVec point;
  Witness first;
  Witness second;
};

/// One application of Phi. Throws DisjointnessViolation when two maps send
/// points onto the same point of one color.
Cluster apply(const SubstitutionSystem& sys, const Cluster& cluster);

/// seed is contained color-wise in Phi(seed).
bool verify_fixed_point(const SubstitutionSystem& sys);

inline constexpr std::size_t kDefaultPointBudget = 6'000'000;

/// Phi^n(cluster); throws BudgetExceeded past `budget` points.
Cluster iterate(const SubstitutionSystem& sys, const Cluster& cluster, int n,
                std::size_t budget = kDefaultPointBudget);

/// Phi^n(seed) intersected with region. Branches whose descendants cannot
/// reach the region are pruned, so only the region's ancestry is expanded.
Cluster generate_patch(const SubstitutionSystem& sys, int n, const Box& region,
                       std::size_t budget = kDefaultPointBudget);

/// Phi^k applied to a single point of `color` at the origin.
Cluster supertile(const SubstitutionSystem& sys, std::size_t color, int k,
                  std::size_t budget = kDefaultPointBudget);

struct CoveredPatch {
  Cluster patch;       // Lambda intersected with the region
  int iterations = 0;  // n used
  bool covered = false;
};

/// Raises n until every lattice point of the region carries a color, or until
/// the region content is unchanged for `stable_rounds` rounds when the system
/// does not cover its lattice. Used where L = union of Lambda_i is expected.
CoveredPatch covering_patch(const SubstitutionSystem& sys, const Box& region,
                            int max_iterations = 64, std::size_t budget = kDefaultPointBudget);

struct LegalityResult {
  bool legal = false;
  std::size_t color = 0;  // j of the witness supertile
  int k = 0;
  IntVec translation;     // t with t + P inside Phi^k(origin of color j)
  int kmax = 0;

  std::string verdict() const;
};

/// Searches k = 0..kmax. A negative result is inconclusive, not a disproof.
LegalityResult legality_check(const SubstitutionSystem& sys, const Cluster& p, int kmax,
                              std::size_t budget = kDefaultPointBudget);

struct LprimeResult {
  SubgroupHNF lprime;
  std::vector<SubgroupHNF> per_color;  // L_i = <Lambda_i - Lambda_i>
  int iterations = 0;                  // k at which the group stabilized
  bool stabilized = false;             // false: provisional
  bool inflation_relation = false;     // Q L' contained in every L_i
};

/// L' from same-color differences of Phi^k(seed), accepted once unchanged for
/// `stabilization_window` consecutive iterations.
LprimeResult compute_lprime(const SubstitutionSystem& sys, int stabilization_window = 2,
                            int max_iterations = 40, std::size_t budget = kDefaultPointBudget);

/// Axis-aligned box (lattice coordinates) containing every sum
/// sum_{k>=1} Q^{-k} a_k with digits a_k. With `partial_sums` it also contains
/// every finite partial sum.
struct RealBox {
  std::vector<double> lo;
  std::vector<double> hi;
};
RealBox digit_expansion_box(const SubstitutionSystem& sys, bool partial_sums);

}  // namespace latsub
