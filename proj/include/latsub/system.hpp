#pragma once

#include <string>
#include <vector>

#include "latsub/cluster.hpp"
#include "latsub/lattice.hpp"

namespace latsub {

/// digits[i][j] is D_ij: Lambda_i contains Q Lambda_j + D_ij.
using DigitTable = std::vector<std::vector<std::vector<IntVec>>>;

/// A lattice substitution system: the pair (Lambda, Phi) where every map of
/// Phi has the form x -> Qx + a with a in the lattice.
struct SubstitutionSystem {
  std::string name;
  std::vector<std::string> colors;
  LatticeBasis lattice;
  ExpansionMatrix expansion;
  DigitTable digits;
  Cluster seed;

  std::size_t dim() const { return lattice.dim(); }
  std::size_t color_count() const { return colors.size(); }
  const std::vector<IntVec>& digit_set(std::size_t target, std::size_t source) const {
    return digits.at(target).at(source);
  }
  /// Every digit of every D_ij, deduplicated.
  std::vector<IntVec> all_digits() const;
};

/// Structural problems with a system, empty when valid. Does not check
/// expansivity; see is_expansive().
std::vector<std::string> structural_problems(const SubstitutionSystem& sys);

/// Throws Error listing every structural problem.
void require_valid(const SubstitutionSystem& sys);

}  // namespace latsub
