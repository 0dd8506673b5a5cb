#include "latsub/system.hpp"

#include <algorithm>

namespace latsub {

std::vector<IntVec> SubstitutionSystem::all_digits() const {
  std::vector<IntVec> out;
  for (const auto& row : digits)
    for (const auto& cell : row) out.insert(out.end(), cell.begin(), cell.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> structural_problems(const SubstitutionSystem& sys) {
  std::vector<std::string> problems;
  const std::size_t d = sys.dim();
  const std::size_t m = sys.color_count();
  if (m == 0) problems.push_back("colors: at least one color required");
  if (sys.expansion.dim() != d)
    problems.push_back("expansion: dimension " + std::to_string(sys.expansion.dim()) +
                       " differs from lattice dimension " + std::to_string(d));
  if (sys.expansion.absdet() < 2)
    problems.push_back("expansion: |det Q| = " + std::to_string(sys.expansion.absdet()) +
                       " must be at least 2");
  if (sys.digits.size() != m) {
    problems.push_back("digits: expected " + std::to_string(m) + " rows, got " +
                       std::to_string(sys.digits.size()));
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (sys.digits[i].size() != m) {
        problems.push_back("digits[" + std::to_string(i) + "]: expected " + std::to_string(m) +
                           " columns, got " + std::to_string(sys.digits[i].size()));
        continue;
      }
      for (std::size_t j = 0; j < m; ++j) {
        auto cell = sys.digits[i][j];
        for (const auto& a : cell)
          if (a.size() != d)
            problems.push_back("digits[" + std::to_string(i) + "][" + std::to_string(j) +
                               "]: digit of length " + std::to_string(a.size()) +
                               ", expected " + std::to_string(d));
        std::sort(cell.begin(), cell.end());
        if (std::adjacent_find(cell.begin(), cell.end()) != cell.end())
          problems.push_back("digits[" + std::to_string(i) + "][" + std::to_string(j) +
                             "]: repeated digit");
      }
    }
  }
  if (sys.seed.colors() != m)
    problems.push_back("seed: expected " + std::to_string(m) + " colors, got " +
                       std::to_string(sys.seed.colors()));
  if (sys.seed.dim() != d && sys.seed.colors() > 0)
    problems.push_back("seed: dimension mismatch");
  return problems;
}

void require_valid(const SubstitutionSystem& sys) {
  auto problems = structural_problems(sys);
  if (problems.empty()) return;
  std::string msg = "invalid substitution system '" + sys.name + "':";
  for (const auto& p : problems) msg += "\n  " + p;
  throw Error(msg);
}

}  // namespace latsub
