#pragma once

#include <random>
#include <string>

#include "latsub/spec_io.hpp"

namespace latsub::test {

inline SubstitutionSystem load(const std::string& name) {
  return parse_spec(std::string(LATSUB_SYSTEMS_DIR) + "/" + name + ".spec");
}

inline const std::vector<std::string>& bundled() {
  static const std::vector<std::string> names{"abcd", "gasket", "ex310", "period-doubling",
                                              "thue-morse", "chair"};
  return names;
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20261018);
  return gen;
}

inline Int uniform(Int lo, Int hi) { return std::uniform_int_distribution<Int>(lo, hi)(rng()); }

inline IntVec random_vec(std::size_t d, Int lo, Int hi) {
  IntVec v(d);
  for (auto& x : v) x = uniform(lo, hi);
  return v;
}

}  // namespace latsub::test
