#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latsub/cluster.hpp"
#include "latsub/substitution.hpp"
#include "latsub/system.hpp"

namespace latsub {

/// Averaging windows F_n = Q^n D_0, D_0 = [base_lo, base_hi) in lattice
/// coordinates.
struct VanHoveSequence {
  IntVec base_lo;
  IntVec base_hi;
  std::vector<int> scales;

  /// D_0 = [0, 1)^d.
  static VanHoveSequence unit(std::size_t dim, std::vector<int> scales);
};

/// Lattice points of one window F_n (optionally translated).
class Window {
 public:
  Window(const SubstitutionSystem& sys, const VanHoveSequence& seq, int n);

  const Box& hull() const { return hull_; }
  bool contains(const IntVec& x) const;
  Int size() const { return count_; }
  Window translated(const IntVec& h) const;
  /// Fraction of points x whose cube x + [-r, r]^d leaves the window.
  double boundary_fraction(Int r) const;

  template <class F>
  void for_each_point(F&& f) const {
    std::size_t k = 0;
    hull_.for_each_point([&](const IntVec& x) {
      if (member_[k++]) f(x);
    });
  }
  /// Points in hull order, as a flat list.
  std::vector<IntVec> points() const;

 private:
  Window() = default;
  std::size_t index(const IntVec& x) const;

  Box hull_;
  std::vector<char> member_;
  Int count_ = 0;
};

/// Color sets (bit i for Lambda_i) of every lattice point of a box.
class ColorField {
 public:
  ColorField(const Cluster& patch, const Box& box);
  /// Lambda restricted to the box, from a covering patch.
  static ColorField covering(const SubstitutionSystem& sys, const Box& box,
                             std::size_t budget = kDefaultPointBudget);

  const Box& box() const { return box_; }
  /// Zero outside the box.
  std::uint64_t at(const IntVec& x) const;

 private:
  Box box_;
  std::vector<std::uint64_t> masks_;
};

struct FrequencyEstimate {
  std::vector<int> scales;
  std::vector<IntVec> translates;
  std::vector<std::vector<double>> values;  // [scale][translate], per lattice point
  std::vector<double> mean;                 // per scale
  double spread = 0.0;                      // max - min at the largest scale
  double boundary_bound = 0.0;              // boundary fraction of the largest window
};

/// L_P(h + F_n) / |F_n| for each translate h and scale n. Occurrences t count
/// when t + P lies in Lambda and in the window.
FrequencyEstimate cluster_frequency(const SubstitutionSystem& sys, const Cluster& p,
                                    const VanHoveSequence& seq, const std::vector<IntVec>& translates,
                                    std::size_t budget = kDefaultPointBudget);

/// sum_i L_P(Q^k A_i) r_i q^-k with r normalized by sum r_i Vol(A_i) = 1,
/// converted to a per-lattice-point frequency. L_P(Q^k A_i) counts the
/// occurrences inside the level-k supertile of color i.
double supertile_frequency(const SubstitutionSystem& sys, const Cluster& p, int k,
                           const std::vector<double>& volumes, std::size_t budget = kDefaultPointBudget);

/// Occurrences of P inside a cluster (every point of t + P present).
std::size_t count_occurrences(const Cluster& host, const Cluster& p);

struct DensitySeries {
  IntVec alpha;
  int window_n = 0;
  Int window_size = 0;
  std::vector<Int> differing;  // per n: x and x - Q^n alpha both in F_N, colors differ
  std::vector<Int> compared;   // per n: x and x - Q^n alpha both in F_N

  std::size_t size() const { return differing.size(); }
  double value(std::size_t n) const;
  std::vector<double> values() const;
  /// Fraction of the window discarded at step n.
  double margin(std::size_t n) const;
};

/// dens(Lambda xor (Q^n alpha + Lambda)) on F_N for n = 0..max_n, as exact
/// counts per lattice point. Throws when alpha is not in L'.
DensitySeries density_symdiff_series(const SubstitutionSystem& sys, const IntVec& alpha, int max_n,
                                     int window_n, std::size_t budget = kDefaultPointBudget);
DensitySeries density_symdiff_series(const SubstitutionSystem& sys, const SubgroupHNF& lprime,
                                     const IntVec& alpha, int max_n, int window_n,
                                     std::size_t budget = kDefaultPointBudget);

/// values[n + 1] <= values[n] + slack for n >= skip, with slack the larger
/// discarded fraction of the two steps plus `extra`.
bool nonincreasing_within_margin(const DensitySeries& s, std::size_t skip = 1, double extra = 0.0);

enum class RateKind { Decaying, NonVanishing };
std::string to_string(RateKind k);

struct RateFit {
  RateKind kind = RateKind::Decaying;
  double r = 0.0;  // values ~ C r^n over the tail
  double c = 0.0;
  double tail_min = 0.0;
  std::size_t fitted = 0;  // tail points used
};

inline constexpr double kNonVanishingFloor = 0.05;
inline constexpr double kStalledRatio = 0.9;

/// Least-squares fit of log(values) on the second half of the series. An
/// all-zero series gives r = 0. NonVanishing when the tail stays above the
/// floor and the fitted ratio is at least kStalledRatio; a tail above the
/// floor that still shrinks geometrically is reported as Decaying. Throws
/// when the series has fewer than 5 terms.
RateFit rate_fit(const DensitySeries& s, double floor = kNonVanishingFloor);

struct DiffractionGrid {
  Box window;          // lattice points used
  int oversample = 2;  // zero padding factor per axis
};

struct SpectrumPeak {
  std::vector<double> frequency;  // lattice dual coordinates, in [0, 1)
  double intensity = 0.0;
};

/// Finite-window periodogram of the weighted comb; a numerical proxy only.
struct DiffractionEstimate {
  bool heuristic = true;
  std::vector<std::size_t> bins;  // per axis
  std::vector<double> intensity;  // |sum w(x) e(-k.x)|^2 / |window|, first axis fastest
  double concentration = 0.0;     // mass fraction in the top 1% of bins
  std::vector<SpectrumPeak> peaks;
};

inline constexpr Int kMinDiffractionPoints = 64;

DiffractionEstimate diffraction_estimate(const Cluster& patch, const std::vector<double>& weights,
                                         const DiffractionGrid& grid, std::size_t peak_count = 8);

}  // namespace latsub
