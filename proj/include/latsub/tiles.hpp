#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "latsub/cluster.hpp"
#include "latsub/system.hpp"

namespace latsub {

/// Sampled approximation of one tile A_i of the adjoint system
/// Q A_j = union_i (D_ij + A_i), in lattice coordinates.
///
/// Each cell of side h = 1/subdivisions is sampled at one point placed at a
/// fixed generic offset inside the cell (denominator h/1021), so samples do
/// not sit on the rational points where neighboring tiles touch. A sample x
/// is kept when the set map, iterated `iterations` times from a box holding
/// every digit expansion, still contains it: some chain x -> Qx - a -> ...
/// of that length stays inside the box. Arithmetic is exact on numerators.
/// Kept sets are nested in the iteration count and always contain A_j.
struct TileAttractor {
  std::size_t color = 0;
  Int subdivisions = 0;       // 1/h
  IntVec lo;                  // first cell index per axis
  IntVec extent;              // cells per axis
  std::vector<char> bits;     // first axis fastest
  int iterations = 0;
  double hausdorff_gap = 0.0; // bound on the distance to A_j, in cells
  std::size_t count = 0;
  std::size_t boundary_count = 0;  // samples with a missing axis neighbor

  /// Exact tile as an interval in lattice coordinates (1-d, when the hulls
  /// satisfy the set equation exactly).
  std::optional<std::pair<Rational, Rational>> exact_interval;

  double cell_size() const { return 1.0 / static_cast<double>(subdivisions); }
  std::size_t dim() const { return lo.size(); }
  bool converged() const;
  bool contains(const IntVec& cell) const;
  /// Lattice-coordinate position of the sample in a cell.
  std::vector<double> position(const IntVec& cell) const;
  template <class F>
  void for_each_sample(F&& f) const;
};

inline constexpr Int kSampleDenominator = 1021;

/// Numerator (over kSampleDenominator) of the sample offset on an axis.
constexpr Int sample_offset(std::size_t axis) { return kSampleDenominator / 2 + 17 * static_cast<Int>(axis + 1); }

inline constexpr double kConvergedGap = 2.0;

/// Chooses the iteration count so the outer approximation is within a
/// quarter cell of A_j, capped at max_iterations. Throws when Q is not
/// expansive (no bounding box exists).
std::vector<TileAttractor> solve_adjoint(const SubstitutionSystem& sys, Int subdivisions,
                                         int max_iterations = 200);

struct VolumeVector {
  std::vector<double> volumes;     // ambient units
  double residual = 0.0;           // max_j |q Vol_j - sum_i S_ij Vol_i| / max Vol
  std::vector<double> densities;   // points of Lambda_i per ambient unit volume
  double covering_multiplicity = 0.0;
  bool exact = false;              // volumes from exact intervals
};

/// Volumes from sample counts (or exact intervals), the left eigenvector
/// residual, and sum_i dens(Lambda_i) Vol(A_i) from a patch on [0, side)^d.
/// Throws when an attractor has not converged.
VolumeVector volume_check(const SubstitutionSystem& sys,
                          const std::vector<TileAttractor>& attractors, Int side = 0);

/// Fraction of samples on the boundary of the grid set.
double boundary_fraction(const TileAttractor& a);

/// Writes a deterministic SVG of the patch in ambient coordinates; tiles are
/// drawn from their sample grids when attractors are given.
void render_svg(const SubstitutionSystem& sys, const Cluster& patch,
                const std::vector<TileAttractor>& attractors, const std::filesystem::path& path);
std::string svg_document(const SubstitutionSystem& sys, const Cluster& patch,
                         const std::vector<TileAttractor>& attractors);

/// Binary PGM of a 1-d or 2-d sample grid (debugging aid).
void write_pgm(const TileAttractor& a, const std::filesystem::path& path);

template <class F>
void TileAttractor::for_each_sample(F&& f) const {
  const std::size_t d = dim();
  IntVec idx(d, 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) {
      IntVec p(d);
      for (std::size_t c = 0; c < d; ++c) p[c] = lo[c] + idx[c];
      f(static_cast<const IntVec&>(p));
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (++idx[c] < extent[c]) break;
      idx[c] = 0;
    }
  }
}

}  // namespace latsub
