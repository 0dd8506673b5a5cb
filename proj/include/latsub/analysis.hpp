#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latsub/cluster.hpp"
#include "latsub/coincidence.hpp"
#include "latsub/overlap.hpp"
#include "latsub/report.hpp"
#include "latsub/statistics.hpp"
#include "latsub/system.hpp"
#include "latsub/tiles.hpp"

namespace latsub {

struct AnalysisOptions {
  int kmax = 6;
  int mmax = kDefaultMaxLevel;
  int window_depth = 6;
  Int subdivisions = 64;
  int tile_iterations = 200;
  std::vector<IntVec> shifts;         // empty: default_shifts()
  std::optional<int> density_window;  // N of F_N; chosen from |det Q| when unset
  std::optional<int> density_steps;   // largest n; N - 2 when unset
  std::size_t budget = kDefaultPointBudget;
};

/// Window index N with |det Q|^N near a few hundred thousand points.
int default_density_window(const SubstitutionSystem& sys);

// One report block each; every block has "verdict" and "result".
Json expansivity_block(const SubstitutionSystem& sys);
Json primitivity_block(const SubstitutionSystem& sys);
Json pf_block(const SubstitutionSystem& sys);
Json fixed_point_block(const SubstitutionSystem& sys);
Json legality_block(const SubstitutionSystem& sys, const Cluster& p, int kmax,
                    std::size_t budget = kDefaultPointBudget);
Json lprime_block(const SubstitutionSystem& sys);
Json modcoin_block(const SubstitutionSystem& sys, int mmax);
Json windows_block(const SubstitutionSystem& sys, int depth, int mmax);
Json tiles_block(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors);
Json density_block(const SubstitutionSystem& sys, const std::vector<IntVec>& alphas, int window_n, int max_n,
                   std::size_t budget = kDefaultPointBudget);
Json overlap_block(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors,
                   const std::vector<IntVec>& shifts);
/// Each cluster on F_{scale-2} and F_scale over deterministic translates; the
/// supertile estimate is added when tile volumes are given.
Json frequency_block(const SubstitutionSystem& sys, const std::vector<Cluster>& clusters, int scale,
                     std::size_t translates, const std::vector<double>& volumes = {},
                     std::size_t budget = kDefaultPointBudget);
/// Weights (-1)^color unless given; the window is [0, side)^d.
Json diffraction_block(const SubstitutionSystem& sys, Int side, std::vector<double> weights = {},
                       std::size_t budget = kDefaultPointBudget);

/// Combines modcoin, density and overlap blocks into the overall verdict.
Json overall_verdict(const AnalysisReport& report, int mmax);

/// Every block plus the overall verdict.
AnalysisReport run_full(const SubstitutionSystem& sys, const AnalysisOptions& options);
AnalysisReport run_full(const SubstitutionSystem& sys);

// Command-line value syntax.

/// "3" or "1,-2".
IntVec parse_vector(std::string_view text, std::size_t dim);
/// Vectors separated by ';', e.g. "1,0;0,2".
std::vector<IntVec> parse_vectors(std::string_view text, std::size_t dim);
/// "lo:hi" per axis, axes separated by ','; "-4:4" alone is used on every axis.
Box parse_region(std::string_view text, std::size_t dim);
/// "label@x;label@x", e.g. "a@0;b@1" or "a@0,0;c@1,0".
Cluster parse_cluster(std::string_view text, const SubstitutionSystem& sys);
/// "1/64" or "64", returning the subdivision count.
Int parse_cell(std::string_view text);

std::string vector_string(const IntVec& x);

}  // namespace latsub
