#include "latsub/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "latsub/coincidence.hpp"
#include "latsub/spec_io.hpp"
#include "latsub/substitution.hpp"

namespace latsub {

namespace {

constexpr std::size_t kListedStuck = 16;
constexpr std::size_t kListedPeaks = 4;

Json tidy_list(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(tidy(x));
  return out;
}

Json matrix_rows(const IntMatrix& m) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Json basis_columns(const SubgroupHNF& h) {
  Json out = Json::array();
  for (std::size_t c = 0; c < h.rank(); ++c) {
    Json col = Json::array();
    for (std::size_t r = 0; r < h.dim(); ++r) col.push_back(h.basis()(r, c).str());
    out.push_back(col);
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

Int parse_int(const std::string& s) {
  Int v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw Error("not an integer: '" + s + "'");
  return v;
}

Json skipped(const std::string& why) { return {{"verdict", to_string(Certainty::Inconclusive)}, {"result", why}}; }

}  // namespace

std::string vector_string(const IntVec& x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i]);
  return s + ")";
}

int default_density_window(const SubstitutionSystem& sys) {
  const double q = static_cast<double>(sys.expansion.absdet());
  const int n = static_cast<int>(std::floor(std::log(600000.0) / std::log(q)));
  return std::clamp(n, 7, 16);
}

Json expansivity_block(const SubstitutionSystem& sys) {
  const auto r = is_expansive(sys.expansion);
  Json b;
  b["verdict"] = to_string(r.indeterminate ? Certainty::Inconclusive
                           : r.expansive   ? Certainty::Evidence
                                           : Certainty::Refuted);
  b["result"] = r.indeterminate ? "indeterminate" : r.expansive ? "expansive" : "not expansive";
  b["margin"] = tidy(r.margin);
  b["tolerance"] = 1e-6;
  b["inflation"] = is_inflation(sys.expansion, sys.lattice);
  b["expansion"] = matrix_rows(sys.expansion.entries());
  b["absdet"] = sys.expansion.absdet();
  return b;
}

Json primitivity_block(const SubstitutionSystem& sys) {
  const IntMatrix s = substitution_matrix(sys);
  const auto p = is_primitive(s);
  const Int m = static_cast<Int>(sys.color_count());
  Json b;
  b["verdict"] = to_string(p.primitive ? Certainty::Certified : Certainty::Refuted);
  b["result"] = p.primitive ? "primitive with S^" + std::to_string(p.power) + " > 0" : "not primitive";
  b["power"] = p.power;
  b["bound"] = m * m - 2 * m + 2;
  b["matrix"] = matrix_rows(s);
  return b;
}

Json pf_block(const SubstitutionSystem& sys) {
  const IntMatrix s = substitution_matrix(sys);
  if (!is_primitive(s).primitive) return skipped("skipped: S is not primitive");
  const auto pf = pf_data(s, sys.expansion);
  Json b;
  b["verdict"] = to_string(pf.consistent ? Certainty::Evidence : Certainty::Refuted);
  b["result"] = pf.consistent ? "eigenvalue matches |det Q|" : "eigenvalue differs from |det Q|";
  b["eigenvalue"] = tidy(pf.eigenvalue);
  b["absdet"] = sys.expansion.absdet();
  b["tolerance"] = 1e-6;
  b["residual"] = tidy(pf.residual);
  b["left"] = tidy_list(pf.left);
  b["right"] = tidy_list(pf.right);
  return b;
}

Json fixed_point_block(const SubstitutionSystem& sys) {
  const bool ok = verify_fixed_point(sys);
  Json b;
  b["verdict"] = to_string(ok ? Certainty::Certified : Certainty::Refuted);
  b["result"] = ok ? "seed is contained in its image" : "seed is not contained in its image";
  b["seed_points"] = sys.seed.size();
  return b;
}

Json legality_block(const SubstitutionSystem& sys, const Cluster& p, int kmax, std::size_t budget) {
  const auto r = legality_check(sys, p, kmax, budget);
  Json b;
  b["verdict"] = to_string(r.legal ? Certainty::Certified : Certainty::Inconclusive);
  b["result"] = r.verdict();
  b["bound"] = kmax;
  b["cluster_points"] = p.size();
  if (r.legal) {
    b["k"] = r.k;
    b["color"] = sys.colors[r.color];
    b["translation"] = r.translation;
  }
  return b;
}

Json lprime_block(const SubstitutionSystem& sys) {
  const auto r = compute_lprime(sys);
  Json b;
  b["verdict"] = to_string(r.stabilized ? Certainty::Evidence : Certainty::Inconclusive);
  Json gens = Json::array();
  std::string text;
  for (const auto& g : r.lprime.int_columns()) {
    gens.push_back(g);
    text += (text.empty() ? "" : ", ") + vector_string(g);
  }
  const bool full = r.lprime.full_rank();
  b["result"] = "L' = <" + text + ">" + (full ? ", index " + r.lprime.index().str() : ", not of full rank");
  b["generators"] = gens;
  b["index"] = full ? r.lprime.index().str() : "infinite";
  b["iterations"] = r.iterations;
  b["stabilized"] = r.stabilized;
  b["inflation_relation"] = r.inflation_relation;
  return b;
}

Json modcoin_block(const SubstitutionSystem& sys, int mmax) {
  const auto ctx = coincidence_context(sys);
  const auto r = find_modular_coincidence(sys, ctx, mmax);
  Json b;
  b["verdict"] = to_string(r.found ? Certainty::Certified : Certainty::Inconclusive);
  b["result"] = r.found ? "coincidence at M=" + std::to_string(r.level)
                        : "no coincidence found (M≤" + std::to_string(mmax) + ")";
  b["found"] = r.found;
  b["bound"] = mmax;
  b["exhaustive"] = true;
  b["level"] = r.level;
  b["lattice_covered"] = r.lattice_covered;
  Json counts = Json::array();
  for (auto c : r.classes_per_level) counts.push_back(c);
  b["classes_per_level"] = counts;
  Json witnesses = Json::array();
  if (r.found) {
    const SubgroupHNF modulus = hnf(multiply(power(to_big(sys.expansion.entries()), r.level), ctx.lprime.basis()));
    b["modulus"] = basis_columns(modulus);
    for (const auto& w : r.witnesses) {
      std::string cls = sys.dim() == 1 ? std::to_string(w.coset.rep[0]) + " mod " + modulus.basis()(0, 0).str()
                                       : vector_string(w.coset.rep) + " + Q^" + std::to_string(w.coset.level) + " L'";
      witnesses.push_back({{"class", cls}, {"level", w.coset.level}, {"rep", w.coset.rep}, {"row", sys.colors[w.row]}});
    }
  }
  b["witnesses"] = witnesses;
  return b;
}

Json windows_block(const SubstitutionSystem& sys, int depth, int mmax) {
  const auto r = model_set_report(sys, depth, mmax);
  const auto w = window_measures(sys, depth);
  Json b;
  b["verdict"] = to_string(r.interior_disjoint ? Certainty::Evidence : Certainty::Refuted);
  b["disjointness_verdict"] = to_string(r.interior_disjoint ? Certainty::Certified : Certainty::Refuted);
  b["depth"] = depth;
  b["interior_disjoint"] = r.interior_disjoint;
  b["residual"] = tidy(w.residual);
  b["inner_residual"] = tidy(w.inner_residual);
  b["result"] = std::string(r.interior_disjoint ? "interiors disjoint" : "interiors overlap") +
                "; outer residual " + Json(tidy(w.residual)).dump() + " at depth " + std::to_string(depth);
  Json per = Json::array();
  for (std::size_t i = 0; i < sys.color_count(); ++i) {
    per.push_back({{"color", sys.colors[i]},
                   {"inner", rational_to_string(w.inner[i])},
                   {"outer", rational_to_string(w.outer[i])},
                   {"inner_value", tidy(w.inner[i].convert_to<double>())},
                   {"outer_value", tidy(w.outer[i].convert_to<double>())}});
  }
  b["windows"] = per;
  Json boundary = Json::array();
  for (const auto& x : r.boundary_by_depth) boundary.push_back(rational_to_string(x));
  b["boundary_by_depth"] = boundary;
  b["model_set"] = r.verdict;
  b["physical_space"] = r.physical_space;
  b["internal_group"] = r.internal_group;
  b["embedding"] = r.embedding;
  return b;
}

Json tiles_block(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors) {
  Json b;
  Json tiles = Json::array();
  bool converged = true;
  for (const auto& a : attractors) {
    Json t{{"color", sys.colors[a.color]},
           {"samples", a.count},
           {"iterations", a.iterations},
           {"hausdorff_gap", tidy(a.hausdorff_gap)},
           {"converged", a.converged()},
           {"boundary_fraction", tidy(boundary_fraction(a))}};
    if (a.exact_interval) {
      t["exact_interval"] = {rational_to_string(a.exact_interval->first), rational_to_string(a.exact_interval->second)};
    }
    tiles.push_back(t);
    converged = converged && a.converged();
  }
  b["cell"] = attractors.empty() ? "none" : "1/" + std::to_string(attractors.front().subdivisions);
  b["tiles"] = tiles;
  if (!converged) {
    b["verdict"] = to_string(Certainty::Inconclusive);
    b["result"] = "attractor iteration did not converge";
    return b;
  }
  const auto v = volume_check(sys, attractors);
  b["verdict"] = to_string(Certainty::Evidence);
  b["volumes"] = tidy_list(v.volumes);
  b["volume_residual"] = tidy(v.residual);
  b["densities"] = tidy_list(v.densities);
  b["covering_multiplicity"] = tidy(v.covering_multiplicity);
  b["exact_volumes"] = v.exact;
  b["result"] = "covering multiplicity " + Json(tidy(v.covering_multiplicity)).dump();
  return b;
}

Json density_block(const SubstitutionSystem& sys, const std::vector<IntVec>& alphas, int window_n, int max_n,
                   std::size_t budget) {
  const auto lp = compute_lprime(sys, 2, 40, budget).lprime;
  Json b;
  Json rows = Json::array();
  bool any_nonvanishing = false;
  for (const auto& alpha : alphas) {
    const auto s = density_symdiff_series(sys, lp, alpha, max_n, window_n, budget);
    const auto fit = rate_fit(s);
    any_nonvanishing = any_nonvanishing || fit.kind == RateKind::NonVanishing;
    std::vector<double> margins;
    for (std::size_t n = 0; n < s.size(); ++n) margins.push_back(s.margin(n));
    rows.push_back({{"alpha", alpha},
                    {"values", tidy_list(s.values())},
                    {"margins", tidy_list(margins)},
                    {"monotone_within_margin", nonincreasing_within_margin(s)},
                    {"fit", to_string(fit.kind)},
                    {"rate", tidy(fit.r)},
                    {"tail_min", tidy(fit.tail_min)}});
  }
  b["verdict"] = to_string(Certainty::Evidence);
  b["result"] = any_nonvanishing ? "non-vanishing" : "decaying";
  b["window_n"] = window_n;
  b["steps"] = max_n;
  b["floor"] = kNonVanishingFloor;
  b["series"] = rows;
  return b;
}

Json overlap_block(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors,
                   const std::vector<IntVec>& shifts) {
  const auto g = build_overlap_graph(sys, attractors, shifts);
  const auto reach = coincidence_reachability(g);
  Json b;
  b["verdict"] = to_string(!reach.agree ? Certainty::Inconclusive
                           : g.exact    ? Certainty::Certified
                                        : Certainty::Evidence);
  b["result"] = reach.agree ? to_string(reach.kind()) : "undecided";
  b["mode"] = g.exact ? "exact intervals" : "sampled";
  if (!g.exact) b["threshold"] = g.threshold;
  b["shifts"] = shifts;
  b["vertices"] = g.vertices.size();
  b["edges"] = g.edges.size();
  b["uncertain_edges"] = std::count_if(g.edges.begin(), g.edges.end(), [](const OverlapEdge& e) { return !e.certain; });
  b["coincidences"] = std::count_if(g.vertices.begin(), g.vertices.end(),
                                    [](const OverlapClass& v) { return v.is_coincidence(); });
  b["roots"] = g.roots.size();
  b["absorption_violations"] = g.absorption_violations.size();
  b["optimistic"] = to_string(reach.optimistic.kind);
  b["pessimistic"] = to_string(reach.pessimistic.kind);
  Json stuck = Json::array();
  for (std::size_t i = 0; i < reach.pessimistic.stuck.size() && i < kListedStuck; ++i) {
    const auto& v = g.vertices[reach.pessimistic.stuck[i]];
    stuck.push_back({{"left", sys.colors[v.left]}, {"right", sys.colors[v.right]}, {"displacement", v.displacement}});
  }
  b["stuck_count"] = reach.pessimistic.stuck.size();
  b["stuck"] = stuck;
  return b;
}

Json frequency_block(const SubstitutionSystem& sys, const std::vector<Cluster>& clusters, int scale,
                     std::size_t translates, const std::vector<double>& volumes, std::size_t budget) {
  const std::size_t d = sys.dim();
  std::vector<IntVec> hs;
  for (std::size_t k = 0; k < translates; ++k) {
    IntVec h(d);
    for (std::size_t c = 0; c < d; ++c) h[c] = static_cast<Int>(k) * (101 + 38 * static_cast<Int>(c));
    hs.push_back(h);
  }
  const double q = static_cast<double>(sys.expansion.absdet());
  const int k_super = std::max(1, static_cast<int>(std::floor(std::log(20000.0) / std::log(q))));
  Json rows = Json::array();
  double spread = 0.0;
  for (const auto& p : clusters) {
    const auto f = cluster_frequency(sys, p, VanHoveSequence::unit(d, {scale - 2, scale}), hs, budget);
    Json pts = Json::array();
    for (std::size_t c = 0; c < p.colors(); ++c) {
      for (const auto& x : p[c]) pts.push_back(sys.colors[c] + "@" + vector_string(x));
    }
    Json row{{"cluster", pts}, {"mean", tidy_list(f.mean)}, {"spread", tidy(f.spread)},
             {"boundary_bound", tidy(f.boundary_bound)}};
    if (!volumes.empty()) row["supertile"] = tidy(supertile_frequency(sys, p, k_super, volumes, budget));
    spread = std::max(spread, f.spread);
    rows.push_back(row);
  }
  Json b;
  b["verdict"] = to_string(Certainty::Evidence);
  b["result"] = "largest spread over translates " + Json(tidy(spread)).dump();
  b["scales"] = {scale - 2, scale};
  b["translates"] = translates;
  if (!volumes.empty()) b["supertile_level"] = k_super;
  b["clusters"] = rows;
  return b;
}

Json diffraction_block(const SubstitutionSystem& sys, Int side, std::vector<double> weights, std::size_t budget) {
  if (weights.empty()) {
    for (std::size_t c = 0; c < sys.color_count(); ++c) weights.push_back(c % 2 == 0 ? 1.0 : -1.0);
  }
  const Box box = Box::cube(sys.dim(), 0, side - 1);
  const auto patch = covering_patch(sys, box, 64, budget).patch;
  const auto est = diffraction_estimate(patch, weights, DiffractionGrid{box, 2});
  Json peaks = Json::array();
  for (std::size_t i = 0; i < est.peaks.size() && i < kListedPeaks; ++i) {
    peaks.push_back({{"frequency", tidy_list(est.peaks[i].frequency)}, {"intensity", tidy(est.peaks[i].intensity)}});
  }
  Json b;
  b["verdict"] = to_string(Certainty::Evidence);
  b["heuristic"] = true;
  b["result"] = "top 1% of bins hold " + Json(tidy(est.concentration)).dump() + " of the mass";
  b["window_side"] = side;
  b["oversample"] = 2;
  b["weights"] = tidy_list(weights);
  b["concentration"] = tidy(est.concentration);
  b["peaks"] = peaks;
  return b;
}

Json overall_verdict(const AnalysisReport& report, int mmax) {
  Json o;
  o["claim"] = "pure point spectrum";
  Json items = Json::object();
  std::vector<bool> signals;
  bool found = false;
  int level = 0;
  if (report.has("modcoin")) {
    const auto& m = report.block("modcoin");
    found = m.at("found").get<bool>();
    level = m.at("level").get<int>();
    signals.push_back(found);
    items["modular_coincidence"] = m.at("result");
  }
  std::string density, overlap;
  bool overlap_exact_stuck = false;
  if (report.has("density") && report.block("density").contains("series")) {
    density = report.block("density").at("result").get<std::string>();
    signals.push_back(density == "decaying");
    items["density"] = density;
  }
  if (report.has("overlap") && report.block("overlap").contains("vertices")) {
    const auto& b = report.block("overlap");
    overlap = b.at("result").get<std::string>();
    if (overlap != "undecided") signals.push_back(overlap == "AllReach");
    overlap_exact_stuck = overlap == "Stuck" && b.at("verdict") == to_string(Certainty::Certified);
    items["overlap"] = overlap;
  }
  std::string text;
  if (found) {
    text = "pure point (modular coincidence at M=" + std::to_string(level) + ")";
    items["model_set"] = "regular model set";
  } else {
    text = report.has("modcoin") ? "no coincidence found (M≤" + std::to_string(mmax) + ")" : "modular coincidence not run";
    if (!density.empty()) text += "; density " + density;
    if (!overlap.empty()) text += "; overlap " + overlap;
    items["model_set"] = "not established";
  }
  const bool consistent =
      signals.empty() || std::all_of(signals.begin(), signals.end(), [&](bool s) { return s == signals.front(); });
  Certainty c = Certainty::Inconclusive;
  if (found) {
    c = Certainty::Certified;
  } else if (overlap_exact_stuck) {
    c = Certainty::Refuted;
  } else if (!signals.empty() && consistent && signals.front()) {
    c = Certainty::Evidence;
  }
  o["verdict"] = text;
  o["level"] = to_string(c);
  o["consistent"] = consistent;
  o["items"] = items;
  return o;
}

AnalysisReport run_full(const SubstitutionSystem& sys, const AnalysisOptions& opt) {
  AnalysisReport report(sys.name);
  report.set("expansivity", expansivity_block(sys));
  const bool expansive = is_expansive(sys.expansion).expansive;
  report.set("primitivity", primitivity_block(sys));
  const bool primitive = is_primitive(substitution_matrix(sys)).primitive;
  report.set("pf", pf_block(sys));
  report.set("fixed_point", fixed_point_block(sys));
  report.set("legality", legality_block(sys, sys.seed, opt.kmax, opt.budget));
  report.set("lprime", lprime_block(sys));
  report.set("modcoin", modcoin_block(sys, opt.mmax));
  report.set("windows", windows_block(sys, opt.window_depth, opt.mmax));

  const int window_n = opt.density_window.value_or(default_density_window(sys));
  const int steps = opt.density_steps.value_or(window_n - 2);
  if (expansive) {
    const auto shifts = opt.shifts.empty() ? default_shifts(sys) : opt.shifts;
    const auto attractors = solve_adjoint(sys, opt.subdivisions, opt.tile_iterations);
    report.set("tiles", tiles_block(sys, attractors));
    report.set("density", density_block(sys, shifts, window_n, steps, opt.budget));
    const bool converged =
        std::all_of(attractors.begin(), attractors.end(), [](const TileAttractor& a) { return a.converged(); });
    report.set("overlap", converged ? overlap_block(sys, attractors, shifts)
                                    : skipped("skipped: attractor iteration did not converge"));
    std::vector<double> volumes;
    if (converged && primitive) volumes = volume_check(sys, attractors).volumes;
    std::vector<Cluster> singles;
    for (std::size_t c = 0; c < sys.color_count(); ++c) {
      std::vector<std::vector<IntVec>> pts(sys.color_count());
      pts[c].push_back(IntVec(sys.dim(), 0));
      singles.emplace_back(sys.dim(), std::move(pts));
    }
    report.set("frequency", frequency_block(sys, singles, window_n - 2, 10, volumes, opt.budget));
    report.set("diffraction", diffraction_block(sys, sys.dim() == 1 ? 4096 : 64, {}, opt.budget));
  } else {
    for (const char* name : {"tiles", "density", "overlap", "frequency", "diffraction"}) {
      report.set(name, skipped("skipped: Q is not expansive"));
    }
  }
  report.set_overall(overall_verdict(report, opt.mmax));
  return report;
}

AnalysisReport run_full(const SubstitutionSystem& sys) { return run_full(sys, AnalysisOptions{}); }

IntVec parse_vector(std::string_view text, std::size_t dim) {
  const auto parts = split(text, ',');
  if (parts.size() != dim) {
    throw Error("expected " + std::to_string(dim) + " coordinates in '" + std::string(text) + "'");
  }
  IntVec v;
  for (const auto& p : parts) v.push_back(parse_int(p));
  return v;
}

std::vector<IntVec> parse_vectors(std::string_view text, std::size_t dim) {
  std::vector<IntVec> out;
  for (const auto& p : split(text, ';')) out.push_back(parse_vector(p, dim));
  return out;
}

Box parse_region(std::string_view text, std::size_t dim) {
  auto axes = split(text, ',');
  if (axes.size() == 1 && dim > 1) axes.assign(dim, axes.front());
  if (axes.size() != dim) throw Error("region needs one lo:hi range per axis: '" + std::string(text) + "'");
  Box box{IntVec(dim), IntVec(dim)};
  for (std::size_t c = 0; c < dim; ++c) {
    const auto ends = split(axes[c], ':');
    if (ends.size() != 2) throw Error("region axis is not lo:hi: '" + axes[c] + "'");
    box.lo[c] = parse_int(ends[0]);
    box.hi[c] = parse_int(ends[1]);
    if (box.lo[c] > box.hi[c]) throw Error("empty region axis: '" + axes[c] + "'");
  }
  return box;
}

Cluster parse_cluster(std::string_view text, const SubstitutionSystem& sys) {
  std::vector<std::vector<IntVec>> pts(sys.color_count());
  for (const auto& item : split(text, ';')) {
    const auto at = item.find('@');
    if (at == std::string::npos) throw Error("cluster point is not label@x: '" + item + "'");
    const std::string label = trim(std::string_view(item).substr(0, at));
    const auto it = std::find(sys.colors.begin(), sys.colors.end(), label);
    if (it == sys.colors.end()) throw Error("unknown color label: '" + label + "'");
    pts[static_cast<std::size_t>(it - sys.colors.begin())].push_back(
        parse_vector(std::string_view(item).substr(at + 1), sys.dim()));
  }
  return Cluster(sys.dim(), std::move(pts));
}

Int parse_cell(std::string_view text) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  Int n = 0;
  if (slash == std::string::npos) {
    n = parse_int(t);
  } else {
    if (parse_int(t.substr(0, slash)) != 1) throw Error("cell size must be 1/N: '" + t + "'");
    n = parse_int(t.substr(slash + 1));
  }
  if (n < 1) throw Error("cell subdivisions must be positive: '" + t + "'");
  return n;
}

}  // namespace latsub
