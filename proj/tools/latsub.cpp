// latsub: command-line front end for lattice substitution analysis.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "latsub/analysis.hpp"
#include "latsub/parallel.hpp"
#include "latsub/spec_io.hpp"
#include "latsub/substitution.hpp"

using namespace latsub;

namespace {

constexpr int kExitFailure = 2;
constexpr int kExitBudget = 3;

struct Globals {
  unsigned jobs = 1;
  std::size_t budget = kDefaultPointBudget;
  std::string report_path;
  bool json = false;
};

void print_result(const std::string& name, const Json& b) {
  std::cout << name << ": " << b.at("result").get<std::string>() << " [" << b.at("verdict").get<std::string>()
            << "]\n";
}

std::string dump_compact(const Json& j) { return j.dump(); }

void print_points(const SubstitutionSystem& sys, const Cluster& c) {
  for (std::size_t i = 0; i < c.colors(); ++i) {
    std::cout << sys.colors[i] << " (" << c[i].size() << "):";
    for (const auto& x : c[i]) std::cout << ' ' << vector_string(x);
    std::cout << '\n';
  }
}

Box default_region(const SubstitutionSystem& sys) { return Box::cube(sys.dim(), sys.dim() == 1 ? -16 : -8, sys.dim() == 1 ? 16 : 8); }

// Shared state of one invocation; each subcommand fills blocks and prints.
struct Run {
  Globals g;
  std::string spec_path;
  std::optional<SubstitutionSystem> sys;
  AnalysisReport report;

  const SubstitutionSystem& system() {
    if (!sys) {
      sys = parse_spec(spec_path);
      report = AnalysisReport(sys->name);
    }
    return *sys;
  }

  void finish() {
    if (!g.report_path.empty()) emit_report(report, g.report_path);
    if (g.json) std::cout << report.text();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice substitution systems: coincidence, tiles, densities and overlaps"};
  app.require_subcommand(1);
  app.fallthrough();
  Run run;
  app.add_option("--jobs,-j", run.g.jobs, "Worker threads (results do not depend on this)")->check(CLI::Range(1u, 256u));
  app.add_option("--budget", run.g.budget, "Point budget for patch generation");
  app.add_option("--report", run.g.report_path, "Write the JSON report to this path");
  app.add_flag("--json", run.g.json, "Print the JSON report instead of text");

  std::map<CLI::App*, std::function<void()>> actions;
  auto command = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("spec", run.spec_path, "System spec file")->required()->check(CLI::ExistingFile);
    return sub;
  };

  auto* validate = command("validate", "Parse the spec and run the structural checks");
  actions[validate] = [&] {
    const auto& sys = run.system();
    std::cout << sys.name << ": dim " << sys.dim() << ", " << sys.color_count() << " colors, |det Q| = "
              << sys.expansion.absdet() << ", " << sys.all_digits().size() << " distinct digits\n";
    for (const char* name : {"expansivity", "primitivity", "pf", "fixed_point"}) {
      Json b = name == std::string("expansivity")   ? expansivity_block(sys)
               : name == std::string("primitivity") ? primitivity_block(sys)
               : name == std::string("pf")          ? pf_block(sys)
                                                    : fixed_point_block(sys);
      print_result(name, b);
      run.report.set(name, b);
    }
  };

  auto* matrix = command("matrix", "Substitution matrix and Perron-Frobenius data");
  actions[matrix] = [&] {
    const auto& sys = run.system();
    const IntMatrix s = substitution_matrix(sys);
    std::cout << "S (row = target color, column = source color):\n";
    for (std::size_t r = 0; r < s.rows(); ++r) {
      std::cout << "  " << sys.colors[r] << ':';
      for (std::size_t c = 0; c < s.cols(); ++c) std::cout << ' ' << s(r, c);
      std::cout << '\n';
    }
    const Json p = primitivity_block(sys);
    const Json pf = pf_block(sys);
    print_result("primitivity", p);
    print_result("pf", pf);
    if (pf.contains("eigenvalue")) {
      std::cout << "eigenvalue " << pf["eigenvalue"] << "\nright " << dump_compact(pf["right"]) << "\nleft "
                << dump_compact(pf["left"]) << '\n';
    }
    run.report.set("primitivity", p);
    run.report.set("pf", pf);
  };

  int iterate_n = -1;
  std::string iterate_region;
  auto* iterate_cmd = command("iterate", "Points of Phi^n(seed) inside a region");
  iterate_cmd->add_option("--n", iterate_n, "Iterations (default: enough to cover the region)");
  iterate_cmd->add_option("--region", iterate_region, "lo:hi per axis, comma separated (use --region=-4:4)");
  actions[iterate_cmd] = [&] {
    const auto& sys = run.system();
    const Box box = iterate_region.empty() ? default_region(sys) : parse_region(iterate_region, sys.dim());
    Cluster patch;
    if (iterate_n >= 0) {
      patch = generate_patch(sys, iterate_n, box, run.g.budget);
      std::cout << "n = " << iterate_n << '\n';
    } else {
      const auto cp = covering_patch(sys, box, 64, run.g.budget);
      patch = cp.patch;
      std::cout << "n = " << cp.iterations << (cp.covered ? " (region covered)" : " (region not fully covered)") << '\n';
    }
    print_points(sys, patch);
  };

  int kmax = 6;
  std::string legality_cluster;
  auto* legality = command("legality", "Search supertiles for the seed (or a given cluster)");
  legality->add_option("--kmax", kmax, "Largest supertile level")->check(CLI::NonNegativeNumber);
  legality->add_option("--cluster", legality_cluster, "label@x;label@x (default: the seed)");
  actions[legality] = [&] {
    const auto& sys = run.system();
    const Cluster p = legality_cluster.empty() ? sys.seed : parse_cluster(legality_cluster, sys);
    const Json b = legality_block(sys, p, kmax, run.g.budget);
    std::cout << b["result"].get<std::string>() << '\n';
    run.report.set("legality", b);
  };

  auto* lprime = command("lprime", "The difference lattice L'");
  actions[lprime] = [&] {
    const Json b = lprime_block(run.system());
    print_result("lprime", b);
    run.report.set("lprime", b);
  };

  int mmax = kDefaultMaxLevel;
  auto* modcoin = command("modcoin", "Search for a modular coincidence");
  modcoin->add_option("--mmax", mmax, "Largest level M")->check(CLI::PositiveNumber);
  actions[modcoin] = [&] {
    const auto& sys = run.system();
    const Json b = modcoin_block(sys, mmax);
    print_result("modcoin", b);
    for (const auto& w : b["witnesses"]) {
      std::cout << "  " << w["class"].get<std::string>() << " -> row " << w["row"].get<std::string>() << '\n';
    }
    run.report.set("modcoin", b);
  };

  int depth = 6;
  auto* windows = command("windows", "Window coset trees, measures and disjointness");
  windows->add_option("--depth", depth, "Coset tree depth")->check(CLI::PositiveNumber);
  windows->add_option("--mmax", mmax, "Largest coincidence level")->check(CLI::PositiveNumber);
  actions[windows] = [&] {
    const Json b = windows_block(run.system(), depth, mmax);
    print_result("windows", b);
    for (const auto& w : b["windows"]) {
      std::cout << "  " << w["color"].get<std::string>() << ": inner " << w["inner"].get<std::string>() << ", outer "
                << w["outer"].get<std::string>() << '\n';
    }
    std::cout << "model set: " << b["model_set"].get<std::string>() << '\n';
    run.report.set("windows", b);
  };

  std::string cell = "1/64";
  int iters = 200;
  std::string pgm_dir;
  auto* tiles = command("tiles", "Sampled tiles of the adjoint system");
  tiles->add_option("--cell", cell, "Cell size 1/N");
  tiles->add_option("--iters", iters, "Iteration cap")->check(CLI::PositiveNumber);
  tiles->add_option("--pgm", pgm_dir, "Write one PGM per tile into this directory");
  actions[tiles] = [&] {
    const auto& sys = run.system();
    const auto at = solve_adjoint(sys, parse_cell(cell), iters);
    const Json b = tiles_block(sys, at);
    print_result("tiles", b);
    for (std::size_t i = 0; i < at.size(); ++i) {
      const auto& t = b["tiles"][i];
      std::cout << "  " << t["color"].get<std::string>() << ": " << t["samples"] << " samples, gap "
                << t["hausdorff_gap"] << " cells";
      if (b.contains("volumes")) std::cout << ", volume " << b["volumes"][i];
      if (t.contains("exact_interval")) std::cout << ", interval " << dump_compact(t["exact_interval"]);
      std::cout << '\n';
      if (!pgm_dir.empty()) write_pgm(at[i], std::filesystem::path(pgm_dir) / (sys.colors[i] + ".pgm"));
    }
    run.report.set("tiles", b);
  };

  std::string alpha;
  int density_n = 8;
  int density_window = 0;
  auto* density = command("density", "dens(Lambda xor (Q^n alpha + Lambda)) for n = 0..N");
  density->add_option("--alpha", alpha, "Shift in L' (default: generators of L')");
  density->add_option("--n", density_n, "Largest n")->check(CLI::NonNegativeNumber);
  density->add_option("--window", density_window, "Averaging window F_N (default from |det Q|)");
  actions[density] = [&] {
    const auto& sys = run.system();
    const auto alphas = alpha.empty() ? default_shifts(sys) : parse_vectors(alpha, sys.dim());
    const int w = density_window > 0 ? density_window : std::max(default_density_window(sys), density_n + 2);
    const Json b = density_block(sys, alphas, w, density_n, run.g.budget);
    print_result("density", b);
    for (const auto& s : b["series"]) {
      std::cout << "  alpha " << dump_compact(s["alpha"]) << ": " << s["fit"].get<std::string>() << ", rate "
                << s["rate"] << "\n    " << dump_compact(s["values"]) << '\n';
    }
    run.report.set("density", b);
  };

  std::string shifts;
  std::string dump_path;
  auto* overlap = command("overlap", "Overlap graph and coincidence reachability");
  overlap->add_option("--shifts", shifts, "Shifts x;y (default: same-color generators of L')");
  overlap->add_option("--cell", cell, "Cell size 1/N of the sampled tiles");
  overlap->add_option("--dump", dump_path, "Write the graph as an edge list");
  actions[overlap] = [&] {
    const auto& sys = run.system();
    const auto xs = shifts.empty() ? default_shifts(sys) : parse_vectors(shifts, sys.dim());
    const auto at = solve_adjoint(sys, parse_cell(cell), 200);
    const Json b = overlap_block(sys, at, xs);
    print_result("overlap", b);
    std::cout << "  " << b["vertices"] << " vertices, " << b["edges"] << " edges, " << b["uncertain_edges"]
              << " uncertain\n";
    for (const auto& s : b["stuck"]) {
      std::cout << "  stuck: " << s["left"].get<std::string>() << ' ' << s["right"].get<std::string>() << ' '
                << dump_compact(s["displacement"]) << '\n';
    }
    if (!dump_path.empty()) {
      std::ofstream out(dump_path, std::ios::binary);
      out << dump_edge_list(sys, build_overlap_graph(sys, at, xs));
      if (!out) throw Error("cannot write " + dump_path);
    }
    run.report.set("overlap", b);
  };

  std::string cluster_text;
  int freq_n = 10;
  std::size_t translates = 10;
  auto* freq = command("freq", "Cluster frequencies over translated windows");
  freq->add_option("--cluster", cluster_text, "label@x;label@x")->required();
  freq->add_option("--n", freq_n, "Largest window F_n")->check(CLI::Range(2, 40));
  freq->add_option("--translates", translates, "Window translates")->check(CLI::PositiveNumber);
  actions[freq] = [&] {
    const auto& sys = run.system();
    const Json b = frequency_block(sys, {parse_cluster(cluster_text, sys)}, freq_n, translates, {}, run.g.budget);
    print_result("frequency", b);
    const auto& c = b["clusters"][0];
    std::cout << "  mean per scale " << dump_compact(c["mean"]) << ", spread " << c["spread"] << '\n';
    run.report.set("frequency", b);
  };

  Int diffract_window = 0;
  std::string weights_text;
  auto* diffract = command("diffract", "Finite-window diffraction estimate (heuristic)");
  diffract->add_option("--window", diffract_window, "Window side in lattice points");
  diffract->add_option("--weights", weights_text, "One weight per color, comma separated");
  actions[diffract] = [&] {
    const auto& sys = run.system();
    std::vector<double> w;
    if (!weights_text.empty()) {
      std::stringstream ss(weights_text);
      for (std::string item; std::getline(ss, item, ',');) w.push_back(std::stod(item));
    }
    const Int side = diffract_window > 0 ? diffract_window : (sys.dim() == 1 ? 4096 : 64);
    const Json b = diffraction_block(sys, side, w, run.g.budget);
    print_result("diffraction", b);
    for (const auto& p : b["peaks"]) {
      std::cout << "  peak at " << dump_compact(p["frequency"]) << ": " << p["intensity"] << '\n';
    }
    run.report.set("diffraction", b);
  };

  std::string out_path;
  std::string render_region;
  int render_n = -1;
  bool render_tiles = false;
  auto* render = command("render", "SVG of a patch, optionally with sampled tiles");
  render->add_option("--out", out_path, "SVG file")->required();
  render->add_option("--region", render_region, "lo:hi per axis (use --region=-4:4)");
  render->add_option("--n", render_n, "Iterations (default: enough to cover the region)");
  render->add_flag("--tiles", render_tiles, "Draw the tiles at --cell");
  render->add_option("--cell", cell, "Cell size 1/N of the sampled tiles");
  actions[render] = [&] {
    const auto& sys = run.system();
    const Box box = render_region.empty() ? default_region(sys) : parse_region(render_region, sys.dim());
    const Cluster patch =
        render_n >= 0 ? generate_patch(sys, render_n, box, run.g.budget) : covering_patch(sys, box, 64, run.g.budget).patch;
    const auto at = render_tiles ? solve_adjoint(sys, parse_cell(cell), 200) : std::vector<TileAttractor>{};
    render_svg(sys, patch, at, out_path);
    std::cout << "wrote " << out_path << " (" << patch.size() << " points)\n";
  };

  AnalysisOptions full_opt;
  std::string full_shifts;
  auto* full = command("full", "Every check plus the overall verdict");
  full->add_option("--kmax", full_opt.kmax, "Legality bound")->check(CLI::NonNegativeNumber);
  full->add_option("--mmax", full_opt.mmax, "Coincidence bound")->check(CLI::PositiveNumber);
  full->add_option("--depth", full_opt.window_depth, "Window depth")->check(CLI::PositiveNumber);
  full->add_option("--shifts", full_shifts, "Shifts for density and overlap");
  actions[full] = [&] {
    const auto& sys = run.system();
    full_opt.budget = run.g.budget;
    if (!full_shifts.empty()) full_opt.shifts = parse_vectors(full_shifts, sys.dim());
    run.report = run_full(sys, full_opt);
    for (const auto& name : report_blocks()) print_result(name, run.report.block(name));
    const Json& o = run.report.overall();
    std::cout << "overall: " << o["verdict"].get<std::string>() << " [" << o["level"].get<std::string>() << "]\n";
    std::cout << "model set: " << o["items"]["model_set"].get<std::string>() << '\n';
  };

  try {
    app.parse(argc, argv);
    set_thread_count(run.g.jobs);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    // --json replaces the text summary: silence it while the action runs.
    std::ostringstream discard;
    auto* text_buf = run.g.json ? std::cout.rdbuf(discard.rdbuf()) : nullptr;
    try {
      for (auto* sub : app.get_subcommands()) actions.at(sub)();
    } catch (...) {
      if (text_buf) std::cout.rdbuf(text_buf);
      throw;
    }
    if (text_buf) std::cout.rdbuf(text_buf);
    run.finish();
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kExitBudget;
  } catch (const SpecError& e) {
    std::cerr << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
