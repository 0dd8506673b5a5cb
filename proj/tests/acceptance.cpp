// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "latsub/analysis.hpp"
#include "latsub/coincidence.hpp"
#include "latsub/spec_io.hpp"
#include "latsub/substitution.hpp"

using namespace latsub;

namespace {

const std::vector<std::string> kSystems{"abcd", "gasket", "ex310", "period-doubling", "thue-morse", "chair"};

SubstitutionSystem load(const std::string& name) {
  return parse_spec(std::string(LATSUB_SYSTEMS_DIR) + "/" + name + ".spec");
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures += " [failed: " + what + "]";
    }
  }
};

std::set<std::pair<std::string, std::string>> witness_set(const Json& modcoin) {
  std::set<std::pair<std::string, std::string>> s;
  for (const auto& w : modcoin.at("witnesses")) s.emplace(w.at("class"), w.at("row"));
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reports written by the CLI, keyed by system, from the --jobs 1 run.
std::map<std::string, Json> g_reports;

void determinism(Outcome& o) {
  const auto dir = std::filesystem::temp_directory_path() / "latsub_acceptance";
  std::filesystem::create_directories(dir);
  for (const auto& name : kSystems) {
    std::string texts[2];
    const unsigned jobs[2] = {1, 4};
    for (int r = 0; r < 2; ++r) {
      const auto out = dir / (name + "_j" + std::to_string(jobs[r]) + ".json");
      std::filesystem::remove(out);
      const std::string cmd = std::string("\"") + LATSUB_CLI + "\" full \"" + LATSUB_SYSTEMS_DIR + "/" + name +
                              ".spec\" --jobs " + std::to_string(jobs[r]) + " --report \"" + out.string() +
                              "\" > /dev/null";
      const int rc = std::system(cmd.c_str());
      o.require(rc == 0, name + " exit status " + std::to_string(rc));
      texts[r] = slurp(out);
    }
    const bool same = !texts[0].empty() && texts[0] == texts[1];
    o.require(same, name + " reports differ");
    if (!texts[0].empty()) g_reports[name] = Json::parse(texts[0]);
  }
  o.detail << g_reports.size() << " systems, --jobs 1 vs 4 byte-identical";
}

void abcd_coincidence(Outcome& o) {
  const auto sys = load("abcd");
  const Json b = modcoin_block(sys, 8);
  const std::set<std::pair<std::string, std::string>> expected{{"3 mod 6", "d"}, {"5 mod 6", "b"}};
  o.require(b.at("found").get<bool>() && b.at("level") == 1, "coincidence at M=1");
  o.require(witness_set(b) == expected, "witness classes");
  o.detail << "M=" << b.at("level") << " witnesses";
  for (const auto& [cls, row] : witness_set(b)) o.detail << " (" << cls << " -> " << row << ")";
  const auto it = g_reports.find("abcd");
  o.require(it != g_reports.end(), "full report present");
  if (it != g_reports.end()) {
    const Json& ov = it->second.at("overall");
    o.require(ov.at("verdict") == "pure point (modular coincidence at M=1)", "overall verdict");
    o.require(ov.at("items").at("model_set") == "regular model set", "model set");
    o.detail << "; overall \"" << ov.at("verdict").get<std::string>() << "\" / "
             << ov.at("items").at("model_set").get<std::string>();
  }
}

void abcd_windows(Outcome& o) {
  const auto sys = load("abcd");
  const auto w6 = window_measures(sys, 6);
  const auto w3 = window_measures(sys, 3);
  auto dist = [](const WindowMeasures& w) {
    double d = 0.0;
    for (const auto& x : w.outer) d = std::max(d, std::abs(x.convert_to<double>() - 0.25));
    return d;
  };
  o.require(w6.residual <= 1e-3, "outer residual <= 1e-3");
  o.require(dist(w6) < dist(w3), "outer estimates approach 1/4");
  bool disjoint = true;
  for (int k = 1; k <= 6; ++k) disjoint = disjoint && interior_disjointness(sys, k).disjoint;
  o.require(disjoint, "interiors disjoint at depth <= 6");
  o.detail << "residual " << w6.residual << " at depth 6, max |w - 1/4| " << dist(w3) << " -> " << dist(w6);
}

void gasket(Outcome& o) {
  const auto sys = load("gasket");
  const auto s = substitution_matrix(sys);
  const auto pf = pf_data(s, sys.expansion);
  const auto prim = is_primitive(s);
  const auto legal = legality_check(sys, sys.seed, 3);
  const auto at = solve_adjoint(sys, 64);
  const auto v = volume_check(sys, at);
  o.require(std::abs(pf.eigenvalue - 4.0) <= 1e-9, "PF eigenvalue 4");
  o.require(prim.primitive && prim.power == 2, "primitivity power 2");
  o.require(legal.legal && legal.k <= 3, "seed legal with k <= 3");
  for (double vol : v.volumes) o.require(std::abs(vol - 1.0) <= 0.05, "volume 1 +- 0.05");
  o.require(std::abs(v.covering_multiplicity - 1.0) <= 0.05, "multiplicity 1 +- 0.05");
  o.detail << "eigenvalue " << pf.eigenvalue << ", l=" << prim.power << ", legal k=" << legal.k << ", volumes";
  for (double vol : v.volumes) o.detail << ' ' << vol;
  o.detail << ", multiplicity " << v.covering_multiplicity;
}

void ex310(Outcome& o) {
  const auto sys = load("ex310");
  const auto legal = legality_check(sys, sys.seed, 6);
  o.require(!legal.legal && legal.verdict() == "NotFoundUpTo(6)", "NotFoundUpTo(6)");
  const auto at = solve_adjoint(sys, 64);
  const double cell = sys.lattice.to_ambient({at.front().cell_size()}).front();
  for (const auto& a : at) {
    double lo = 1e9, hi = -1e9;
    a.for_each_sample([&](const IntVec& c) {
      const double x = sys.lattice.to_ambient(a.position(c)).front();
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    });
    o.require(std::abs(lo) <= cell && std::abs(hi - 1.0) <= cell, "attractor [0,1] within one cell");
    o.detail << sys.colors[a.color] << " [" << lo << ", " << hi << "] ";
  }
  const auto v = volume_check(sys, at);
  o.require(std::abs(v.covering_multiplicity - 2.0) <= 0.05, "multiplicity 2 +- 0.05");
  o.detail << "(cell " << cell << "), " << legal.verdict() << ", multiplicity " << v.covering_multiplicity;
}

void period_doubling(Outcome& o) {
  const auto sys = load("period-doubling");
  const Json b = modcoin_block(sys, 8);
  o.require(b.at("level") == 1 && witness_set(b) == std::set<std::pair<std::string, std::string>>{{"0 mod 2", "a"}},
            "class 0 mod 2 -> a at M=1");
  const auto s = density_symdiff_series(sys, {1}, 12, 16);
  const auto fit = rate_fit(s);
  o.require(s.value(8) <= 0.02, "density at n=8 <= 0.02");
  o.require(nonincreasing_within_margin(s), "monotone within margin");
  o.require(fit.r <= 0.6, "rate <= 0.6");
  const auto at = solve_adjoint(sys, 64);
  const auto g = build_overlap_graph(sys, at, {{1}});
  const auto reach = coincidence_reachability(g);
  o.require(g.exact && reach.agree && reach.kind() == ReachKind::AllReach, "overlap AllReach, exact");
  std::vector<IntVec> hs;
  for (Int k = 0; k < 10; ++k) hs.push_back({101 * k});
  const Cluster a(1, std::vector<std::vector<IntVec>>{{IntVec{0}}, {}});
  const auto f = cluster_frequency(sys, a, VanHoveSequence::unit(1, {12}), hs);
  o.require(std::abs(f.mean.back() - 2.0 / 3.0) <= 0.01, "freq(a) = 2/3 +- 0.01");
  o.require(f.spread <= 0.02, "UCF spread <= 0.02");
  o.detail << "witness 0 mod 2 -> a, dens(n=8) " << s.value(8) << ", r " << fit.r << ", overlap "
           << to_string(reach.kind()) << (g.exact ? " exact" : " sampled") << ", freq(a) " << f.mean.back()
           << " spread " << f.spread;
}

void thue_morse(Outcome& o) {
  const auto sys = load("thue-morse");
  const auto coin = find_modular_coincidence(sys, 8);
  o.require(!coin.found && coin.search_bound == 8, "no coincidence for M <= 8");
  const auto s = density_symdiff_series(sys, {1}, 12, 16);
  const auto fit = rate_fit(s);
  o.require(s.value(8) >= 0.2, "density at n=8 >= 0.2");
  const auto at = solve_adjoint(sys, 64);
  const auto g = build_overlap_graph(sys, at, {{1}});
  const auto reach = coincidence_reachability(g);
  o.require(g.exact && reach.agree && reach.kind() == ReachKind::Stuck, "overlap Stuck, exact");
  o.require(!coin.found && fit.kind == RateKind::NonVanishing && reach.kind() == ReachKind::Stuck,
            "negative signals agree");
  o.detail << "M<=8 none, dens(n=8) " << s.value(8) << " (" << to_string(fit.kind) << "), overlap "
           << to_string(reach.kind()) << (g.exact ? " exact" : " sampled");
}

void cross_consistency(Outcome& o) {
  for (const auto& name : kSystems) {
    const auto it = g_reports.find(name);
    o.require(it != g_reports.end(), name + " report present");
    if (it == g_reports.end()) continue;
    const Json& blocks = it->second.at("blocks");
    const bool coin = blocks.at("modcoin").at("found").get<bool>();
    const bool dens = blocks.at("density").at("result") == "decaying";
    const bool over = blocks.at("overlap").at("result") == "AllReach";
    o.require(coin == dens && dens == over, name + " signals disagree");
    o.require(it->second.at("overall").at("consistent").get<bool>(), name + " report marks inconsistency");
    o.detail << (o.detail.tellp() > 0 ? ", " : "") << name << (coin ? " pure point" : " not pure point");
  }
}

IntVec random_combination(const std::vector<IntVec>& cols, std::size_t d, std::mt19937_64& gen, Int r) {
  std::uniform_int_distribution<Int> u(-r, r);
  IntVec v(d, 0);
  for (const auto& c : cols) {
    const Int f = u(gen);
    for (std::size_t i = 0; i < d; ++i) v[i] += f * c[i];
  }
  return v;
}

void properties(Outcome& o) {
  std::mt19937_64 gen(20261018);
  auto uni = [&](Int lo, Int hi) { return std::uniform_int_distribution<Int>(lo, hi)(gen); };

  int hnf_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = static_cast<std::size_t>(uni(1, 3));
    std::vector<IntVec> gens(static_cast<std::size_t>(uni(1, 4)));
    for (auto& g : gens) {
      g.resize(d);
      for (auto& x : g) x = uni(-9, 9);
    }
    std::vector<IntVec> other = gens;
    for (int op = 0; op < 6 && other.size() >= 2; ++op) {
      const auto a = static_cast<std::size_t>(uni(0, static_cast<Int>(other.size()) - 1));
      const auto b = (a + static_cast<std::size_t>(uni(1, static_cast<Int>(other.size()) - 1))) % other.size();
      const Int f = uni(-3, 3);
      for (std::size_t i = 0; i < d; ++i) other[a][i] += f * other[b][i];
      std::swap(other[a], other[b]);
    }
    other.push_back(random_combination(other, d, gen, 2));
    hnf_ok += hnf(gens, d) == hnf(other, d) ? 1 : 0;
  }
  o.require(hnf_ok == 1000, "hnf canonicity");

  int reduce_ok = 0;
  std::vector<CosetSpace> spaces;
  for (const auto& name : kSystems) {
    const auto sys = load(name);
    spaces.emplace_back(compute_lprime(sys).lprime, sys.expansion, 4);
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& sp = spaces[static_cast<std::size_t>(trial) % spaces.size()];
    const std::size_t d = sp.lprime().dim();
    const int k = static_cast<int>(uni(0, 4));
    IntVec x(d), y(d);
    for (auto& v : x) v = uni(-1000, 1000);
    for (auto& v : y) v = uni(-1000, 1000);
    const IntVec rx = sp.reduce(x, k).rep;
    const IntVec ry = sp.reduce(y, k).rep;
    const IntVec shift = random_combination(sp.modulus(k).int_columns(), d, gen, 5);
    const bool ok = sp.reduce(add(x, y), k) == sp.reduce(add(rx, ry), k) && sp.reduce(rx, k).rep == rx &&
                    sp.reduce(add(x, shift), k) == sp.reduce(x, k);
    reduce_ok += ok ? 1 : 0;
  }
  o.require(reduce_ok == 1000, "reduce_mod homomorphism");

  int count_ok = 0, count_total = 0, sub_ok = 0, sub_total = 0, absorb = 0;
  for (const auto& name : kSystems) {
    const auto sys = load(name);
    const IntMatrix s = substitution_matrix(sys);
    std::vector<BigInt> expect;
    for (auto c : sys.seed.counts()) expect.emplace_back(c);
    for (int n = 1; n <= 4; ++n) {
      std::vector<BigInt> next(expect.size(), 0);
      for (std::size_t i = 0; i < next.size(); ++i) {
        for (std::size_t j = 0; j < next.size(); ++j) next[i] += BigInt(s(i, j)) * expect[j];
      }
      expect = next;
      const auto got = iterate(sys, sys.seed, n).counts();
      bool same = true;
      for (std::size_t i = 0; i < got.size(); ++i) same = same && BigInt(got[i]) == expect[i];
      count_ok += same ? 1 : 0;
      ++count_total;
    }

    const auto lp = compute_lprime(sys).lprime;
    const auto cols = lp.int_columns();
    const int wn = sys.dim() == 1 ? (sys.expansion.absdet() == 2 ? 11 : 6) : 5;
    for (int trial = 0; trial < 20; ++trial) {
      const IntVec a = random_combination(cols, sys.dim(), gen, 3);
      const IntVec b = random_combination(cols, sys.dim(), gen, 3);
      const auto sa = density_symdiff_series(sys, lp, a, 3, wn);
      const auto sb = density_symdiff_series(sys, lp, b, 3, wn);
      const auto sab = density_symdiff_series(sys, lp, add(a, b), 3, wn);
      for (std::size_t n = 0; n < sab.size(); ++n) {
        const Int margin = sa.window_size - sa.compared[n];
        sub_ok += sab.differing[n] <= sa.differing[n] + sb.differing[n] + margin ? 1 : 0;
        ++sub_total;
      }
    }

    const auto at = solve_adjoint(sys, 64);
    absorb += static_cast<int>(build_overlap_graph(sys, at, default_shifts(sys)).absorption_violations.size());
  }
  o.require(count_ok == count_total, "count homomorphism");
  o.require(sub_ok == sub_total, "subadditivity");
  o.require(absorb == 0, "coincidence absorption");
  o.detail << "hnf " << hnf_ok << "/1000, reduce_mod " << reduce_ok << "/1000, counts " << count_ok << "/"
           << count_total << ", subadditive " << sub_ok << "/" << sub_total << ", absorption violations " << absorb;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void(Outcome&)>>> criteria{
      {9, determinism},  {1, abcd_coincidence}, {2, abcd_windows},      {3, gasket},    {4, ex310},
      {5, period_doubling}, {6, thue_morse},    {7, cross_consistency}, {8, properties}};
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.failures += std::string(" [error: ") + e.what() + "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail.str() << o.failures;
    line.precision(2);
    line << std::fixed << " (" << secs << " s)";
    lines[id] = line.str();
    all = all && o.pass;
  }
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  return all ? 0 : 1;
}
