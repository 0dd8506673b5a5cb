#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "latsub/analysis.hpp"
#include "latsub/parallel.hpp"
#include "test_support.hpp"

using namespace latsub;
using latsub::test::load;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "latsub_test_report";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Runs the CLI with stdout captured to a file; returns the exit status.
int cli(const std::string& args, std::string* out = nullptr) {
  const auto log = scratch("cli.out");
  const std::string cmd = std::string("\"") + LATSUB_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  if (out) *out = slurp(log);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string spec(const std::string& name) { return std::string(LATSUB_SYSTEMS_DIR) + "/" + name + ".spec"; }

}  // namespace

TEST_CASE("empty report lists every block as not run") {
  const AnalysisReport r("empty");
  const Json j = Json::parse(r.text());
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["system"] == "empty");
  CHECK(j["blocks"].size() == report_blocks().size());
  for (const auto& name : report_blocks()) CHECK(j["blocks"][name]["verdict"] == "not run");
  CHECK(j["overall"]["verdict"] == "not run");
}

TEST_CASE("report blocks are validated") {
  AnalysisReport r("x");
  CHECK_THROWS_AS(r.set("nonsense", {{"verdict", "evidence"}}), Error);
  CHECK_THROWS_AS(r.set("pf", {{"result", "no verdict"}}), Error);
  CHECK_THROWS_AS(r.block("pf"), Error);
  r.set("pf", {{"verdict", "evidence"}, {"result", "ok"}});
  CHECK(r.has("pf"));
}

TEST_CASE("report text does not depend on insertion order") {
  AnalysisReport a("s"), b("s");
  a.set("pf", {{"verdict", "evidence"}, {"z", 1}, {"a", 2}});
  a.set("lprime", {{"verdict", "evidence"}});
  b.set("lprime", {{"verdict", "evidence"}});
  b.set("pf", {{"a", 2}, {"verdict", "evidence"}, {"z", 1}});
  CHECK(a.text() == b.text());
  CHECK(a.text().back() == '\n');
}

TEST_CASE("emit_report writes identical bytes and reports I/O failure") {
  const auto sys = load("period-doubling");
  AnalysisReport r(sys.name);
  r.set("modcoin", modcoin_block(sys, 8));
  const auto p1 = scratch("a.json");
  const auto p2 = scratch("b.json");
  emit_report(r, p1);
  emit_report(r, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(p1) == r.text());
  CHECK_THROWS_AS(emit_report(r, scratch("missing-dir") / "deeper" / "r.json"), Error);
}

TEST_CASE("tidy keeps ten significant digits") {
  CHECK(tidy(0.0) == 0.0);
  CHECK(tidy(1.0 / 3.0) == 0.3333333333);
  CHECK(tidy(2.0 / 3.0 * 1e-7) == 6.666666667e-8);
  CHECK(tidy(-4.0) == -4.0);
}

TEST_CASE("modcoin block of abcd lists the two witness classes") {
  const Json b = modcoin_block(load("abcd"), 8);
  CHECK(b["verdict"] == "certified");
  CHECK(b["level"] == 1);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& w : b["witnesses"]) got.emplace(w["class"], w["row"]);
  CHECK(got == std::set<std::pair<std::string, std::string>>{{"3 mod 6", "d"}, {"5 mod 6", "b"}});
}

TEST_CASE("negative modcoin result is inconclusive with its bound") {
  const Json b = modcoin_block(load("thue-morse"), 5);
  CHECK(b["verdict"] == "inconclusive");
  CHECK(b["bound"] == 5);
  CHECK(b["result"] == "no coincidence found (M≤5)");
  CHECK(b["witnesses"].empty());
}

TEST_CASE("legality block") {
  const Json ex = legality_block(load("ex310"), load("ex310").seed, 6);
  CHECK(ex["result"] == "NotFoundUpTo(6)");
  CHECK(ex["verdict"] == "inconclusive");
  CHECK(ex["bound"] == 6);
  const auto gasket = load("gasket");
  const Json g = legality_block(gasket, gasket.seed, 3);
  CHECK(g["verdict"] == "certified");
  CHECK(g["k"].get<int>() <= 3);
}

TEST_CASE("full reports: overall verdicts and verdict soundness") {
  // Blocks whose result comes from exact integer or rational arithmetic.
  const std::set<std::string> exact{"primitivity", "fixed_point", "legality", "modcoin"};
  const std::map<std::string, std::string> overall{
      {"abcd", "pure point (modular coincidence at M=1)"},
      {"period-doubling", "pure point (modular coincidence at M=1)"},
      {"thue-morse", "no coincidence found (M≤8); density non-vanishing; overlap Stuck"},
      {"ex310", "no coincidence found (M≤8); density non-vanishing; overlap Stuck"}};
  for (const auto& [name, verdict] : overall) {
    CAPTURE(name);
    const Json j = run_full(load(name)).to_json();
    CHECK(j["overall"]["verdict"] == verdict);
    CHECK(j["overall"]["consistent"] == true);
    for (const auto& block : report_blocks()) {
      CAPTURE(block);
      const auto& b = j["blocks"][block];
      const std::string v = b["verdict"];
      CHECK(std::set<std::string>{"certified", "evidence", "inconclusive", "refuted"}.count(v) == 1);
      if (v != "certified") continue;
      const bool exact_overlap = block == "overlap" && b["mode"] == "exact intervals";
      CHECK((exact.count(block) == 1 || exact_overlap));
    }
    CHECK(j["blocks"]["diffraction"]["heuristic"] == true);
  }
}

TEST_CASE("overall verdict from partial reports") {
  AnalysisReport r("x");
  Json o = overall_verdict(r, 8);
  CHECK(o["verdict"] == "modular coincidence not run");
  CHECK(o["consistent"] == true);
  CHECK(o["level"] == "inconclusive");

  r.set("modcoin", {{"verdict", "inconclusive"}, {"result", "no coincidence found (M≤8)"}, {"found", false}, {"level", 0}});
  r.set("density", {{"verdict", "evidence"}, {"result", "decaying"}, {"series", Json::array()}});
  o = overall_verdict(r, 8);
  CHECK(o["verdict"] == "no coincidence found (M≤8); density decaying");
  CHECK(o["consistent"] == false);
}

TEST_CASE("full report is independent of the thread count") {
  const auto sys = load("period-doubling");
  set_thread_count(1);
  const std::string one = run_full(sys).text();
  set_thread_count(4);
  const std::string four = run_full(sys).text();
  set_thread_count(1);
  CHECK(one == four);
}

TEST_CASE("command-line value syntax") {
  CHECK(parse_vector("3", 1) == IntVec{3});
  CHECK(parse_vector(" 1, -2 ", 2) == IntVec{1, -2});
  CHECK_THROWS_AS(parse_vector("1,2", 1), Error);
  CHECK_THROWS_AS(parse_vector("x", 1), Error);
  CHECK(parse_vectors("1,0;0,2", 2) == std::vector<IntVec>{{1, 0}, {0, 2}});

  const Box b = parse_region("-4:4", 2);
  CHECK(b.lo == IntVec{-4, -4});
  CHECK(b.hi == IntVec{4, 4});
  const Box c = parse_region("0:3,-1:2", 2);
  CHECK(c.lo == IntVec{0, -1});
  CHECK(c.hi == IntVec{3, 2});
  CHECK_THROWS_AS(parse_region("3:1", 1), Error);
  CHECK_THROWS_AS(parse_region("0:1,0:1,0:1", 2), Error);

  const auto sys = load("abcd");
  const Cluster p = parse_cluster("a@0; b@1", sys);
  CHECK(p.size() == 2);
  CHECK(p.contains(0, {0}));
  CHECK(p.contains(1, {1}));
  CHECK_THROWS_AS(parse_cluster("z@0", sys), Error);
  CHECK_THROWS_AS(parse_cluster("a0", sys), Error);

  CHECK(parse_cell("1/64") == 64);
  CHECK(parse_cell("32") == 32);
  CHECK_THROWS_AS(parse_cell("2/64"), Error);
  CHECK_THROWS_AS(parse_cell("0"), Error);
}

TEST_CASE("cli exit codes and outputs") {
  std::string out;
  CHECK(cli("legality " + spec("ex310") + " --kmax 6", &out) == 0);
  CHECK(out == "NotFoundUpTo(6)\n");

  CHECK(cli("modcoin " + spec("abcd"), &out) == 0);
  CHECK(out.find("3 mod 6 -> row d") != std::string::npos);
  CHECK(out.find("5 mod 6 -> row b") != std::string::npos);

  // Budget exhaustion has its own code, distinct from other failures.
  CHECK(cli("--budget 100 iterate " + spec("abcd") + " --n 8 --region=-1000:1000", &out) == 3);
  CHECK(out.find("budget exhausted") != std::string::npos);

  const auto bad = scratch("truncated.spec");
  std::ofstream(bad) << "{\"name\": \"x\", \"dim\": 1";
  CHECK(cli("validate \"" + bad.string() + "\"", &out) == 2);
  CHECK(out.find("schema violation") != std::string::npos);

  CHECK(cli("freq " + spec("abcd") + " --cluster z@0") == 2);
  CHECK(cli("nonsense") != 0);

  const auto report = scratch("cli-report.json");
  CHECK(cli("lprime " + spec("gasket") + " --report \"" + report.string() + "\"") == 0);
  const Json j = Json::parse(slurp(report));
  CHECK(j["blocks"]["lprime"]["index"] == "2");
  CHECK(j["blocks"]["modcoin"]["verdict"] == "not run");

  const auto svg = scratch("pd.svg");
  CHECK(cli("render " + spec("period-doubling") + " --out \"" + svg.string() + "\"") == 0);
  CHECK(slurp(svg).rfind("<?xml", 0) == 0);
}
