#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "latsub/coincidence.hpp"
#include "latsub/overlap.hpp"
#include "latsub/parallel.hpp"
#include "latsub/spec_io.hpp"
#include "test_support.hpp"

using namespace latsub;
using latsub::test::bundled;
using latsub::test::load;

namespace {

const char* kBinary = R"({
  "name": "binary", "dim": 1, "colors": ["a"], "lattice_basis": [["1"]],
  "expansion": [[2]], "digits": [[[[0],[1]]]], "seed": [[[0]]]
})";

std::vector<TileAttractor> tiles_for(const SubstitutionSystem& sys) {
  return solve_adjoint(sys, sys.dim() == 1 ? 64 : 32);
}

// Expected vertex set for the 1-d unit-interval systems: every pair of colors
// at displacement 0 (intervals [0,1] overlap only when aligned).
std::vector<OverlapClass> aligned_pairs(std::size_t m) {
  std::vector<OverlapClass> out;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out.push_back({i, j, {0}});
  return out;
}

}  // namespace

TEST_CASE("coincidence classes") {
  CHECK(OverlapClass{1, 1, {0, 0}}.is_coincidence());
  CHECK_FALSE(OverlapClass{1, 2, {0, 0}}.is_coincidence());
  CHECK_FALSE(OverlapClass{1, 1, {0, 1}}.is_coincidence());
}

TEST_CASE("one-color binary system has only the coincidence") {
  const auto sys = parse_spec_text(kBinary);
  const auto g = build_overlap_graph(sys, tiles_for(sys), {{1}});
  REQUIRE(g.vertices.size() == 1);
  CHECK(g.vertices[0].is_coincidence());
  CHECK(g.exact);
  const auto r = coincidence_reachability(g);
  CHECK(r.kind() == ReachKind::AllReach);
  CHECK(r.agree);
}

TEST_CASE("period doubling reaches a coincidence from every overlap") {
  const auto sys = load("period-doubling");
  const auto g = build_overlap_graph(sys, tiles_for(sys), {{1}});
  auto got = g.vertices;
  std::sort(got.begin(), got.end());
  CHECK(got == aligned_pairs(2));
  CHECK(std::all_of(g.edges.begin(), g.edges.end(), [](const OverlapEdge& e) { return e.certain; }));
  const auto r = coincidence_reachability(g);
  CHECK(r.kind() == ReachKind::AllReach);
  CHECK(r.agree);
  CHECK(r.exact);
}

TEST_CASE("Thue-Morse overlap (a, b, 0) never reaches a coincidence") {
  const auto sys = load("thue-morse");
  const auto g = build_overlap_graph(sys, tiles_for(sys), {{1}});
  const auto r = coincidence_reachability(g);
  CHECK(r.kind() == ReachKind::Stuck);
  CHECK(r.agree);
  CHECK(r.exact);
  const std::size_t ab = g.find({0, 1, {0}});
  REQUIRE(ab != OverlapGraph::npos);
  CHECK(std::find(r.pessimistic.stuck.begin(), r.pessimistic.stuck.end(), ab) != r.pessimistic.stuck.end());
  // a -> ab, b -> ba: (a, b, 0) only leads to (a, b, 0) and (b, a, 0)
  for (const auto& e : g.edges)
    if (e.from == ab) CHECK_FALSE(g.vertices[e.to].is_coincidence());
}

TEST_CASE("single coincidence vertex") {
  OverlapGraph g;
  g.vertices.push_back({0, 0, {0}});
  CHECK(coincidence_reachability(g).kind() == ReachKind::AllReach);
  g.edges.push_back({0, 0, true});
  CHECK(coincidence_reachability(g).kind() == ReachKind::AllReach);
}

TEST_CASE("graph verdicts on every bundled system") {
  for (const auto& name : bundled()) {
    CAPTURE(name);
    const auto sys = load(name);
    const auto at = tiles_for(sys);
    const auto shifts = default_shifts(sys);
    const auto g = build_overlap_graph(sys, at, shifts);
    const auto r = coincidence_reachability(g);

    SUBCASE("closure and absorption") {
      // every edge target is a vertex, every vertex but the roots has a predecessor
      std::vector<char> has_pred(g.vertices.size(), 0);
      for (const auto& e : g.edges) {
        REQUIRE(e.to < g.vertices.size());
        has_pred[e.to] = 1;
      }
      for (std::size_t v = 0; v < g.vertices.size(); ++v)
        if (!std::binary_search(g.roots.begin(), g.roots.end(), v)) CHECK(has_pred[v]);
      for (const auto& e : g.edges)
        if (g.vertices[e.from].is_coincidence()) CHECK(g.vertices[e.to].is_coincidence());
      CHECK(g.absorption_violations.empty());
      // |z| bounded by the tile hull differences
      for (const auto& v : g.vertices)
        for (Int z : v.displacement) CHECK(std::abs(z) <= 4);
    }
    SUBCASE("verdict monotonicity") {
      CHECK(r.optimistic.stuck.size() <= r.pessimistic.stuck.size());
      for (std::size_t v : r.optimistic.stuck)
        CHECK(std::binary_search(r.pessimistic.stuck.begin(), r.pessimistic.stuck.end(), v));
      if (r.pessimistic.kind == ReachKind::AllReach) CHECK(r.optimistic.kind == ReachKind::AllReach);
    }
    SUBCASE("agreement with the modular coincidence search") {
      const auto mc = find_modular_coincidence(sys);
      CHECK(r.agree);
      CHECK((r.kind() == ReachKind::AllReach) == mc.found);
      if (sys.dim() == 1) CHECK(r.exact);
    }
  }
}

TEST_CASE("uncertain edges only enlarge the reachable set") {
  // Drop the certainty of random edges and compare.
  const auto sys = load("chair");
  auto g = build_overlap_graph(sys, tiles_for(sys), default_shifts(sys));
  for (std::size_t k = 0; k < g.edges.size(); k += 3) g.edges[k].certain = false;
  const auto r = coincidence_reachability(g);
  for (std::size_t v : r.optimistic.stuck)
    CHECK(std::binary_search(r.pessimistic.stuck.begin(), r.pessimistic.stuck.end(), v));
  CHECK(r.optimistic.kind == ReachKind::AllReach);
}

TEST_CASE("default shifts generate L' from same-color differences") {
  for (const auto& name : bundled()) {
    CAPTURE(name);
    const auto sys = load(name);
    const auto shifts = default_shifts(sys);
    CHECK(hnf(shifts, sys.dim()) == compute_lprime(sys).lprime);
  }
  // chair: the HNF basis vector (0,2) is not a same-color difference
  const auto chair = load("chair");
  CHECK_THROWS_AS(build_overlap_graph(chair, tiles_for(chair), {{0, 2}}), Error);
}

TEST_CASE("overlap and density criteria agree") {
  SUBCASE("period doubling") {
    const auto sys = load("period-doubling");
    const auto rows = overlap_density_link(sys, tiles_for(sys), {{1}, {0}}, 14, 7);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].density == RateKind::Decaying);
    CHECK(rows[0].graph == ReachKind::AllReach);
    CHECK(rows[0].consistent);
    for (double v : rows[1].complement) CHECK(v == 0.0);
    CHECK(rows[1].consistent);
  }
  SUBCASE("Thue-Morse") {
    const auto sys = load("thue-morse");
    const auto rows = overlap_density_link(sys, tiles_for(sys), {{1}}, 14, 7);
    CHECK(rows[0].density == RateKind::NonVanishing);
    CHECK(*std::min_element(rows[0].complement.begin() + 1, rows[0].complement.end()) >= 0.2);
    CHECK(rows[0].graph == ReachKind::Stuck);
    CHECK(rows[0].consistent);
  }
}

TEST_CASE("edge-list dump") {
  const auto sys = load("thue-morse");
  const auto g = build_overlap_graph(sys, tiles_for(sys), {{1}});
  const auto text = dump_edge_list(sys, g);
  std::istringstream in(text);
  std::string line;
  std::size_t v = 0, e = 0;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("e ", 0) == 0) ++e;
  }
  CHECK(v == g.vertices.size());
  CHECK(e == g.edges.size());
  CHECK(text.find("v 0 a a 0 1 1") != std::string::npos);
}

TEST_CASE("overlap graphs do not depend on the thread count") {
  const auto sys = load("gasket");
  set_thread_count(1);
  const auto a = dump_edge_list(sys, build_overlap_graph(sys, tiles_for(sys), default_shifts(sys)));
  set_thread_count(6);
  const auto b = dump_edge_list(sys, build_overlap_graph(sys, tiles_for(sys), default_shifts(sys)));
  set_thread_count(1);
  CHECK(a == b);
}

TEST_CASE("overlap input checks") {
  const auto sys = load("period-doubling");
  auto at = tiles_for(sys);
  CHECK_THROWS_AS(build_overlap_graph(sys, {at[0]}, {{1}}), DimensionError);
  CHECK_THROWS_AS(build_overlap_graph(sys, at, {{1, 0}}), DimensionError);
  at[0].hausdorff_gap = 10.0;
  CHECK_THROWS_AS(build_overlap_graph(sys, at, {{1}}), Error);
}
