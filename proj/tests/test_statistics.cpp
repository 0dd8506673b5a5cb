#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "latsub/parallel.hpp"
#include "latsub/statistics.hpp"
#include "latsub/substitution.hpp"
#include "test_support.hpp"

using namespace latsub;
using latsub::test::bundled;
using latsub::test::load;

namespace {

Cluster one_point(std::size_t colors, std::size_t dim, std::size_t color) {
  std::vector<std::vector<IntVec>> pts(colors);
  pts[color].push_back(IntVec(dim, 0));
  return Cluster(dim, pts);
}

// Window sizes small enough for brute force.
int small_window(const std::string& name) {
  if (name == "abcd") return 7;
  if (name == "ex310") return 5;
  if (name == "gasket" || name == "chair") return 5;
  return 11;
}

// Differing points of Lambda against s + Lambda on the domain
// {x in W : x - s in W}, by merging sorted per-color lists.
std::pair<Int, Int> brute_symdiff(const Cluster& lambda, const std::vector<IntVec>& window, const IntVec& s) {
  const std::set<IntVec> w(window.begin(), window.end());
  std::set<IntVec> domain;
  for (const auto& x : window)
    if (w.count(sub(x, s))) domain.insert(x);
  std::set<IntVec> differing;
  for (std::size_t c = 0; c < lambda.colors(); ++c) {
    std::vector<IntVec> a, b;
    for (const auto& x : lambda[c]) {
      if (domain.count(x)) a.push_back(x);
      const IntVec y = add(x, s);
      if (domain.count(y)) b.push_back(y);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i] < b[j])) {
        differing.insert(a[i++]);
      } else if (i == a.size() || b[j] < a[i]) {
        differing.insert(b[j++]);
      } else {
        ++i;
        ++j;
      }
    }
  }
  return {static_cast<Int>(differing.size()), static_cast<Int>(domain.size())};
}

IntVec random_lprime_vector(const SubgroupHNF& lprime) {
  const auto cols = lprime.int_columns();
  IntVec v(lprime.dim(), 0);
  for (const auto& col : cols) {
    const Int k = latsub::test::uniform(-3, 3);
    for (std::size_t a = 0; a < v.size(); ++a) v[a] += k * col[a];
  }
  return v;
}

}  // namespace

TEST_CASE("windows are Q^n [0,1)^d") {
  const auto pd = load("period-doubling");
  const Window w(pd, VanHoveSequence::unit(1, {}), 5);
  CHECK(w.size() == 32);
  CHECK(w.contains({0}));
  CHECK(w.contains({31}));
  CHECK_FALSE(w.contains({32}));
  CHECK_FALSE(w.contains({-1}));
  CHECK(w.boundary_fraction(1) == doctest::Approx(2.0 / 32.0));

  const auto gasket = load("gasket");
  const Window g(gasket, VanHoveSequence::unit(2, {}), 3);
  CHECK(g.size() == 64);
  CHECK(g.contains({7, 7}));
  CHECK_FALSE(g.contains({8, 0}));
  const Window t = g.translated({10, -3});
  CHECK(t.contains({10, -3}));
  CHECK_FALSE(t.contains({0, 0}));

  // boundary fraction of F_n shrinks with n (van Hove)
  for (const auto& name : bundled()) {
    CAPTURE(name);
    const auto sys = load(name);
    double prev = 2.0;
    for (int n = 1; n <= (sys.dim() == 1 ? 6 : 4); ++n) {
      const double b = Window(sys, VanHoveSequence::unit(sys.dim(), {}), n).boundary_fraction(1);
      CHECK(b <= prev);
      prev = b;
    }
    CHECK(prev < 1.0);
  }
}

TEST_CASE("cluster frequencies") {
  SUBCASE("period doubling: freq(a) = 2/3 uniformly") {
    const auto sys = load("period-doubling");
    std::vector<IntVec> translates;
    for (int k = 0; k < 10; ++k) translates.push_back({latsub::test::uniform(0, 1'000'000)});
    const auto f = cluster_frequency(sys, one_point(2, 1, 0), VanHoveSequence::unit(1, {6, 8, 10}), translates);
    CHECK(std::abs(f.mean.back() - 2.0 / 3.0) <= 0.01);
    for (double v : f.values.back()) CHECK(std::abs(v - 2.0 / 3.0) <= 0.01);
    CHECK(f.spread <= 0.02);
    CHECK(f.spread <= 2.0 * f.boundary_bound + 1e-12);
  }
  SUBCASE("abcd: each color has frequency 1/4") {
    const auto sys = load("abcd");
    const std::vector<IntVec> translates{{0}, {-5000}, {7777}, {123456}};
    for (std::size_t c = 0; c < 4; ++c) {
      const auto f = cluster_frequency(sys, one_point(4, 1, c), VanHoveSequence::unit(1, {7}), translates);
      CHECK(std::abs(f.mean.back() - 0.25) <= 0.01);
    }
  }
  SUBCASE("a cluster that never occurs has frequency 0") {
    const auto sys = load("period-doubling");
    const Cluster bb(1, {{}, {{0}, {1}}});
    const auto f = cluster_frequency(sys, bb, VanHoveSequence::unit(1, {10}), {{0}, {4096}});
    CHECK(f.mean.back() == 0.0);
    CHECK(supertile_frequency(sys, bb, 8, {1, 1}) == 0.0);
  }
  SUBCASE("empty cluster is rejected") {
    const auto sys = load("period-doubling");
    CHECK_THROWS_AS(cluster_frequency(sys, Cluster(2, 1), VanHoveSequence::unit(1, {4}), {{0}}), Error);
  }
}

TEST_CASE("supertile frequencies") {
  SUBCASE("period doubling, single a-point") {
    const auto sys = load("period-doubling");
    CHECK(std::abs(supertile_frequency(sys, one_point(2, 1, 0), 8, {1, 1}) - 2.0 / 3.0) <= 0.02);
  }
  SUBCASE("abcd two-point cluster agrees with a direct count on F_10") {
    const auto sys = load("abcd");
    const Cluster ab(1, {{{0}}, {{1}}, {}, {}});
    const double st = supertile_frequency(sys, ab, 8, {1, 1, 1, 1});
    const Window w(sys, VanHoveSequence::unit(1, {}), 10);
    const auto patch = covering_patch(sys, w.hull()).patch;
    const double direct = static_cast<double>(count_occurrences(patch, ab)) / static_cast<double>(w.size());
    CHECK(std::abs(st - direct) <= 0.02);
    const auto f = cluster_frequency(sys, ab, VanHoveSequence::unit(1, {10}), {{0}});
    CHECK(std::abs(f.mean.back() - direct) <= 0.02);
  }
  SUBCASE("gasket: four equal colors") {
    const auto sys = load("gasket");
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(std::abs(supertile_frequency(sys, one_point(4, 2, c), 4, {1, 1, 1, 1}) - 0.25) <= 0.02);
  }
  SUBCASE("volume length mismatch") {
    CHECK_THROWS_AS(supertile_frequency(load("abcd"), one_point(4, 1, 0), 2, {1.0}), DimensionError);
  }
}

TEST_CASE("frequency additivity over next-neighbor extensions") {
  for (const std::string name : {"period-doubling", "abcd", "thue-morse"}) {
    CAPTURE(name);
    const auto sys = load(name);
    const std::size_t m = sys.color_count();
    const auto seq = VanHoveSequence::unit(1, {10});
    const std::vector<IntVec> translates{{0}, {31415}};
    for (std::size_t i = 0; i < m; ++i) {
      const double whole = cluster_frequency(sys, one_point(m, 1, i), seq, translates).mean.back();
      double parts = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        std::vector<std::vector<IntVec>> pts(m);
        pts[i].push_back({0});
        pts[c].push_back({1});
        parts += cluster_frequency(sys, Cluster(1, pts), seq, translates).mean.back();
      }
      CHECK(std::abs(whole - parts) <= 0.02);
    }
  }
}

TEST_CASE("uniform cluster frequencies across translates") {
  for (const std::string name : {"period-doubling", "thue-morse", "abcd"}) {
    CAPTURE(name);
    const auto sys = load(name);
    std::vector<IntVec> translates;
    for (int k = 0; k < 10; ++k) translates.push_back({latsub::test::uniform(0, 200'000)});
    const int n = std::string(name) == "abcd" ? 7 : 11;
    const auto f = cluster_frequency(sys, one_point(sys.color_count(), 1, 0), VanHoveSequence::unit(1, {n}),
                                     translates);
    CHECK(f.spread <= 2.0 * f.boundary_bound + 1e-12);
  }
}

TEST_CASE("density series examples") {
  SUBCASE("alpha = 0 gives zeros") {
    for (const auto& name : bundled()) {
      CAPTURE(name);
      const auto sys = load(name);
      const auto s = density_symdiff_series(sys, IntVec(sys.dim(), 0), 4, small_window(name));
      for (double v : s.values()) CHECK(v == 0.0);
      const auto fit = rate_fit(s);
      CHECK(fit.kind == RateKind::Decaying);
      CHECK(fit.r == 0.0);
    }
  }
  SUBCASE("period doubling, alpha = 1") {
    const auto s = density_symdiff_series(load("period-doubling"), {1}, 10, 16);
    CHECK(s.value(8) <= 0.02);
    CHECK(nonincreasing_within_margin(s));
    const auto fit = rate_fit(s);
    CHECK(fit.kind == RateKind::Decaying);
    CHECK(fit.r <= 0.6);
  }
  SUBCASE("Thue-Morse, alpha = 1") {
    const auto s = density_symdiff_series(load("thue-morse"), {1}, 10, 16);
    CHECK(s.value(8) >= 0.2);
    const auto fit = rate_fit(s);
    CHECK(fit.kind == RateKind::NonVanishing);
    CHECK(fit.tail_min > kNonVanishingFloor);
  }
  SUBCASE("abcd decays slowly, geometric") {
    const auto s = density_symdiff_series(load("abcd"), {2}, 9, 12);
    CHECK(nonincreasing_within_margin(s));
    const auto fit = rate_fit(s);
    CHECK(fit.kind == RateKind::Decaying);
    CHECK(fit.r < kStalledRatio);
  }
  SUBCASE("alpha outside L'") {
    CHECK_THROWS_AS(density_symdiff_series(load("abcd"), {1}, 4, 6), Error);
    CHECK_THROWS_AS(density_symdiff_series(load("gasket"), {1, 0}, 4, 4), Error);
  }
  SUBCASE("rate_fit needs five terms") {
    CHECK_THROWS_AS(rate_fit(density_symdiff_series(load("period-doubling"), {1}, 3, 8)), Error);
  }
}

TEST_CASE("density series matches a brute-force set comparison") {
  for (const auto& name : bundled()) {
    CAPTURE(name);
    const auto sys = load(name);
    const auto lprime = compute_lprime(sys).lprime;
    const int wn = small_window(name);
    const Window w(sys, VanHoveSequence::unit(sys.dim(), {}), wn);
    REQUIRE(w.size() <= 10'000);
    const auto lambda = covering_patch(sys, w.hull()).patch;
    const auto pts = w.points();
    for (int trial = 0; trial < 3; ++trial) {
      const IntVec alpha = random_lprime_vector(lprime);
      const auto s = density_symdiff_series(sys, lprime, alpha, 3, wn);
      IntVec shift = alpha;
      for (std::size_t n = 0; n < s.size(); ++n) {
        const auto [diff, total] = brute_symdiff(lambda, pts, shift);
        CHECK(s.differing[n] == diff);
        CHECK(s.compared[n] == total);
        shift = sys.expansion(shift);
      }
    }
  }
}

TEST_CASE("density series is subadditive in alpha") {
  for (const auto& name : bundled()) {
    CAPTURE(name);
    const auto sys = load(name);
    const auto lprime = compute_lprime(sys).lprime;
    const int wn = small_window(name);
    for (int trial = 0; trial < 20; ++trial) {
      const IntVec a = random_lprime_vector(lprime);
      const IntVec b = random_lprime_vector(lprime);
      const auto sa = density_symdiff_series(sys, lprime, a, 3, wn);
      const auto sb = density_symdiff_series(sys, lprime, b, 3, wn);
      const auto sab = density_symdiff_series(sys, lprime, add(a, b), 3, wn);
      for (std::size_t n = 0; n < sab.size(); ++n) {
        // points lost because x - Q^n a left the window
        const Int margin = sa.window_size - sa.compared[n];
        CHECK(sab.differing[n] <= sa.differing[n] + sb.differing[n] + margin);
      }
    }
  }
}

TEST_CASE("coincidence systems have nonincreasing series") {
  for (const std::string name : {"period-doubling", "gasket", "chair", "abcd"}) {
    CAPTURE(name);
    const auto sys = load(name);
    const auto lprime = compute_lprime(sys).lprime;
    for (const auto& col : lprime.int_columns()) {
      const int wn = sys.dim() == 1 ? (std::string(name) == "abcd" ? 10 : 14) : 8;
      const auto s = density_symdiff_series(sys, lprime, col, wn / 2 + 1, wn);
      CHECK(nonincreasing_within_margin(s));
    }
  }
}

TEST_CASE("diffraction proxy") {
  SUBCASE("Z comb peaks at integer frequency") {
    std::vector<IntVec> pts;
    for (Int k = 0; k < 4096; ++k) pts.push_back({k});
    const auto d = diffraction_estimate(Cluster(1, {pts}), {1.0}, {Box{{0}, {4095}}});
    CHECK(d.heuristic);
    CHECK(d.concentration >= 0.99);
    CHECK(d.peaks[0].frequency[0] == 0.0);
    CHECK(d.peaks[0].intensity == doctest::Approx(4096.0));
  }
  SUBCASE("period doubling vs Thue-Morse on 2^14 points") {
    const Box window{{0}, {(1 << 14) - 1}};
    const auto pd = load("period-doubling");
    const auto tm = load("thue-morse");
    const auto dp = diffraction_estimate(generate_patch(pd, 14, window), {1.0, -1.0}, {window});
    const auto dt = diffraction_estimate(generate_patch(tm, 14, window), {1.0, -1.0}, {window});
    CHECK(dp.concentration >= 0.9);
    CHECK(dt.concentration <= 0.5);
  }
  SUBCASE("two-dimensional comb") {
    const auto sys = load("gasket");
    const Box window = Box::cube(2, 0, 31);
    const auto d = diffraction_estimate(covering_patch(sys, window).patch, {1, 1, 1, 1}, {window});
    CHECK(d.bins == std::vector<std::size_t>{64, 64});
    CHECK(d.peaks[0].frequency == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("errors") {
    const Cluster tiny(1, {{{0}, {1}}});
    CHECK_THROWS_AS(diffraction_estimate(tiny, {1.0}, {Box{{0}, {10}}}), Error);
    CHECK_THROWS_AS(diffraction_estimate(tiny, {1.0, 2.0}, {Box{{0}, {100}}}), DimensionError);
  }
}

TEST_CASE("statistics do not depend on the thread count") {
  const auto sys = load("chair");
  const auto lprime = compute_lprime(sys).lprime;
  const IntVec alpha = lprime.int_columns()[0];
  set_thread_count(1);
  const auto one = density_symdiff_series(sys, lprime, alpha, 4, 7);
  const auto f1 = cluster_frequency(sys, one_point(12, 2, 0), VanHoveSequence::unit(2, {6}), {{0, 0}, {9, 4}});
  set_thread_count(5);
  const auto five = density_symdiff_series(sys, lprime, alpha, 4, 7);
  const auto f5 = cluster_frequency(sys, one_point(12, 2, 0), VanHoveSequence::unit(2, {6}), {{0, 0}, {9, 4}});
  set_thread_count(1);
  CHECK(one.differing == five.differing);
  CHECK(one.compared == five.compared);
  CHECK(f1.values == f5.values);
}
