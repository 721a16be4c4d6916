#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include "support.hpp"
#include "treegauss/entropy.hpp"
#include "treegauss/error.hpp"

using namespace treegauss;

namespace {

WeightSystem unit_weights(std::uint64_t horizon) {
  return WeightSystem::level(LevelSequence::constant(1.0), LevelSequence::constant(1.0), horizon);
}

std::vector<std::uint64_t> keys(const std::vector<NodeRef>& nodes) {
  std::vector<std::uint64_t> out;
  for (const NodeRef v : nodes) out.push_back(v.key);
  std::sort(out.begin(), out.end());
  return out;
}

// Smallest k such that some k open balls of radius eps cover every node,
// by enumerating center subsets in order of size.
std::uint64_t oracle_cover(const Tree& t, const WeightSystem& w, double eps) {
  const std::size_t n = t.size();
  std::vector<std::uint32_t> ball(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (testing::oracle_d(t, w, t.node(a), t.node(b)) < eps) ball[a] |= 1u << b;
    }
  }
  const std::uint32_t all = (1u << n) - 1;
  std::uint64_t best = n;
  for (std::uint32_t centers = 1; centers <= all; ++centers) {
    const auto k = static_cast<std::uint64_t>(std::popcount(centers));
    if (k >= best) continue;
    std::uint32_t covered = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (centers >> a & 1u) covered |= ball[a];
    }
    if (covered == all) best = k;
  }
  return best;
}

// Largest family of pairwise disjoint node sets (t, s] with d(t, s) >= eps.
std::size_t oracle_interval_packing(const Tree& t, const WeightSystem& w, double eps) {
  std::vector<std::uint64_t> sets;
  for (const NodeRef a : t.nodes()) {
    for (const NodeRef b : t.nodes()) {
      if (a == b || !t.precedes(a, b)) continue;
      if (testing::oracle_d_down(t, w, a, b) < eps) continue;
      std::uint64_t mask = 0;
      for (const NodeRef v : t.order_interval(a, b, IntervalKind::kLeftOpen)) mask |= 1ull << v.key;
      sets.push_back(mask);
    }
  }
  std::size_t best = 0;
  const std::function<void(std::size_t, std::uint64_t, std::size_t)> go =
      [&](std::size_t i, std::uint64_t used, std::size_t count) {
        best = std::max(best, count);
        if (count + (sets.size() - i) <= best) return;
        for (std::size_t j = i; j < sets.size(); ++j) {
          if ((sets[j] & used) == 0) go(j + 1, used | sets[j], count + 1);
        }
      };
  go(0, 0, 0);
  return best;
}

}  // namespace

TEST_CASE("order nets on the unit chain") {
  const Tree t = Tree::chain(10);
  const auto w = unit_weights(10);
  CHECK(keys(greedy_order_net(t, w, 1.5)) == std::vector<std::uint64_t>{0, 3, 6, 9});
  CHECK(keys(greedy_order_net(t, w, 1.01)) == std::vector<std::uint64_t>{0, 2, 4, 6, 8, 10});
  CHECK(keys(greedy_order_net(t, w, 100.0)) == std::vector<std::uint64_t>{0});
  CHECK(exact_order_cover_small(Tree::chain(10), w, Metric::kD, 1.5) == 4);
}

TEST_CASE("ball covers on the unit chain") {
  const Tree t = Tree::chain(10);
  const auto w = unit_weights(10);
  CHECK(greedy_ball_cover(t, w, Metric::kD, 1.5).size() <= 3);
  CHECK(greedy_ball_cover(t, w, Metric::kD, 100.0).size() == 1);
  CHECK(exact_cover_small(t, w, Metric::kD, 1.5) == 3);
  CHECK(exact_cover_small(t, w, Metric::kD, 1.0) == 11);
  CHECK(exact_cover_small(Tree::chain(0), unit_weights(0), Metric::kD, 0.5) == 1);
  CHECK(packing_lower_bound(t, w, Metric::kD, 3.0) == 2);

  const Tree pair = Tree::chain(1);
  const auto pw = unit_weights(1);
  CHECK(greedy_ball_cover(pair, pw, Metric::kD, 1.0).size() == 2);
  CHECK(greedy_ball_cover(pair, pw, Metric::kD, 0.5).size() == 2);
}

TEST_CASE("greedy cover returns valid separated centers") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const Tree t = testing::random_tree(rng, 60);
    const WeightSystem w = testing::random_weights(rng, t);
    const double eps = 0.3 + 0.2 * rep;
    for (const Metric m : {Metric::kD, Metric::kDX}) {
      const auto net = greedy_ball_cover(t, w, m, eps);
      for (const NodeRef v : t.nodes()) {
        bool hit = false;
        for (const NodeRef c : net) hit = hit || distance(m, t, w, c, v) < eps;
        CHECK(hit);
      }
      const auto pack = packing_set(t, w, m, 2.0 * eps);
      for (std::size_t i = 0; i < pack.size(); ++i) {
        for (std::size_t j = i + 1; j < pack.size(); ++j) {
          CHECK(distance(m, t, w, pack[i], pack[j]) >= 2.0 * eps);
        }
      }
      CHECK(pack.size() <= net.size());
    }
  }
}

TEST_CASE("interval packing") {
  const Tree chain = Tree::chain(10);
  const auto w = unit_weights(10);
  const auto p = disjoint_interval_packing(chain, w, 1.0);
  CHECK(p.count() == 10);
  for (const auto& iv : p.intervals) CHECK(iv.witness_value >= 1.0);
  CHECK(disjoint_interval_packing(chain, w, 100.0).count() == 0);

  const Tree bin = Tree::binary(4);
  const auto bw = unit_weights(4);
  CHECK(disjoint_interval_packing(bin, bw, 2.0).count() == oracle_interval_packing(bin, bw, 2.0));
  CHECK(disjoint_interval_packing(bin, bw, 2.0).count() == 2);
}

TEST_CASE("exact cover agrees with the subset oracle and sits in the sandwich") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 12; ++rep) {
    const Tree t = testing::random_tree(rng, 3 + rep % 10);
    const WeightSystem w = testing::random_weights(rng, t);
    for (const double eps : {0.2, 0.5, 1.0, 2.0}) {
      const auto exact = exact_cover_small(t, w, Metric::kD, eps);
      CHECK(exact == oracle_cover(t, w, eps));
      const auto r = cover(t, w, Metric::kD, eps);
      CHECK(r.lower_bound <= exact);
      CHECK(exact <= r.upper_bound);
      CHECK(exact <= exact_order_cover_small(t, w, Metric::kD, eps));
      CHECK(exact_order_cover_small(t, w, Metric::kD, 2.0 * eps) <= exact);
      CHECK(disjoint_interval_packing(t, w, eps).count() + 1 >=
            exact_cover_small(t, w, Metric::kD, 2.0 * eps));
      CHECK(disjoint_interval_packing(t, w, eps).count() <= oracle_interval_packing(t, w, eps));
    }
  }
}

TEST_CASE("chain interval greedy is optimal") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const Tree t = Tree::chain(11);
    const WeightSystem w = testing::random_weights(rng, t);
    for (const double eps : {0.1, 0.4, 0.9}) {
      CHECK(greedy_ball_cover(t, w, Metric::kD, eps).size() == oracle_cover(t, w, eps));
    }
  }
}

TEST_CASE("grid and curve monotonicity") {
  const auto g = geometric_grid(1.0, 0.01, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(g[2] == doctest::Approx(0.01));
  CHECK_THROWS_AS(geometric_grid(0.1, 1.0, 4), Error);

  const Tree t = Tree::chain(200);
  const auto w = WeightSystem::level(LevelSequence::power(2.0), LevelSequence::power(1.0), 200);
  const auto grid = geometric_grid(1.0, 1e-3, 12);
  const auto curve = entropy_curve(t, w, Metric::kD, grid);
  REQUIRE(curve.points.size() == grid.size());
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].upper_bound >= curve.points[i - 1].upper_bound);
    CHECK(curve.points[i].lower_bound >= curve.points[i - 1].lower_bound);
    CHECK(curve.points[i].lower_bound <= curve.points[i].upper_bound);
  }
}

TEST_CASE("Dudley and Sudakov functionals") {
  const Tree single = Tree::chain(0);
  const auto w0 = unit_weights(0);
  const auto grid = geometric_grid(1.0, 0.1, 5);
  const auto flat = entropy_curve(single, w0, Metric::kD, grid);
  CHECK(dudley_integral(flat).value == 0.0);
  CHECK(sudakov_sup(flat) == 0.0);

  // Hand-built curve: N = 2 on [0.5, 1), N = 4 below.
  EntropyCurve c;
  c.points.resize(2);
  c.points[0].epsilon = 1.0;
  c.points[0].upper_bound = 2;
  c.points[0].lower_bound = 2;
  c.points[1].epsilon = 0.5;
  c.points[1].upper_bound = 4;
  c.points[1].lower_bound = 4;
  const auto d = dudley_integral(c);
  CHECK(d.value == doctest::Approx(0.5 * std::sqrt(std::log(4.0))));
  CHECK(d.untreated_below == 0.5);
  CHECK(sudakov_sup(c) == doctest::Approx(std::max(std::sqrt(std::log(2.0)),
                                                   0.5 * std::sqrt(std::log(4.0)))));
}

TEST_CASE("equivalence report on a small chain") {
  const Tree t = Tree::chain(300);
  const auto w = WeightSystem::level(LevelSequence::power(2.0), LevelSequence::power(1.0), 300);
  const auto grid = geometric_grid(0.5, 1e-3, 10);
  const auto r = entropy_equivalence_report(t, w, grid);
  REQUIRE(r.rows.size() == grid.size());
  for (const auto& row : r.rows) {
    CHECK(row.ratio == doctest::Approx(static_cast<double>(row.n_dX) / static_cast<double>(row.n_d)));
    CHECK(row.scaled_d == doctest::Approx(row.epsilon * row.epsilon * std::log(double(row.n_d))));
  }
  CHECK(r.max_scaled_d > 0.0);
}

TEST_CASE("argument checks") {
  const Tree t = Tree::chain(5);
  const auto w = unit_weights(5);
  CHECK_THROWS_AS(greedy_order_net(t, w, 0.0), Error);
  CHECK_THROWS_AS(exact_cover_small(Tree::chain(20), unit_weights(20), Metric::kD, 1.0), Error);
}
