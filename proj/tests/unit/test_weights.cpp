#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "treegauss/asymptotics.hpp"
#include "treegauss/error.hpp"

using namespace treegauss;

TEST_CASE("named level families") {
  CHECK(LevelSequence::constant(2.5).value(7) == doctest::Approx(2.5));
  CHECK(LevelSequence::power(1.0).value(3) == doctest::Approx(0.25));        // (3+1)^-1
  CHECK(LevelSequence::power(2.0, 0.0).value(4) == doctest::Approx(1.0 / 16));
  CHECK(LevelSequence::geometric(0.5).value(3) == doctest::Approx(0.125));
  CHECK(LevelSequence::power_geometric(1.0, 2.0).value(3) == doctest::Approx(4.0 * 8.0));
  const auto le = LevelSequence::log_exp(1.5);
  CHECK(le.value(0) == doctest::Approx(1.0));
  CHECK(le.value(100) == doctest::Approx(std::exp(0.5 * std::pow(std::log(100.0), 1.5))));
}

TEST_CASE("modifiers") {
  const auto p = LevelSequence::power(2.0, 0.0);
  CHECK(p.with_at0(1.0).value(0) == doctest::Approx(1.0));
  CHECK(p.with_at0(1.0).value(2) == doctest::Approx(0.25));
  CHECK(p.with_scale(3.0).value(2) == doctest::Approx(0.75));
  const auto held = LevelSequence::power(1.0, 0.0).with_hold_below(4);
  CHECK(held.value(1) == doctest::Approx(0.25));
  CHECK(held.value(5) == doctest::Approx(0.2));
}

TEST_CASE("log values stay finite where values overflow") {
  const auto g = LevelSequence::geometric(2.0);
  CHECK(std::isinf(g.value(5000)));
  CHECK(g.log_value(5000) == doctest::Approx(5000 * std::log(2.0)));
}

TEST_CASE("json round trip of sequences") {
  const nlohmann::json spec = {{"family", "product"},
                               {"factors",
                                {{{"family", "power"}, {"gamma", 0.75}},
                                 {{"family", "geometric"}, {"q", 2.0}}}},
                               {"at0", 1.0}};
  const auto s = LevelSequence::from_json(spec);
  const auto back = LevelSequence::from_json(s.to_json());
  for (std::uint64_t k : {0u, 1u, 5u, 40u}) CHECK(back.value(k) == doctest::Approx(s.value(k)));
  CHECK_THROWS_AS(LevelSequence::from_json({{"family", "nope"}}), Error);
  CHECK_THROWS_AS(LevelSequence::from_json({{"c", 1}}), Error);
}

TEST_CASE("level weight validation") {
  const auto one = LevelSequence::constant(1.0);
  CHECK_NOTHROW(WeightSystem::level(one, LevelSequence::power(1.0), 100));
  // sigma increasing
  CHECK_THROWS_AS(WeightSystem::level(one, LevelSequence::geometric(2.0), 10), Error);
  // sigma zero at the root
  CHECK_THROWS_AS(WeightSystem::level(one, LevelSequence::power(1.0, 0.0), 10), Error);
  const auto w = WeightSystem::level(one, LevelSequence::power(1.0), 3);
  CHECK_THROWS_AS(w.check_compatible(Tree::chain(5)), Error);
  CHECK_NOTHROW(w.check_compatible(Tree::binary(3)));
}

TEST_CASE("per-node weight validation") {
  const Tree t = Tree::chain(2);
  Eigen::VectorXd a(3), s(3);
  a << 1, 1, 1;
  s << 1, 0.5, 0.25;
  const auto w = WeightSystem::per_node(t, a, s);
  CHECK(w.sigma(t, t.node(2)) == doctest::Approx(0.25));
  CHECK_THROWS_AS(w.check_compatible(Tree::chain(2)), Error);  // another tree
  s << 1, 0.5, 0.75;
  CHECK_THROWS_AS(WeightSystem::per_node(t, a, s), Error);
  s << 1, 0.5, 0.25;
  a << 1, -1, 1;
  CHECK_THROWS_AS(WeightSystem::per_node(t, a, s), Error);
}

TEST_CASE("weight json modes") {
  const Tree t = Tree::chain(2);
  const auto lw = WeightSystem::from_json(
      {{"alpha", {{"family", "constant"}, {"c", 1}}},
       {"sigma", {{"family", "power"}, {"gamma", 1}}}},
      t);
  CHECK(lw.is_homogeneous());
  const auto nw = WeightSystem::from_json(
      {{"mode", "node"}, {"alpha", {1, 2, 3}}, {"sigma", {1, 1, 0.5}}}, t);
  CHECK_FALSE(nw.is_homogeneous());
  CHECK(nw.alpha(t, t.node(1)) == doctest::Approx(2.0));
  CHECK_THROWS_AS(WeightSystem::from_json({{"mode", "node"}, {"alpha", {1}}, {"sigma", {1}}}, t),
                  Error);
}

TEST_CASE("growth algebra") {
  Growth harmonic;
  harmonic.power = -1.0;
  const auto hs = partial_sum(harmonic);
  REQUIRE(hs);
  CHECK(hs->log_power == doctest::Approx(1.0));
  CHECK(diverges(*hs));

  Growth geo;
  geo.log_base = std::log(2.0);
  geo.power = -0.75;
  const auto gs = partial_sum(geo);
  REQUIRE(gs);
  CHECK(gs->log_base == doctest::Approx(std::log(2.0)));
  CHECK_FALSE(window_ratio_bounded(geo));
  CHECK(eventually_nondecreasing(geo));

  Growth poly;
  poly.power = 3.0;
  CHECK(window_ratio_bounded(poly));
  CHECK(partial_sum(poly)->power == doctest::Approx(4.0));

  Growth summable;
  summable.power = -2.0;
  CHECK(is_bounded(*partial_sum(summable)));

  Growth le;
  le.logexp_coef = 1.0;
  le.logexp_beta = 1.5;
  const auto les = partial_sum(le);
  REQUIRE(les);
  CHECK(les->power == doctest::Approx(1.0));
  CHECK(les->log_power == doctest::Approx(-0.5));

  Growth a, b;
  a.logexp_coef = 1.0;
  a.logexp_beta = 1.5;
  b.logexp_coef = 1.0;
  b.logexp_beta = 2.0;
  CHECK_FALSE(multiply(a, b).has_value());
}

TEST_CASE("sequence growth signatures") {
  const auto g = LevelSequence::power_geometric(-0.75, 2.0).growth();
  REQUIRE(g);
  CHECK(g->power == doctest::Approx(-0.75));
  CHECK(g->log_base == doctest::Approx(std::log(2.0)));
  CHECK_FALSE(LevelSequence::array({1, 2}).growth().has_value());
  CHECK(LevelSequence::constant(0.0).is_identically_zero());
}
