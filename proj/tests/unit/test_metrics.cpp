#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "treegauss/error.hpp"
#include "treegauss/metrics.hpp"

using namespace treegauss;

namespace {

WeightSystem unit_weights(std::uint64_t horizon) {
  return WeightSystem::level(LevelSequence::constant(1.0), LevelSequence::constant(1.0), horizon);
}

// sigma_k = 2^-k, alpha_0 = 0, alpha_k = 1/k
WeightSystem harmonic_geometric(std::uint64_t horizon) {
  return WeightSystem::level(LevelSequence::power(1.0, 0.0).with_at0(0.0),
                             LevelSequence::geometric(0.5), horizon);
}

}  // namespace

TEST_CASE("d and d_X agree with the brute-force oracles on random trees") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Tree t = testing::random_tree(rng, 2 + rep * 3);
    const WeightSystem w = testing::random_weights(rng, t);
    for (const NodeRef a : t.nodes()) {
      for (const NodeRef b : t.nodes()) {
        CHECK(dist_d(t, w, a, b) == doctest::Approx(testing::oracle_d(t, w, a, b)).epsilon(1e-12));
        CHECK(dist_dX(t, w, a, b) ==
              doctest::Approx(testing::oracle_dX(t, w, a, b)).epsilon(1e-10).scale(1.0));
      }
    }
  }
}

TEST_CASE("distance matrix matches pairwise evaluation") {
  std::mt19937_64 rng(3);
  const Tree t = testing::random_tree(rng, 25);
  const WeightSystem w = testing::random_weights(rng, t);
  for (const Metric m : {Metric::kD, Metric::kDX, Metric::kDHat}) {
    const Eigen::MatrixXd dm = distance_matrix(m, t, w);
    for (const NodeRef a : t.nodes()) {
      for (const NodeRef b : t.nodes()) {
        CHECK(dm(static_cast<Eigen::Index>(a.key), static_cast<Eigen::Index>(b.key)) ==
              doctest::Approx(distance(m, t, w, a, b)));
      }
    }
  }
}

TEST_CASE("unit chain values") {
  const Tree t = Tree::chain(10);
  const auto w = unit_weights(10);
  CHECK(dist_d(t, w, t.node(0), t.node(4)) == doctest::Approx(2.0));
  CHECK(dist_d(t, w, t.node(3), t.node(3)) == 0.0);
  CHECK(dist_d(t, w, t.node(7), t.node(2)) == doctest::Approx(std::sqrt(5.0)));
  CHECK(dist_dX(t, w, t.node(2), t.node(2)) == 0.0);
  // X_k = sum of k+1 normals: d_X(j, k) = sqrt(k - j)
  CHECK(dist_dX(t, w, t.node(2), t.node(6)) == doctest::Approx(2.0));
  CHECK(dist_d_levels(w, 0, 4) == doctest::Approx(2.0));
}

TEST_CASE("root distances for sigma 2^-k, alpha 1/k") {
  const Tree t = Tree::chain(40);
  const auto w = harmonic_geometric(40);
  double h2 = 0.0;
  for (std::uint64_t k = 1; k <= 40; ++k) {
    h2 += 1.0 / static_cast<double>(k * k);
    CHECK(dist_d(t, w, t.root(), t.node(k)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dist_dX(t, w, t.root(), t.node(k)) ==
          doctest::Approx(std::ldexp(std::sqrt(h2), -static_cast<int>(k))).epsilon(1e-10));
  }
  CHECK(dist_dX(t, w, t.root(), t.node(1)) == doctest::Approx(0.5));
}

TEST_CASE("d_X dominates the sigma gap for power weights") {
  // sigma_k = k^-1, alpha_k = k^-2 on levels >= 1
  const Tree t = Tree::chain(60);
  const auto w = WeightSystem::level(LevelSequence::power(2.0, 0.0).with_at0(1.0),
                                     LevelSequence::power(1.0, 0.0).with_at0(1.0), 60);
  for (std::uint64_t k = 1; k < 60; k += 3) {
    for (std::uint64_t l = k + 1; l <= 60; l += 5) {
      CHECK(dist_dX(t, w, t.node(k), t.node(l)) >=
            1.0 / static_cast<double>(k) - 1.0 / static_cast<double>(l) - 1e-12);
    }
  }
}

TEST_CASE("dyadic classes and rounding") {
  CHECK(dyadic_class(1.0) == 0);
  CHECK(dyadic_class(0.5) == 1);
  CHECK(dyadic_class(0.75) == 0);
  CHECK(dyadic_class(0.3) == 1);
  CHECK(dyadic_class(2.0) == -1);
  CHECK(dyadic_ceiling(0.3) == 0.5);
  CHECK(dyadic_ceiling(0.125) == 0.125);
  CHECK_THROWS_AS(dyadic_class(0.0), Error);
}

TEST_CASE("dyadic sigma is a fixed point") {
  const Tree t = Tree::binary(5);
  const auto w = WeightSystem::level(LevelSequence::power(1.0), LevelSequence::geometric(0.5), 5);
  const LevelPartition p(t, w);
  for (const NodeRef v : t.nodes()) {
    CHECK(p.sigma_hat(v) == doctest::Approx(w.sigma(t, v)).epsilon(1e-14));
    CHECK(p.class_of(v) == static_cast<std::int64_t>(t.depth(v)));
  }
  CHECK(dist_dhat(t, w, t.node(3), t.node(40)) == doctest::Approx(dist_d(t, w, t.node(3), t.node(40))));
}

TEST_CASE("rounded distance is within a factor two") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 15; ++rep) {
    const Tree t = testing::random_tree(rng, 30);
    const WeightSystem w = testing::random_weights(rng, t);
    const LevelPartition p(t, w);
    CHECK(p.branch_properties_hold());
    for (const NodeRef a : t.nodes()) {
      CHECK(p.sigma_hat(a) >= w.sigma(t, a));
      CHECK(p.sigma_hat(a) < 2.0 * w.sigma(t, a));
      for (const NodeRef b : t.nodes()) {
        const double d = dist_d(t, w, a, b);
        const double dh = dist_dhat(t, w, a, b);
        CHECK(dh >= d * (1 - 1e-12));
        CHECK(dh <= 2.0 * d * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("metric axioms") {
  const Tree b = Tree::binary(4);
  const auto r = check_metric_axioms(b, unit_weights(4), Metric::kD);
  CHECK(r.nodes == 31);
  CHECK(r.is_metric());

  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const Tree t = testing::random_tree(rng, 40);
    const WeightSystem w = testing::random_weights(rng, t);
    CHECK(check_metric_axioms(t, w, Metric::kDX).is_pseudometric());
    CHECK(check_metric_axioms(t, w, Metric::kD).is_pseudometric());
  }

  const auto zero = WeightSystem::level(LevelSequence::constant(0.0), LevelSequence::constant(1.0), 4);
  const auto zr = check_metric_axioms(b, zero, Metric::kD);
  CHECK(zr.is_pseudometric());
  CHECK_FALSE(zr.is_metric());
  CHECK(zr.zero_distance_pairs > 0);

  CHECK_THROWS_AS(check_metric_axioms(Tree::chain(kAxiomCheckCap), unit_weights(kAxiomCheckCap),
                                      Metric::kD),
                  Error);
}

TEST_CASE("metric names") {
  for (const Metric m : {Metric::kD, Metric::kDX, Metric::kDHat}) {
    CHECK(metric_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(metric_from_string("l2"), Error);
}
