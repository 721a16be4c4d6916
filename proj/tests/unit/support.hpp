#pragma once

// Random trees/weights and brute-force oracles evaluated straight from the
// definitions, independent of the library's fast paths.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "treegauss/tree.hpp"
#include "treegauss/weights.hpp"

namespace testing {

using namespace treegauss;

inline Tree random_tree(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::optional<std::size_t>> parents(n);
  for (std::size_t i = 1; i < n; ++i) {
    parents[i] = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
  }
  return Tree::from_parents(parents);
}

// sigma shrinks by a random factor along each edge; alpha is arbitrary >= 0.
inline WeightSystem random_weights(std::mt19937_64& rng, const Tree& tree) {
  const auto n = static_cast<Eigen::Index>(tree.size());
  Eigen::VectorXd alpha(n);
  Eigen::VectorXd sigma(n);
  std::uniform_real_distribution<double> a(0.0, 2.0);
  std::uniform_real_distribution<double> shrink(0.2, 1.0);
  tree.for_each_preorder([&](NodeRef v) {
    const auto i = static_cast<Eigen::Index>(v.key);
    alpha[i] = a(rng);
    const auto p = tree.parent(v);
    sigma[i] = p ? sigma[static_cast<Eigen::Index>(p->key)] * shrink(rng) : a(rng) + 0.5;
  });
  return WeightSystem::per_node(tree, alpha, sigma);
}

// Coefficients of X_t on the independent normals: sigma(t) alpha(v), v <= t.
inline Eigen::VectorXd coefficients(const Tree& tree, const WeightSystem& w, NodeRef t) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tree.size()));
  for (const NodeRef v : tree.ancestors(t)) {
    c[static_cast<Eigen::Index>(v.key)] = w.sigma(tree, t) * w.alpha(tree, v);
  }
  return c;
}

inline double oracle_dX(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s) {
  return (coefficients(tree, w, t) - coefficients(tree, w, s)).norm();
}

// d(t, s) for t <= s from the definition: max over r in (t, s].
inline double oracle_d_down(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s) {
  const auto path = tree.ancestors(s);
  const auto start = tree.depth(t);
  double best = 0.0;
  for (std::size_t r = start + 1; r < path.size(); ++r) {
    double sum = 0.0;
    for (std::size_t v = start + 1; v <= r; ++v) {
      const double a = w.alpha(tree, path[v]);
      sum += a * a;
    }
    best = std::max(best, w.sigma(tree, path[r]) * std::sqrt(sum));
  }
  return best;
}

inline double oracle_d(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s) {
  // meet by walking ancestor lists
  const auto at = tree.ancestors(t);
  const auto as = tree.ancestors(s);
  std::size_t k = 0;
  while (k < at.size() && k < as.size() && at[k] == as[k]) ++k;
  const NodeRef m = at[k - 1];
  return oracle_d_down(tree, w, m, t) + oracle_d_down(tree, w, m, s);
}

}  // namespace testing
