#include "treegauss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "treegauss/error.hpp"

namespace treegauss {

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::kD:
      return "d";
    case Metric::kDX:
      return "d_X";
    case Metric::kDHat:
      return "d_hat";
  }
  return "?";
}

Metric metric_from_string(const std::string& name) {
  if (name == "d") return Metric::kD;
  if (name == "d_X" || name == "dX" || name == "dx") return Metric::kDX;
  if (name == "d_hat" || name == "dhat") return Metric::kDHat;
  throw invalid_argument("unknown metric \"" + name + "\"");
}

namespace {

// d(t,s) for t ⪯ s, accumulating alpha^2 down the path.
double dist_d_down(const Tree& tree, const WeightSystem& w, NodeRef t,
                   NodeRef s) {
  double acc = 0.0;
  double best = 0.0;
  for (const NodeRef r : tree.order_interval(t, s, IntervalKind::kLeftOpen)) {
    const double a = w.alpha(tree, r);
    acc += a * a;
    best = std::max(best, w.sigma(tree, r) * std::sqrt(acc));
  }
  return best;
}

double alpha_sq_sum(const Tree& tree, const WeightSystem& w,
                    const std::vector<NodeRef>& path) {
  double acc = 0.0;
  for (const NodeRef v : path) {
    const double a = w.alpha(tree, v);
    acc += a * a;
  }
  return acc;
}

}  // namespace

double dist_d(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s) {
  w.check_compatible(tree);
  if (tree.precedes(t, s)) return dist_d_down(tree, w, t, s);
  if (tree.precedes(s, t)) return dist_d_down(tree, w, s, t);
  const NodeRef m = tree.meet(t, s);
  return dist_d_down(tree, w, m, t) + dist_d_down(tree, w, m, s);
}

double dist_dX(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s) {
  w.check_compatible(tree);
  if (t == s) return 0.0;
  const NodeRef m = tree.meet(t, s);
  const double shared = alpha_sq_sum(tree, w, tree.ancestors(m));
  const double own_t =
      alpha_sq_sum(tree, w, tree.order_interval(m, t, IntervalKind::kLeftOpen));
  const double own_s =
      alpha_sq_sum(tree, w, tree.order_interval(m, s, IntervalKind::kLeftOpen));
  const double st = w.sigma(tree, t);
  const double ss = w.sigma(tree, s);
  const double gap = st - ss;
  return std::sqrt(gap * gap * shared + st * st * own_t + ss * ss * own_s);
}

double dist_dhat(const Tree& tree, const WeightSystem& w, NodeRef t,
                 NodeRef s) {
  return dist_d(tree, dyadic_weights(tree, w), t, s);
}

double distance(Metric metric, const Tree& tree, const WeightSystem& w,
                NodeRef t, NodeRef s) {
  switch (metric) {
    case Metric::kD:
      return dist_d(tree, w, t, s);
    case Metric::kDX:
      return dist_dX(tree, w, t, s);
    case Metric::kDHat:
      return dist_dhat(tree, w, t, s);
  }
  return 0.0;
}

double dist_d_levels(const WeightSystem& w, std::uint64_t m, std::uint64_t n) {
  if (m > n) std::swap(m, n);
  double acc = 0.0;
  double best = 0.0;
  for (std::uint64_t l = m + 1; l <= n; ++l) {
    const double a = w.alpha_level(l);
    acc += a * a;
    best = std::max(best, w.sigma_level(l) * std::sqrt(acc));
  }
  return best;
}

std::int64_t dyadic_class(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw invalid_argument("dyadic class needs a positive finite sigma");
  }
  int e = 0;
  const double mantissa = std::frexp(sigma, &e);
  // Weights evaluated through exp(log) land a few ulps above an exact power
  // of two; those still count as dyadic.
  constexpr double kSnap = 8 * std::numeric_limits<double>::epsilon();
  return mantissa - 0.5 <= kSnap ? 1 - e : -e;
}

double dyadic_ceiling(double sigma) {
  return std::ldexp(1.0, static_cast<int>(-dyadic_class(sigma)));
}

WeightSystem dyadic_weights(const Tree& tree, const WeightSystem& w) {
  w.check_compatible(tree);
  if (w.is_homogeneous()) {
    return WeightSystem::level(w.alpha_levels(),
                               LevelSequence::dyadic(w.sigma_levels()),
                               w.horizon());
  }
  Eigen::VectorXd hat = w.sigma_table().unaryExpr(
      [](double s) { return dyadic_ceiling(s); });
  return WeightSystem::per_node(tree, w.alpha_table(), std::move(hat));
}

LevelPartition::LevelPartition(const Tree& tree, const WeightSystem& w)
    : tree_(&tree), hat_(treegauss::dyadic_weights(tree, w)) {
  if (w.is_homogeneous()) {
    classes_.resize(tree.height() + 1);
    for (std::uint64_t k = 0; k <= tree.height(); ++k) {
      classes_[k] = dyadic_class(w.sigma_level(k));
    }
  } else {
    classes_.resize(tree.size());
    for (std::uint64_t i = 0; i < tree.size(); ++i) {
      classes_[i] = dyadic_class(w.sigma_table()[static_cast<Eigen::Index>(i)]);
    }
  }
}

std::int64_t LevelPartition::class_of(NodeRef t) const {
  if (hat_.is_homogeneous()) return classes_[tree_->depth(t)];
  return classes_[tree_->index(t)];
}

double LevelPartition::sigma_hat(NodeRef t) const {
  return std::ldexp(1.0, static_cast<int>(-class_of(t)));
}

bool LevelPartition::branch_properties_hold() const {
  // Classes never decrease from parent to child; that makes each class an
  // order interval on every branch and orders the classes along it. The
  // root class bounds all classes from below.
  bool ok = true;
  const std::int64_t root_class = class_of(tree_->root());
  tree_->for_each_preorder([&](NodeRef t) {
    if (!ok) return;
    const auto p = tree_->parent(t);
    if (p && class_of(*p) > class_of(t)) ok = false;
    if (class_of(t) < root_class) ok = false;
  });
  return ok;
}

Eigen::MatrixXd distance_matrix(Metric metric, const Tree& tree,
                                const WeightSystem& w) {
  w.check_compatible(tree);
  if (metric == Metric::kDHat) {
    return distance_matrix(Metric::kD, tree, dyadic_weights(tree, w));
  }
  const auto n = static_cast<Eigen::Index>(tree.size());
  const Eigen::VectorXd alpha = w.alpha_vector(tree);
  const Eigen::VectorXd sigma = w.sigma_vector(tree);

  // For every ancestor pair a ⪯ s: down_d(a,s) = d(a,s) and
  // down_sum(a,s) = sum_{a < v <= s} alpha(v)^2, both accumulated from a.
  Eigen::MatrixXd down_d = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd down_sum = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<std::uint64_t, std::pair<double, double>>> stack;
  for (Eigen::Index a = 0; a < n; ++a) {
    stack.clear();
    const NodeRef src = tree.node(static_cast<std::uint64_t>(a));
    for (const NodeRef c : tree.children(src)) stack.push_back({c.key, {0.0, 0.0}});
    while (!stack.empty()) {
      const auto [v, state] = stack.back();
      stack.pop_back();
      const auto vi = static_cast<Eigen::Index>(v);
      const double acc = state.first + alpha[vi] * alpha[vi];
      const double best = std::max(state.second, sigma[vi] * std::sqrt(acc));
      down_d(a, vi) = best;
      down_sum(a, vi) = acc;
      for (const NodeRef c : tree.children(tree.node(v))) {
        stack.push_back({c.key, {acc, best}});
      }
    }
  }

  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const NodeRef t = tree.node(static_cast<std::uint64_t>(i));
      const NodeRef s = tree.node(static_cast<std::uint64_t>(j));
      const auto m = static_cast<Eigen::Index>(tree.meet(t, s).key);
      double value;
      if (metric == Metric::kD) {
        value = down_d(m, i) + down_d(m, j);
      } else {
        const double shared = down_sum(0, m) + alpha[0] * alpha[0];
        const double gap = sigma[i] - sigma[j];
        value = std::sqrt(gap * gap * shared +
                          sigma[i] * sigma[i] * down_sum(m, i) +
                          sigma[j] * sigma[j] * down_sum(m, j));
      }
      out(i, j) = value;
      out(j, i) = value;
    }
  }
  return out;
}

MetricAxiomReport check_metric_axioms(const Tree& tree, const WeightSystem& w,
                                      Metric metric,
                                      double relative_tolerance) {
  if (tree.size() > kAxiomCheckCap) {
    throw cap_exceeded("metric axiom check is limited to " +
                       std::to_string(kAxiomCheckCap) + " nodes");
  }
  MetricAxiomReport report;
  report.nodes = tree.size();
  const auto n = static_cast<Eigen::Index>(tree.size());
  // Evaluate pairwise through the public distance, not the matrix fast path,
  // so both orders of every pair are exercised.
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dist(i, j) = distance(metric, tree, w, tree.node(static_cast<std::uint64_t>(i)),
                            tree.node(static_cast<std::uint64_t>(j)));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) ++report.identity_violations;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double scale = std::max(std::abs(dist(i, j)), std::abs(dist(j, i)));
      if (std::abs(dist(i, j) - dist(j, i)) > relative_tolerance * scale) {
        ++report.symmetry_violations;
      }
      if (dist(i, j) == 0.0) ++report.zero_distance_pairs;
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      // d(a,c) <= d(a,b) + d(b,c) for all c at once
      const Eigen::ArrayXd bound = dist(a, b) + dist.row(b).transpose().array();
      const Eigen::ArrayXd excess = dist.row(a).transpose().array() - bound;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (excess[c] > relative_tolerance * std::max(bound[c], 1e-300)) {
          ++report.triangle_violations;
          report.worst_triangle_excess =
              std::max(report.worst_triangle_excess, excess[c] / bound[c]);
        }
      }
    }
  }
  return report;
}

}  // namespace treegauss
