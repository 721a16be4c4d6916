#include "treegauss/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "treegauss/error.hpp"
#include "treegauss/parallel.hpp"

namespace treegauss {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw invalid_argument("epsilon must be positive and finite");
  }
}

void check_scale(const Tree& tree) {
  if (tree.size() > kCoverScaleCap) {
    throw cap_exceeded("covering computations are limited to " +
                       std::to_string(kCoverScaleCap) + " nodes");
  }
}

// Level tables of a chain: alpha^2 and sigma per node.
struct ChainTables {
  std::vector<double> alpha_sq;
  std::vector<double> sigma;
  std::vector<long double> prefix;  // sum_{v <= k} alpha_v^2

  ChainTables(const Tree& tree, const WeightSystem& w) {
    const Eigen::VectorXd a = w.alpha_vector(tree);
    const Eigen::VectorXd s = w.sigma_vector(tree);
    const auto n = static_cast<std::size_t>(a.size());
    alpha_sq.resize(n);
    sigma.resize(n);
    prefix.resize(n);
    long double acc = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      alpha_sq[k] = a[static_cast<Eigen::Index>(k)] * a[static_cast<Eigen::Index>(k)];
      sigma[k] = s[static_cast<Eigen::Index>(k)];
      acc += alpha_sq[k];
      prefix[k] = acc;
    }
  }

  std::size_t size() const { return sigma.size(); }

  double dX(std::size_t k, std::size_t l) const {
    if (k == l) return 0.0;
    if (k > l) std::swap(k, l);
    const long double gap = static_cast<long double>(sigma[k]) - sigma[l];
    const long double own = prefix[l] - prefix[k];
    const long double sl = sigma[l];
    return static_cast<double>(std::sqrt(gap * gap * prefix[k] + sl * sl * own));
  }
};

// Largest c >= from (c <= last) such that the running d from `from` stays
// below eps, i.e. d(from, c) < eps.
std::size_t chain_reach(const ChainTables& ch, std::size_t from, double eps) {
  double acc = 0.0;
  double best = 0.0;
  std::size_t c = from;
  while (c + 1 < ch.size()) {
    const double next_acc = acc + ch.alpha_sq[c + 1];
    const double next_best = std::max(best, ch.sigma[c + 1] * std::sqrt(next_acc));
    if (!(next_best < eps)) break;
    acc = next_acc;
    best = next_best;
    ++c;
  }
  return c;
}

std::vector<std::uint64_t> chain_d_cover(const ChainTables& ch, double eps) {
  std::vector<std::uint64_t> centers;
  std::size_t uncovered = 0;
  while (uncovered < ch.size()) {
    const std::size_t center = chain_reach(ch, uncovered, eps);
    centers.push_back(center);
    uncovered = chain_reach(ch, center, eps) + 1;
  }
  return centers;
}

std::vector<std::uint64_t> chain_d_packing(const ChainTables& ch,
                                           double separation) {
  // On a chain the nearest earlier member is the latest one.
  std::vector<std::uint64_t> members{0};
  std::size_t last = 0;
  while (true) {
    const std::size_t reach = chain_reach(ch, last, separation);
    if (reach + 1 >= ch.size()) break;
    last = reach + 1;
    members.push_back(last);
  }
  return members;
}

// Distances over the dense node indices of a tree.
class DistanceOracle {
 public:
  DistanceOracle(const Tree& tree, const WeightSystem& w, Metric metric)
      : tree_(tree), metric_(metric) {
    w.check_compatible(tree);
    if (metric == Metric::kDHat) {
      hat_ = dyadic_weights(tree, w);
      weights_ = &*hat_;
      metric_ = Metric::kD;
    } else {
      weights_ = &w;
    }
    if (tree.kind() == TreeKind::kChain) {
      chain_.emplace(tree, *weights_);
    } else if (tree.size() <= kDistanceCacheCap) {
      cache_ = distance_matrix(metric_, tree, *weights_);
    }
    if (metric_ == Metric::kDX) {
      // ||X_t||_2; |norm(t) - norm(s)| <= d_X(t, s).
      const Eigen::VectorXd alpha = weights_->alpha_vector(tree);
      const Eigen::VectorXd sigma = weights_->sigma_vector(tree);
      norm_.resize(alpha.size());
      std::vector<double> acc(tree.size(), 0.0);
      tree.for_each_preorder([&](NodeRef v) {
        const auto i = static_cast<Eigen::Index>(v.key);
        const auto p = tree.parent(v);
        acc[v.key] = (p ? acc[p->key] : 0.0) + alpha[i] * alpha[i];
        norm_[i] = sigma[i] * std::sqrt(acc[v.key]);
      });
    }
  }

  // 1-Lipschitz key for pruning, when one is known.
  const Eigen::VectorXd* key() const { return norm_.size() > 0 ? &norm_ : nullptr; }

  double operator()(std::uint64_t i, std::uint64_t j) const {
    if (cache_.size() > 0) {
      return cache_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    if (chain_ && metric_ == Metric::kDX) return chain_->dX(i, j);
    return distance(metric_, tree_, *weights_, tree_.node(i), tree_.node(j));
  }

  const ChainTables* chain_d() const {
    return chain_ && metric_ == Metric::kD ? &*chain_ : nullptr;
  }

 private:
  const Tree& tree_;
  Metric metric_;
  std::optional<WeightSystem> hat_;
  const WeightSystem* weights_ = nullptr;
  std::optional<ChainTables> chain_;
  Eigen::MatrixXd cache_;
  Eigen::VectorXd norm_;
};

// Scan in index order; keep a node when it is at distance >= separation from
// every kept node. Recent members are checked first since they tend to be
// the near ones.
std::vector<std::uint64_t> separated_scan(const DistanceOracle& dist,
                                          std::uint64_t n, double separation) {
  std::vector<std::uint64_t> kept;
  if (const Eigen::VectorXd* key = dist.key()) {
    // Only members with |key difference| < separation can be near.
    std::multimap<double, std::uint64_t> by_key;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double k = (*key)[static_cast<Eigen::Index>(i)];
      bool near = false;
      for (auto it = by_key.upper_bound(k - separation);
           it != by_key.end() && it->first < k + separation; ++it) {
        if (dist(it->second, i) < separation) {
          near = true;
          break;
        }
      }
      if (!near) {
        kept.push_back(i);
        by_key.emplace(k, i);
      }
    }
    return kept;
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    bool near = false;
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
      if (dist(*it, i) < separation) {
        near = true;
        break;
      }
    }
    if (!near) kept.push_back(i);
  }
  return kept;
}

std::vector<NodeRef> to_refs(const Tree& tree,
                             const std::vector<std::uint64_t>& idx) {
  std::vector<NodeRef> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(tree.node(i));
  return out;
}

// Smallest number of masks whose union is `full`, by subset enumeration.
std::uint64_t min_set_cover(const std::vector<std::uint32_t>& sets,
                            std::uint32_t full) {
  const std::size_t n = sets.size();
  std::vector<std::uint32_t> covered(std::size_t{1} << n, 0);
  std::uint64_t best = n;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const auto low = static_cast<unsigned>(std::countr_zero(mask));
    covered[mask] = covered[mask & (mask - 1)] | sets[low];
    if (covered[mask] == full) {
      best = std::min<std::uint64_t>(best, static_cast<unsigned>(std::popcount(mask)));
    }
  }
  return best;
}

void check_small(const Tree& tree) {
  if (tree.size() > kExactCoverCap) {
    throw cap_exceeded("exact covering is limited to " +
                       std::to_string(kExactCoverCap) + " nodes");
  }
}

}  // namespace

std::vector<NodeRef> greedy_order_net(const Tree& tree, const WeightSystem& w,
                                      double eps) {
  check_eps(eps);
  check_scale(tree);
  w.check_compatible(tree);
  const Eigen::VectorXd alpha = w.alpha_vector(tree);
  const Eigen::VectorXd sigma = w.sigma_vector(tree);
  const std::size_t n = tree.size();
  // Running (sum alpha^2, max) from the nearest net ancestor.
  std::vector<double> acc(n, 0.0);
  std::vector<double> best(n, 0.0);
  std::vector<char> in_net(n, 0);
  std::vector<NodeRef> net;
  tree.for_each_preorder([&](NodeRef v) {
    const std::uint64_t i = v.key;
    const auto p = tree.parent(v);
    if (!p) {
      in_net[i] = 1;
      net.push_back(v);
      return;
    }
    const std::uint64_t pi = p->key;
    const double a = alpha[static_cast<Eigen::Index>(i)];
    acc[i] = (in_net[pi] ? 0.0 : acc[pi]) + a * a;
    best[i] = std::max(in_net[pi] ? 0.0 : best[pi],
                       sigma[static_cast<Eigen::Index>(i)] * std::sqrt(acc[i]));
    if (best[i] >= eps) {
      in_net[i] = 1;
      net.push_back(v);
    }
  });
  return net;
}

std::vector<NodeRef> greedy_ball_cover(const Tree& tree, const WeightSystem& w,
                                       Metric metric, double eps) {
  check_eps(eps);
  check_scale(tree);
  const DistanceOracle dist(tree, w, metric);
  if (const auto* ch = dist.chain_d()) return to_refs(tree, chain_d_cover(*ch, eps));
  return to_refs(tree, separated_scan(dist, tree.size(), eps));
}

std::vector<NodeRef> packing_set(const Tree& tree, const WeightSystem& w,
                                 Metric metric, double separation) {
  check_eps(separation);
  check_scale(tree);
  const DistanceOracle dist(tree, w, metric);
  if (const auto* ch = dist.chain_d()) {
    return to_refs(tree, chain_d_packing(*ch, separation));
  }
  return to_refs(tree, separated_scan(dist, tree.size(), separation));
}

std::uint64_t packing_lower_bound(const Tree& tree, const WeightSystem& w,
                                  Metric metric, double separation) {
  return packing_set(tree, w, metric, separation).size();
}

std::uint64_t exact_cover_small(const Tree& tree, const WeightSystem& w,
                                Metric metric, double eps) {
  check_eps(eps);
  check_small(tree);
  const Eigen::MatrixXd dist = distance_matrix(metric, tree, w);
  const auto n = static_cast<std::size_t>(tree.size());
  std::vector<std::uint32_t> balls(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t s = 0; s < n; ++s) {
      if (dist(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) < eps) {
        balls[c] |= 1u << s;
      }
    }
  }
  return min_set_cover(balls, (1u << n) - 1);
}

std::uint64_t exact_order_cover_small(const Tree& tree, const WeightSystem& w,
                                      Metric metric, double eps) {
  check_eps(eps);
  check_small(tree);
  const Eigen::MatrixXd dist = distance_matrix(metric, tree, w);
  const auto n = static_cast<std::size_t>(tree.size());
  std::vector<std::uint32_t> balls(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t s = 0; s < n; ++s) {
      if (tree.precedes(tree.node(t), tree.node(s)) &&
          dist(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) < eps) {
        balls[t] |= 1u << s;
      }
    }
  }
  return min_set_cover(balls, (1u << n) - 1);
}

IntervalPacking disjoint_interval_packing(const Tree& tree,
                                          const WeightSystem& w, double eps) {
  check_eps(eps);
  check_scale(tree);
  w.check_compatible(tree);
  const Eigen::VectorXd alpha = w.alpha_vector(tree);
  const Eigen::VectorXd sigma = w.sigma_vector(tree);
  const std::size_t n = tree.size();
  std::vector<char> used(n, 0);
  std::vector<std::uint64_t> anchor(n, 0);
  std::vector<double> acc(n, 0.0);

  IntervalPacking out;
  out.epsilon = eps;
  tree.for_each_preorder([&](NodeRef v) {
    const std::uint64_t i = v.key;
    const auto p = tree.parent(v);
    if (!p) return;  // the root only ever starts an interval
    const std::uint64_t pi = p->key;
    // Deepest used ancestor bounds the interval from above; the root may
    // start one since intervals are left-open.
    anchor[i] = used[pi] ? pi : anchor[pi];
    const double a = alpha[static_cast<Eigen::Index>(i)];
    acc[i] = (used[pi] ? 0.0 : acc[pi]) + a * a;
    const double value = sigma[static_cast<Eigen::Index>(i)] * std::sqrt(acc[i]);
    if (value >= eps) {
      const NodeRef start = tree.node(anchor[i]);
      out.intervals.push_back({start, v, v, value});
      for (NodeRef u = v; u.key != start.key; u = *tree.parent(u)) used[u.key] = 1;
    }
  });
  return out;
}

CoverResult cover(const Tree& tree, const WeightSystem& w, Metric metric,
                  double eps) {
  check_eps(eps);
  CoverResult r;
  r.epsilon = eps;
  r.net = greedy_ball_cover(tree, w, metric, eps);
  r.packing = packing_set(tree, w, metric, 2.0 * eps);
  r.upper_bound = r.net.size();
  r.lower_bound = r.packing.size();
  if (tree.size() <= kExactCoverCap) {
    r.exact = exact_cover_small(tree, w, metric, eps);
  } else if (tree.kind() == TreeKind::kChain &&
             (metric == Metric::kD || metric == Metric::kDHat)) {
    r.exact = r.upper_bound;  // interval greedy is optimal on chains
  }
  return r;
}

EntropyCurve entropy_curve(const Tree& tree, const WeightSystem& w,
                           Metric metric, std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] < grid[i - 1])) {
      throw invalid_argument("epsilon grid must be strictly decreasing");
    }
  }
  EntropyCurve curve;
  curve.metric = metric;
  curve.diameter = diameter(tree, w, metric);
  curve.points.resize(grid.size());
  parallel_for(grid.size(),
               [&](std::size_t i) { curve.points[i] = cover(tree, w, metric, grid[i]); });

  // A cover at a smaller eps is a cover at a larger one; a packing at a
  // larger eps is a packing at a smaller one.
  for (std::size_t i = grid.size(); i-- > 1;) {
    auto& coarse = curve.points[i - 1];
    const auto& fine = curve.points[i];
    if (fine.upper_bound < coarse.upper_bound) {
      coarse.upper_bound = fine.upper_bound;
      coarse.net = fine.net;
    }
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    auto& fine = curve.points[i];
    const auto& coarse = curve.points[i - 1];
    if (coarse.lower_bound > fine.lower_bound) {
      fine.lower_bound = coarse.lower_bound;
      fine.packing = coarse.packing;
    }
  }
  return curve;
}

double diameter(const Tree& tree, const WeightSystem& w, Metric metric) {
  check_scale(tree);
  if (tree.kind() == TreeKind::kChain && metric != Metric::kDX) {
    // d(i, j) grows as i decreases and as j increases.
    const DistanceOracle dist(tree, w, metric);
    const ChainTables& ch = *dist.chain_d();
    double acc = 0.0;
    double best = 0.0;
    for (std::size_t k = 1; k < ch.size(); ++k) {
      acc += ch.alpha_sq[k];
      best = std::max(best, ch.sigma[k] * std::sqrt(acc));
    }
    return best;
  }
  if (tree.size() <= kDistanceCacheCap) {
    return distance_matrix(metric, tree, w).maxCoeff();
  }
  // Upper bound through the root for larger trees.
  const DistanceOracle dist(tree, w, metric);
  double best = 0.0;
  for (std::uint64_t i = 0; i < tree.size(); ++i) best = std::max(best, dist(0, i));
  return 2.0 * best;
}

std::vector<double> geometric_grid(double start, double stop,
                                   std::size_t points) {
  if (!(start > 0.0) || !(stop > 0.0) || !(stop < start) || points < 2) {
    throw invalid_argument(
        "geometric grid needs start > stop > 0 and at least two points");
  }
  std::vector<double> grid(points);
  const double ratio = std::log(stop / start) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = start * std::exp(ratio * static_cast<double>(i));
  }
  grid.back() = stop;
  return grid;
}

EpsRange resolvable_range(const Tree& tree, const WeightSystem& w,
                          Metric metric) {
  EpsRange range;
  range.start = diameter(tree, w, metric);
  // Deepest node and its ancestor halfway up.
  NodeRef deepest = tree.root();
  for (std::uint64_t i = 0; i < tree.size(); ++i) {
    if (tree.depth(tree.node(i)) > tree.depth(deepest)) deepest = tree.node(i);
  }
  const NodeRef half = tree.ancestor_at(deepest, tree.depth(deepest) / 2);
  range.stop = distance(metric, tree, w, half, deepest);
  if (!(range.stop > 0.0) || !(range.stop < range.start)) {
    range.stop = range.start * 1e-3;
  }
  return range;
}

DudleyEstimate dudley_integral(const EntropyCurve& curve) {
  if (curve.points.empty()) throw invalid_argument("empty entropy curve");
  auto root_log = [](std::uint64_t n) {
    return std::sqrt(std::log(static_cast<double>(n)));
  };
  DudleyEstimate est;
  const auto& pts = curve.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    est.value += (pts[i].epsilon - pts[i + 1].epsilon) * root_log(pts[i + 1].upper_bound);
  }
  if (pts.front().upper_bound > 1 && curve.diameter &&
      *curve.diameter > pts.front().epsilon) {
    est.value += (*curve.diameter - pts.front().epsilon) * root_log(pts.front().upper_bound);
    est.head_from_diameter = true;
  }
  est.untreated_below = pts.back().epsilon;
  return est;
}

double sudakov_sup(const EntropyCurve& curve) {
  if (curve.points.empty()) throw invalid_argument("empty entropy curve");
  double best = 0.0;
  for (const auto& p : curve.points) {
    best = std::max(best, p.epsilon * std::sqrt(std::log(static_cast<double>(p.lower_bound))));
  }
  return best;
}

SlopeFit fit_entropy_exponent(const EntropyCurve& curve, bool use_upper) {
  const std::size_t m = curve.points.size();
  const std::size_t trim = m / 10;
  if (m < 3 || m - 2 * trim < 2) {
    throw invalid_argument("slope fit needs at least three grid points");
  }
  const auto rows = static_cast<Eigen::Index>(m - 2 * trim);
  Eigen::MatrixXd design(rows, 2);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& p = curve.points[trim + static_cast<std::size_t>(r)];
    design(r, 0) = std::log(1.0 / p.epsilon);
    design(r, 1) = 1.0;
    target[r] = std::log(static_cast<double>(use_upper ? p.upper_bound : p.lower_bound));
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);
  SlopeFit fit;
  fit.slope = coef[0];
  fit.intercept = coef[1];
  fit.residual_rms = std::sqrt((design * coef - target).squaredNorm() /
                               static_cast<double>(rows));
  fit.points_used = static_cast<std::size_t>(rows);
  return fit;
}

EquivalenceReport entropy_equivalence_report(const Tree& tree,
                                             const WeightSystem& w,
                                             std::span<const double> grid) {
  return entropy_equivalence_report(entropy_curve(tree, w, Metric::kD, grid),
                                    entropy_curve(tree, w, Metric::kDX, grid));
}

EquivalenceReport entropy_equivalence_report(const EntropyCurve& cd,
                                             const EntropyCurve& cx) {
  if (cd.points.size() != cx.points.size()) {
    throw invalid_argument("curves must share the epsilon grid");
  }
  EquivalenceReport rep;
  for (std::size_t i = 0; i < cd.points.size(); ++i) {
    if (cd.points[i].epsilon != cx.points[i].epsilon) {
      throw invalid_argument("curves must share the epsilon grid");
    }
    EquivalenceRow row;
    row.epsilon = cd.points[i].epsilon;
    row.n_d = cd.points[i].upper_bound;
    row.n_dX = cx.points[i].upper_bound;
    const double e2 = row.epsilon * row.epsilon;
    row.scaled_d = e2 * std::log(static_cast<double>(row.n_d));
    row.scaled_dX = e2 * std::log(static_cast<double>(row.n_dX));
    row.ratio = static_cast<double>(row.n_dX) / static_cast<double>(row.n_d);
    rep.max_scaled_d = std::max(rep.max_scaled_d, row.scaled_d);
    rep.max_scaled_dX = std::max(rep.max_scaled_dX, row.scaled_dX);
    rep.rows.push_back(row);
  }
  if (!cd.points.empty()) {
    rep.dudley_d = dudley_integral(cd);
    rep.dudley_dX = dudley_integral(cx);
  }
  return rep;
}

void write_curve_csv(std::ostream& out, const EntropyCurve& curve) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << "eps,lower,upper,exact,metric\n";
  buf << std::setprecision(17);
  for (const auto& p : curve.points) {
    buf << p.epsilon << ',' << p.lower_bound << ',' << p.upper_bound << ',';
    if (p.exact) buf << *p.exact;
    buf << ',' << to_string(curve.metric) << '\n';
  }
  out << buf.str();
}

}  // namespace treegauss
