#include "treegauss/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <locale>
#include <sstream>

#include "treegauss/error.hpp"
#include "treegauss/metrics.hpp"
#include "treegauss/normal.hpp"
#include "treegauss/parallel.hpp"
#include "treegauss/philox.hpp"
#include "treegauss/tree_spec.hpp"

namespace treegauss {

Statistic statistic_from_string(const std::string& name) {
  if (name == "abs_sup" || name == "abs") return Statistic::kAbsSup;
  if (name == "max") return Statistic::kMax;
  throw invalid_argument("unknown statistic \"" + name + "\"");
}

std::string to_string(Statistic s) {
  return s == Statistic::kAbsSup ? "abs_sup" : "max";
}

double node_normal(std::uint64_t seed, std::uint64_t replica,
                   std::uint64_t node_index) {
  return normal_quantile(philox_uniform(seed, node_index, replica));
}

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

// Weights and traversal order prepared once, reused across replicas.
class Sampler {
 public:
  Sampler(const Tree& tree, const WeightSystem& w, unsigned binary_cap)
      : tree_(tree), height_(tree.height()) {
    w.check_compatible(tree);
    if (tree.kind() == TreeKind::kBinary && height_ > binary_cap) {
      throw cap_exceeded("binary simulation depth " + std::to_string(height_) +
                         " exceeds the cap " + std::to_string(binary_cap));
    }
    homogeneous_ = w.is_homogeneous();
    if (homogeneous_) {
      level_alpha_.resize(height_ + 1);
      level_sigma_.resize(height_ + 1);
      for (std::uint64_t k = 0; k <= height_; ++k) {
        level_alpha_[k] = w.alpha_level(k);
        level_sigma_[k] = w.sigma_level(k);
      }
    } else {
      node_alpha_ = w.alpha_vector(tree);
      node_sigma_ = w.sigma_vector(tree);
    }
    if (tree.kind() != TreeKind::kBinary && tree.kind() != TreeKind::kChain) {
      if (tree.size() > kFieldNodeCap) {
        throw cap_exceeded("simulation is limited to " +
                           std::to_string(kFieldNodeCap) + " explicit nodes");
      }
      order_.reserve(tree.size());
      parent_.assign(tree.size(), kNone);
      leaf_.assign(tree.size(), 0);
      tree.for_each_preorder([&](NodeRef v) {
        order_.push_back(v.key);
        if (const auto p = tree.parent(v)) parent_[v.key] = p->key;
        leaf_[v.key] = tree.is_leaf(v) ? 1 : 0;
      });
    }
  }

  std::uint64_t height() const { return height_; }

  // visit(index, depth, is_leaf, x) for every node, parents before children.
  template <class Visit>
  void run(std::uint64_t seed, std::uint64_t replica, Visit&& visit) const {
    switch (tree_.kind()) {
      case TreeKind::kChain:
        run_chain(seed, replica, visit);
        return;
      case TreeKind::kBinary:
        run_binary(seed, replica, visit);
        return;
      default:
        run_generic(seed, replica, visit);
        return;
    }
  }

 private:
  double alpha(std::uint64_t index, std::uint64_t depth) const {
    return homogeneous_ ? level_alpha_[depth]
                        : node_alpha_[static_cast<Eigen::Index>(index)];
  }
  double sigma(std::uint64_t index, std::uint64_t depth) const {
    return homogeneous_ ? level_sigma_[depth]
                        : node_sigma_[static_cast<Eigen::Index>(index)];
  }

  template <class Visit>
  void run_chain(std::uint64_t seed, std::uint64_t replica, Visit& visit) const {
    double partial = 0.0;
    for (std::uint64_t k = 0; k <= height_; ++k) {
      partial += alpha(k, k) * node_normal(seed, replica, k);
      visit(k, k, k == height_, sigma(k, k) * partial);
    }
  }

  // Depth-first with an explicit stack holding only the pending siblings on
  // the current branch; nodes are heap codes (root 1, children 2c, 2c+1).
  template <class Visit>
  void run_binary(std::uint64_t seed, std::uint64_t replica, Visit& visit) const {
    struct Frame {
      std::uint64_t code;
      double parent_partial;
    };
    std::vector<Frame> stack;
    stack.reserve(2 * height_ + 2);
    stack.push_back({1, 0.0});
    const std::uint64_t first_leaf = std::uint64_t{1} << height_;
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      const std::uint64_t index = f.code - 1;
      const auto depth = static_cast<std::uint64_t>(std::bit_width(f.code) - 1);
      const double partial =
          f.parent_partial + alpha(index, depth) * node_normal(seed, replica, index);
      const bool leaf = f.code >= first_leaf;
      visit(index, depth, leaf, sigma(index, depth) * partial);
      if (!leaf) {
        stack.push_back({2 * f.code + 1, partial});
        stack.push_back({2 * f.code, partial});
      }
    }
  }

  template <class Visit>
  void run_generic(std::uint64_t seed, std::uint64_t replica, Visit& visit) const {
    std::vector<double> partial(order_.size(), 0.0);
    std::vector<std::uint64_t> depth(order_.size(), 0);
    for (const std::uint64_t i : order_) {
      const std::uint64_t p = parent_[i];
      const std::uint64_t d = p == kNone ? 0 : depth[p] + 1;
      depth[i] = d;
      partial[i] = (p == kNone ? 0.0 : partial[p]) +
                   alpha(i, d) * node_normal(seed, replica, i);
      visit(i, d, leaf_[i] != 0, sigma(i, d) * partial[i]);
    }
  }

  const Tree& tree_;
  std::uint64_t height_;
  bool homogeneous_ = true;
  std::vector<double> level_alpha_;
  std::vector<double> level_sigma_;
  Eigen::VectorXd node_alpha_;
  Eigen::VectorXd node_sigma_;
  std::vector<std::uint64_t> order_;
  std::vector<std::uint64_t> parent_;
  std::vector<char> leaf_;
};

struct LevelBest {
  std::vector<double> value;
  std::vector<std::uint64_t> index;
  double leaf_value = kMinusInf;
  std::uint64_t leaf_index = kNone;
};

bool better(double v, std::uint64_t i, double best, std::uint64_t best_i) {
  return v > best || (v == best && i < best_i);
}

LevelBest level_best(const Sampler& sampler, std::uint64_t seed,
                     std::uint64_t replica, Statistic stat) {
  LevelBest lb;
  lb.value.assign(sampler.height() + 1, kMinusInf);
  lb.index.assign(sampler.height() + 1, kNone);
  sampler.run(seed, replica,
              [&](std::uint64_t i, std::uint64_t depth, bool leaf, double x) {
                const double v = stat == Statistic::kAbsSup ? std::abs(x) : x;
                if (better(v, i, lb.value[depth], lb.index[depth])) {
                  lb.value[depth] = v;
                  lb.index[depth] = i;
                }
                if (leaf && better(v, i, lb.leaf_value, lb.leaf_index)) {
                  lb.leaf_value = v;
                  lb.leaf_index = i;
                }
              });
  return lb;
}

std::vector<double> by_depth(const LevelBest& lb,
                             const std::vector<std::uint64_t>& depths,
                             bool leaves_only) {
  std::vector<double> prefix(lb.value.size());
  double run = kMinusInf;
  for (std::size_t k = 0; k < lb.value.size(); ++k) {
    run = std::max(run, lb.value[k]);
    prefix[k] = run;
  }
  std::vector<double> out;
  out.reserve(depths.size());
  for (const auto d : depths) out.push_back(leaves_only ? lb.value[d] : prefix[d]);
  return out;
}

void check_depths(const std::vector<std::uint64_t>& depths, std::uint64_t height) {
  for (const auto d : depths) {
    if (d > height) {
      throw cap_exceeded("requested depth " + std::to_string(d) +
                         " exceeds the tree height " + std::to_string(height));
    }
  }
}

void check_field_size(const Tree& tree) {
  if (tree.size() > kFieldNodeCap) {
    throw cap_exceeded("per-node sampling is limited to " +
                       std::to_string(kFieldNodeCap) + " nodes");
  }
}

}  // namespace

SupSample sample_sup(const Tree& tree, const WeightSystem& w,
                     std::uint64_t seed, std::uint64_t replica,
                     const SampleOptions& opts) {
  const Sampler sampler(tree, w, opts.binary_depth_cap);
  const LevelBest lb = level_best(sampler, seed, replica, opts.statistic);
  SupSample out;
  if (opts.leaves_only) {
    out.value = lb.leaf_value;
    out.argmax = tree.node(lb.leaf_index);
    return out;
  }
  std::size_t at = 0;
  for (std::size_t k = 1; k < lb.value.size(); ++k) {
    if (lb.value[k] > lb.value[at]) at = k;
  }
  out.value = lb.value[at];
  out.argmax = tree.node(lb.index[at]);
  return out;
}

std::vector<double> sample_sup_by_depth(const Tree& tree, const WeightSystem& w,
                                        std::uint64_t seed, std::uint64_t replica,
                                        const std::vector<std::uint64_t>& depths,
                                        const SampleOptions& opts) {
  check_depths(depths, tree.height());
  const Sampler sampler(tree, w, opts.binary_depth_cap);
  return by_depth(level_best(sampler, seed, replica, opts.statistic), depths,
                  opts.leaves_only);
}

nlohmann::json SimConfig::to_json() const {
  return {{"tree", tree},
          {"weights", weights},
          {"replicas", replicas},
          {"seed", seed},
          {"depths", depths},
          {"statistic", to_string(options.statistic)},
          {"leaves_only", options.leaves_only},
          {"binary_depth_cap", options.binary_depth_cap},
          {"keep_raw", keep_raw}};
}

SimConfig SimConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("tree") || !doc.contains("weights")) {
    throw invalid_argument("simulation config needs \"tree\" and \"weights\"");
  }
  SimConfig c;
  c.tree = doc["tree"];
  c.weights = doc["weights"];
  try {
    c.replicas = doc.value("replicas", c.replicas);
    c.seed = doc.value("seed", c.seed);
    c.depths = doc.value("depths", c.depths);
    c.options.statistic = statistic_from_string(doc.value("statistic", "abs_sup"));
    c.options.leaves_only = doc.value("leaves_only", false);
    c.options.binary_depth_cap = doc.value("binary_depth_cap", kSimBinaryDepthCap);
    c.keep_raw = doc.value("keep_raw", false);
  } catch (const nlohmann::json::exception& e) {
    throw invalid_argument(std::string("simulation config: ") + e.what());
  }
  return c;
}

SimEstimate estimate_esup(const Tree& tree, const WeightSystem& w,
                          std::uint64_t replicas, std::uint64_t seed,
                          const std::vector<std::uint64_t>& depths_in,
                          const SampleOptions& opts, bool keep_raw) {
  if (replicas < 1) throw invalid_argument("replicas must be at least 1");
  const std::vector<std::uint64_t> depths =
      depths_in.empty() ? std::vector<std::uint64_t>{tree.height()} : depths_in;
  check_depths(depths, tree.height());
  const Sampler sampler(tree, w, opts.binary_depth_cap);

  std::vector<std::vector<double>> draws(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    draws[r] = by_depth(level_best(sampler, seed, r, opts.statistic), depths,
                        opts.leaves_only);
  });

  SimEstimate est;
  for (std::size_t j = 0; j < depths.size(); ++j) {
    DepthEstimate row;
    row.depth = depths[j];
    row.replicas = replicas;
    row.seed = seed;
    double sum = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) sum += draws[r][j];
    row.mean = sum / static_cast<double>(replicas);
    if (replicas > 1) {
      double ss = 0.0;
      for (std::size_t r = 0; r < replicas; ++r) {
        const double dev = draws[r][j] - row.mean;
        ss += dev * dev;
      }
      row.std_error = std::sqrt(ss / static_cast<double>(replicas - 1) /
                                static_cast<double>(replicas));
    }
    if (keep_raw) {
      row.raw.reserve(replicas);
      for (std::size_t r = 0; r < replicas; ++r) row.raw.push_back(draws[r][j]);
    }
    est.rows.push_back(std::move(row));
  }
  return est;
}

SimEstimate estimate_esup(const SimConfig& config) {
  std::optional<std::uint64_t> depth;
  if (!config.depths.empty()) {
    depth = *std::max_element(config.depths.begin(), config.depths.end());
  }
  const std::string kind = config.tree.value("kind", "explicit");
  if (kind != "chain" && kind != "binary") depth.reset();
  const Tree tree = tree_from_spec(config.tree, depth);
  const WeightSystem w = WeightSystem::from_json(config.weights, tree);
  return estimate_esup(tree, w, config.replicas, config.seed, config.depths,
                       config.options, config.keep_raw);
}

void write_estimate_csv(std::ostream& out, const SimEstimate& est) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << "depth,replicas,mean_sup,stderr,seed\n" << std::setprecision(17);
  for (const auto& row : est.rows) {
    buf << row.depth << ',' << row.replicas << ',' << row.mean << ','
        << row.std_error << ',' << row.seed << '\n';
  }
  out << buf.str();
}

Field sample_field(const Tree& tree, const WeightSystem& w, std::uint64_t seed,
                   std::uint64_t replica) {
  check_field_size(tree);
  w.check_compatible(tree);
  const Eigen::VectorXd alpha = w.alpha_vector(tree);
  const Eigen::VectorXd sigma = w.sigma_vector(tree);
  const auto n = static_cast<Eigen::Index>(tree.size());
  Field f{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  tree.for_each_preorder([&](NodeRef v) {
    const auto i = static_cast<Eigen::Index>(v.key);
    const auto p = tree.parent(v);
    f.xi[i] = node_normal(seed, replica, v.key);
    f.partial[i] = (p ? f.partial[static_cast<Eigen::Index>(p->key)] : 0.0) +
                   alpha[i] * f.xi[i];
    f.x[i] = sigma[i] * f.partial[i];
  });
  return f;
}

namespace {

// Per-node sum of alpha xi over the run of same-class ancestors ending at t,
// and the deepest ancestor of a lower class (kNone inside the root class).
struct ClassBlocks {
  Eigen::VectorXd block;
  std::vector<std::uint64_t> lower;
};

ClassBlocks class_blocks(const Tree& tree, const LevelPartition& part,
                         const Eigen::VectorXd& alpha, const Eigen::VectorXd& xi) {
  const auto n = static_cast<Eigen::Index>(tree.size());
  ClassBlocks cb{Eigen::VectorXd(n), std::vector<std::uint64_t>(tree.size(), kNone)};
  tree.for_each_preorder([&](NodeRef v) {
    const auto i = static_cast<Eigen::Index>(v.key);
    const double own = alpha[i] * xi[i];
    const auto p = tree.parent(v);
    if (!p) {
      cb.block[i] = own;
      return;
    }
    const auto pi = static_cast<Eigen::Index>(p->key);
    if (part.class_of(*p) == part.class_of(v)) {
      cb.block[i] = cb.block[pi] + own;
      cb.lower[v.key] = cb.lower[p->key];
    } else {
      cb.block[i] = own;
      cb.lower[v.key] = p->key;
    }
  });
  return cb;
}

double relative(double residual, double scale) {
  return scale > 0.0 ? std::abs(residual) / scale : std::abs(residual);
}

}  // namespace

Eigen::VectorXd sample_localized(const Tree& tree, const WeightSystem& w,
                                 std::uint64_t seed, std::uint64_t replica) {
  check_field_size(tree);
  const Field f = sample_field(tree, w, seed, replica);
  const LevelPartition part(tree, w);
  const ClassBlocks cb = class_blocks(tree, part, w.alpha_vector(tree), f.xi);
  return w.sigma_vector(tree).cwiseProduct(cb.block);
}

DecompositionResiduals decomposition_residuals(const Tree& tree,
                                               const WeightSystem& w,
                                               std::uint64_t seed,
                                               std::uint64_t replica) {
  check_field_size(tree);
  const Field f = sample_field(tree, w, seed, replica);
  const LevelPartition part(tree, w);
  const Eigen::VectorXd alpha = w.alpha_vector(tree);
  const Eigen::VectorXd sigma = w.sigma_vector(tree);
  const Eigen::VectorXd sigma_hat = part.dyadic_weights().sigma_vector(tree);
  const ClassBlocks cb = class_blocks(tree, part, alpha, f.xi);
  const Eigen::VectorXd y = sigma.cwiseProduct(cb.block);
  const Eigen::VectorXd y_hat = sigma_hat.cwiseProduct(cb.block);
  const Eigen::VectorXd x_hat = sigma_hat.cwiseProduct(f.partial);

  DecompositionResiduals out;
  for (std::uint64_t t = 0; t < tree.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    const NodeRef node = tree.node(t);

    // Y_t = X_t - sigma(t)/sigma(lambda^-) X_{lambda^-}
    if (const std::uint64_t lam = cb.lower[t]; lam != kNone) {
      ++out.nodes_outside_root_class;
      const auto li = static_cast<Eigen::Index>(lam);
      const double carried = sigma[i] / sigma[li] * f.x[li];
      const double res = y[i] - (f.x[i] - carried);
      out.x_to_y = std::max(
          out.x_to_y,
          relative(res, std::abs(y[i]) + std::abs(f.x[i]) + std::abs(carried)));
    }

    // X_hat_t = sum_l 2^-(k-l) Y_hat at the deepest node of class l
    const std::int64_t k = part.class_of(node);
    double sum = 0.0;
    double scale = std::abs(x_hat[i]);
    for (std::uint64_t u = t; u != kNone; u = cb.lower[u]) {
      const auto ui = static_cast<Eigen::Index>(u);
      const double term =
          std::ldexp(y_hat[ui], static_cast<int>(part.class_of(tree.node(u)) - k));
      sum += term;
      scale += std::abs(term);
    }
    out.y_to_x = std::max(out.y_to_x, relative(x_hat[i] - sum, scale));

    // |X| <= |X_hat| <= 2|X|
    const double ax = std::abs(f.x[i]);
    const double ah = std::abs(x_hat[i]);
    const double excess = std::max({ax - ah, ah - 2.0 * ax, 0.0});
    out.sandwich = std::max(out.sandwich, relative(excess, ah));
  }
  return out;
}

double greedy_branch_statistic(const Tree& tree, const WeightSystem& w,
                               std::uint64_t seed, std::uint64_t replica) {
  if (tree.kind() != TreeKind::kBinary) {
    throw invalid_argument("greedy branch statistic needs an implicit binary tree");
  }
  if (!w.is_homogeneous()) {
    throw Error(ErrorCode::kNotHomogeneous,
                "greedy branch statistic needs homogeneous weights");
  }
  w.check_compatible(tree);
  std::uint64_t code = 1;
  double partial = w.alpha_level(0) * node_normal(seed, replica, 0);
  double best = w.sigma_level(0) * partial;
  for (std::uint64_t j = 1; j <= tree.height(); ++j) {
    const double left = node_normal(seed, replica, 2 * code - 1);
    const double right = node_normal(seed, replica, 2 * code);
    const double zeta = std::max(left, right);
    code = right > left ? 2 * code + 1 : 2 * code;
    partial += w.alpha_level(j) * zeta;
    best = std::max(best, w.sigma_level(j) * partial);
  }
  return best;
}

double level_increment_lower_bound(const WeightSystem& w, std::uint64_t m,
                                   std::uint64_t n) {
  if (m > n) throw invalid_argument("level increment bound needs m <= n");
  if (!w.is_homogeneous()) {
    throw Error(ErrorCode::kNotHomogeneous,
                "level increment bound needs homogeneous weights");
  }
  double sum = 0.0;
  for (std::uint64_t k = m; k <= n; ++k) {
    const double a = w.alpha_level(k);
    sum += a * a;
  }
  return 0.64 * std::sqrt(std::log(2.0)) * std::sqrt(static_cast<double>(m)) *
         w.sigma_level(n) * std::sqrt(sum);
}

}  // namespace treegauss
