#pragma once

// Monte Carlo for the tree sums X_t = sigma(t) S_t, S_t = sum_{v <= t} alpha(v) xi_v.
// The normal xi_v of replica r is a pure function of (seed, r, node index),
// so deeper truncations extend the same field.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "treegauss/tree.hpp"
#include "treegauss/weights.hpp"

namespace treegauss {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;
inline constexpr unsigned kSimBinaryDepthCap = 24;
// Explicit per-node sampling (fields, decompositions).
inline constexpr std::uint64_t kFieldNodeCap = std::uint64_t{1} << 22;

enum class Statistic {
  kAbsSup,  // sup_t |X_t|
  kMax,     // sup_t X_t
};

Statistic statistic_from_string(const std::string& name);
std::string to_string(Statistic s);

// Standard normal attached to a node in one replica.
double node_normal(std::uint64_t seed, std::uint64_t replica,
                   std::uint64_t node_index);

struct SupSample {
  double value = 0.0;
  NodeRef argmax;
};

struct SampleOptions {
  Statistic statistic = Statistic::kAbsSup;
  bool leaves_only = false;
  unsigned binary_depth_cap = kSimBinaryDepthCap;
};

// One draw of the statistic over all nodes (or all leaves). Ties go to the
// smaller depth, then the smaller node index (the left-most bit path).
SupSample sample_sup(const Tree& tree, const WeightSystem& w,
                     std::uint64_t seed, std::uint64_t replica,
                     const SampleOptions& opts = {});

// One traversal, statistic over nodes of depth <= D for every D in `depths`
// (for leaves_only: nodes of depth exactly D).
std::vector<double> sample_sup_by_depth(const Tree& tree, const WeightSystem& w,
                                        std::uint64_t seed, std::uint64_t replica,
                                        const std::vector<std::uint64_t>& depths,
                                        const SampleOptions& opts = {});

struct SimConfig {
  nlohmann::json tree;
  nlohmann::json weights;
  std::uint64_t replicas = 100;
  std::uint64_t seed = kDefaultSeed;
  std::vector<std::uint64_t> depths;  // empty: the spec depth
  SampleOptions options;
  bool keep_raw = false;

  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& doc);
};

struct DepthEstimate {
  std::uint64_t depth = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<double> raw;  // per replica, when requested
};

struct SimEstimate {
  std::vector<DepthEstimate> rows;
};

// The tree is built once at the largest requested depth.
SimEstimate estimate_esup(const SimConfig& config);
SimEstimate estimate_esup(const Tree& tree, const WeightSystem& w,
                          std::uint64_t replicas, std::uint64_t seed,
                          const std::vector<std::uint64_t>& depths,
                          const SampleOptions& opts = {}, bool keep_raw = false);

// depth,replicas,mean_sup,stderr,seed
void write_estimate_csv(std::ostream& out, const SimEstimate& est);

// Per-node fields of one replica (explicit sampling, <= kFieldNodeCap nodes).
struct Field {
  Eigen::VectorXd xi;
  Eigen::VectorXd partial;  // S_t
  Eigen::VectorXd x;        // X_t
};
Field sample_field(const Tree& tree, const WeightSystem& w, std::uint64_t seed,
                   std::uint64_t replica);

// Y_t = sigma(t) * sum of alpha(v) xi_v over ancestors v of t (t included) in
// the dyadic class of t. Uses the same normals as sample_field.
Eigen::VectorXd sample_localized(const Tree& tree, const WeightSystem& w,
                                 std::uint64_t seed, std::uint64_t replica);

// Relative residuals (each normalized by the sum of magnitudes of the terms).
struct DecompositionResiduals {
  double x_to_y = 0.0;
  double y_to_x = 0.0;
  double sandwich = 0.0;
  std::uint64_t nodes_outside_root_class = 0;
};
DecompositionResiduals decomposition_residuals(const Tree& tree,
                                               const WeightSystem& w,
                                               std::uint64_t seed,
                                               std::uint64_t replica);

// Follow the child with the larger normal from the root and return
// max_n sigma_n (alpha_0 xi_root + sum_{j <= n} alpha_j zeta_j).
double greedy_branch_statistic(const Tree& tree, const WeightSystem& w,
                               std::uint64_t seed, std::uint64_t replica);

// 0.64 sqrt(log 2) sqrt(m) sigma_n (sum_{k=m}^{n} alpha_k^2)^(1/2)
double level_increment_lower_bound(const WeightSystem& w, std::uint64_t m,
                                   std::uint64_t n);

}  // namespace treegauss
