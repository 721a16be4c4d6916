#pragma once

// Distances on a weighted tree:
//   d(t,s)   = max_{t < r <= s} sigma(r) (sum_{t < v <= r} alpha(v)^2)^(1/2)   for t <= s,
//              d(t^s, t) + d(t^s, s) otherwise;
//   d_X(t,s) = (E|X_t - X_s|^2)^(1/2);
//   d_hat    = d computed with the dyadic ceiling of sigma.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "treegauss/tree.hpp"
#include "treegauss/weights.hpp"

namespace treegauss {

enum class Metric { kD, kDX, kDHat };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& name);

double dist_d(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s);
double dist_dX(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s);
double dist_dhat(const Tree& tree, const WeightSystem& w, NodeRef t, NodeRef s);
double distance(Metric metric, const Tree& tree, const WeightSystem& w,
                NodeRef t, NodeRef s);

// Homogeneous shortcut for comparable pairs on levels m < n:
//   max_{m < l <= n} sigma_l (sum_{k=m+1}^{l} alpha_k^2)^(1/2)
double dist_d_levels(const WeightSystem& w, std::uint64_t m, std::uint64_t n);

// Dyadic class of sigma: k with 2^-(k+1) < sigma <= 2^-k.
std::int64_t dyadic_class(double sigma);
double dyadic_ceiling(double sigma);

// Dyadic classes I_k of sigma and the rounded weight sigma_hat = 2^-k.
class LevelPartition {
 public:
  LevelPartition(const Tree& tree, const WeightSystem& w);

  std::int64_t class_of(NodeRef t) const;
  double sigma_hat(NodeRef t) const;
  // Weights (alpha, sigma_hat), same mode as the input.
  const WeightSystem& dyadic_weights() const { return hat_; }

  // Along every branch each class is an order interval and classes appear
  // in increasing order. Walks the whole tree.
  bool branch_properties_hold() const;

 private:
  const Tree* tree_;
  std::vector<std::int64_t> classes_;
  WeightSystem hat_;
};

WeightSystem dyadic_weights(const Tree& tree, const WeightSystem& w);

// Dense pairwise distances over all nodes of a small tree.
Eigen::MatrixXd distance_matrix(Metric metric, const Tree& tree,
                                const WeightSystem& w);

struct MetricAxiomReport {
  std::size_t nodes = 0;
  std::size_t symmetry_violations = 0;
  std::size_t identity_violations = 0;   // d(t,t) != 0
  std::size_t zero_distance_pairs = 0;   // t != s with d(t,s) == 0
  std::size_t triangle_violations = 0;
  double worst_triangle_excess = 0.0;    // relative
  bool is_metric() const {
    return symmetry_violations == 0 && identity_violations == 0 &&
           triangle_violations == 0 && zero_distance_pairs == 0;
  }
  bool is_pseudometric() const {
    return symmetry_violations == 0 && identity_violations == 0 &&
           triangle_violations == 0;
  }
};

inline constexpr std::size_t kAxiomCheckCap = 500;

MetricAxiomReport check_metric_axioms(const Tree& tree, const WeightSystem& w,
                                      Metric metric,
                                      double relative_tolerance = 1e-9);

}  // namespace treegauss
