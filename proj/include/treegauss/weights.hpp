#pragma once

// Weight systems (alpha, sigma) on a tree: per-node tables or level
// sequences ("homogeneous" weights).

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "treegauss/asymptotics.hpp"
#include "treegauss/tree.hpp"

namespace treegauss {

// A lazily evaluated sequence k -> a_k >= 0.
//
// Named families (all accept optional "scale", "at0" and "hold_below"):
//   constant(c)                 a_k = c
//   power(gamma, shift=1)       a_k = (k+shift)^(-gamma)
//   geometric(q)                a_k = q^k
//   power_geometric(b, q, s=1)  a_k = (k+s)^b q^k
//   log_exp(beta, coef=1/2)     a_k = exp(coef (log k)^beta), a_0 = 1
//   term(...)                   general product of the factors above
//   array(values)               explicit finite table
//   product(factors)            pointwise product
//   dyadic(of)                  2^-floor(-log2 a_k), the dyadic ceiling
// "at0" overrides a_0; "hold_below" = h evaluates levels k < h at h.
class LevelSequence {
 public:
  struct Term {
    double shift = 1.0;
    double power = 0.0;
    double base = 1.0;
    double log_power = 0.0;
    double logexp_coef = 0.0;
    double logexp_beta = 2.0;
  };

  static LevelSequence constant(double c);
  static LevelSequence power(double gamma, double shift = 1.0);
  static LevelSequence geometric(double q);
  static LevelSequence power_geometric(double b, double q, double shift = 1.0);
  static LevelSequence log_exp(double beta, double coef = 0.5);
  static LevelSequence term(const Term& t);
  static LevelSequence array(std::vector<double> values);
  static LevelSequence product(const LevelSequence& a, const LevelSequence& b);
  static LevelSequence dyadic(const LevelSequence& of);

  static LevelSequence from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  LevelSequence with_scale(double scale) const;
  LevelSequence with_at0(double value) const;
  LevelSequence with_hold_below(std::uint64_t level) const;

  double value(std::uint64_t k) const;
  // log a_k, -inf for zero entries; stays finite where value() overflows.
  double log_value(std::uint64_t k) const;

  // Number of defined levels for array-backed sequences.
  std::optional<std::uint64_t> length() const;
  // Tail growth signature; nullopt for tables and dyadic rounding.
  std::optional<Growth> growth() const;
  bool is_identically_zero() const;

 private:
  struct Node;
  explicit LevelSequence(std::shared_ptr<const Node> node);

  double raw_log_value(std::uint64_t k) const;

  std::shared_ptr<const Node> node_;
};

enum class WeightMode { kPerNode, kLevel };

// Validated weights. sigma is strictly positive and non-increasing along
// every branch, alpha is non-negative; both finite.
class WeightSystem {
 public:
  // Level weights validated on levels 0..horizon.
  static WeightSystem level(LevelSequence alpha, LevelSequence sigma,
                            std::uint64_t horizon);
  // Per-node weights indexed by Tree::index.
  static WeightSystem per_node(const Tree& tree, Eigen::VectorXd alpha,
                               Eigen::VectorXd sigma);

  // {"mode":"level","alpha":{...},"sigma":{...}} or
  // {"mode":"node","alpha":[...],"sigma":[...]}
  static WeightSystem from_json(const nlohmann::json& spec, const Tree& tree);
  nlohmann::json to_json() const;

  WeightMode mode() const noexcept { return mode_; }
  bool is_homogeneous() const noexcept { return mode_ == WeightMode::kLevel; }
  std::uint64_t horizon() const noexcept { return horizon_; }

  // Throws unless these weights can be evaluated on every node of `tree`.
  void check_compatible(const Tree& tree) const;

  double alpha(const Tree& tree, NodeRef t) const;
  double sigma(const Tree& tree, NodeRef t) const;

  // Level mode only.
  const LevelSequence& alpha_levels() const;
  const LevelSequence& sigma_levels() const;
  double alpha_level(std::uint64_t k) const;
  double sigma_level(std::uint64_t k) const;

  // Per-node mode only.
  const Eigen::VectorXd& alpha_table() const { return alpha_table_; }
  const Eigen::VectorXd& sigma_table() const { return sigma_table_; }

  // alpha and sigma tabulated per node of `tree` (either mode).
  Eigen::VectorXd alpha_vector(const Tree& tree) const;
  Eigen::VectorXd sigma_vector(const Tree& tree) const;

  // Same weights with alpha(root) replaced.
  WeightSystem with_root_alpha(const Tree& tree, double value) const;

 private:
  WeightSystem() = default;

  WeightMode mode_ = WeightMode::kLevel;
  std::uint64_t horizon_ = 0;
  std::uint64_t tree_id_ = 0;
  std::optional<LevelSequence> alpha_levels_;
  std::optional<LevelSequence> sigma_levels_;
  Eigen::VectorXd alpha_table_;
  Eigen::VectorXd sigma_table_;
};

}  // namespace treegauss
