#pragma once

// Boundedness criteria for homogeneous weights on the binary tree:
//   G  = sup_n sigma_n sum_{k=1}^n alpha_k
//   Q  = sup_n sup_{n <= k <= 2n} alpha_k / alpha_n
//   G1 = sup_n sup_{m <= n} sqrt(m) sigma_n (sum_{k=m}^n alpha_k^2)^(1/2)
//   G2 = sup_n sigma_n sqrt(n) (sum_{k=0}^n alpha_k^2)^(1/2)
// Truncated traces are evaluated in log space; named families are decided
// from their growth signatures.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treegauss/weights.hpp"

namespace treegauss {

inline constexpr std::uint64_t kDefaultTruncation = 1'000'000;
inline constexpr std::uint64_t kDefaultG1Truncation = 10'000;
inline constexpr std::uint64_t kG1TruncationCap = 10'000;
// A doubling of N that grows the value by more than this factor counts as growth.
inline constexpr double kTrendFactor = 1.05;

enum class Trend { kConverged, kIncreasing, kOscillating };
std::string to_string(Trend t);

struct CriterionTrace {
  std::string name;
  std::uint64_t truncation = 0;
  std::vector<std::uint64_t> checkpoints;  // N/4, N/2, N
  std::vector<double> log_values;          // -inf for 0
  Trend trend = Trend::kConverged;

  double value(std::size_t i) const;
  double final_value() const { return value(log_values.size() - 1); }
  double final_log_value() const { return log_values.back(); }
  nlohmann::json to_json() const;
};

CriterionTrace eval_G(const WeightSystem& w, std::uint64_t N = kDefaultTruncation);
CriterionTrace eval_Q(const WeightSystem& w, std::uint64_t N = kDefaultTruncation);
CriterionTrace eval_G1(const WeightSystem& w, std::uint64_t N = kDefaultG1Truncation);
CriterionTrace eval_G2(const WeightSystem& w, std::uint64_t N = kDefaultTruncation);

enum class Classification { kBounded, kUnbounded, kInconclusive };
enum class Rule { kClosedForm, kThm61a, kThm61b, kThm62a, kThm62b, kThm62c, kNone };
enum class Certainty { kAnalytic, kHeuristic };

std::string to_string(Classification c);
std::string to_string(Rule r);
std::string to_string(Certainty c);

struct FiredRule {
  Rule rule = Rule::kNone;
  Classification classification = Classification::kInconclusive;
  Certainty certainty = Certainty::kHeuristic;
};

struct Verdict {
  Classification classification = Classification::kInconclusive;
  Rule rule = Rule::kNone;
  Certainty certainty = Certainty::kHeuristic;
  std::vector<FiredRule> fired;  // every rule whose premises hold, in order
  std::map<std::string, CriterionTrace> traces;
  std::uint64_t truncation = 0;

  // A Bounded and an Unbounded rule both fired with analytic certainty.
  bool contradictory() const;
  nlohmann::json to_json() const;
};

struct VerdictOptions {
  std::uint64_t truncation = kDefaultTruncation;
  std::uint64_t g1_truncation = kDefaultG1Truncation;
  bool analytic = true;  // use growth signatures when available
};

Verdict combined_verdict(const WeightSystem& w, const VerdictOptions& opts = {});

// sup_n sigma_n n^{1/2+b} 2^n < infinity, for alpha_k = k^b 2^k.
bool cor64_predicate(double b, const LevelSequence& sigma);
// sup_n sigma_n n (log n)^{-(beta-1)/2} exp((log n)^beta / 2) < infinity,
// for alpha_k^2 = exp((log k)^beta).
bool cor65_predicate(double beta, const LevelSequence& sigma);
// sum_{k<=n} alpha_k^2 over its asymptotic n (beta (log n)^{beta-1})^{-1} exp((log n)^beta).
double cor65_sum_ratio(double beta, std::uint64_t n);

// alpha_k = exp((log k)^beta / 2), alpha_0 = 1.
LevelSequence cor65_alpha(double beta);
// The reciprocal of the displayed expression times n^delta, held constant
// below level 3 so that it is positive and non-increasing.
LevelSequence cor65_sigma(double beta, double delta = 0.0);

struct Prop66Report {
  CriterionTrace metric_side;  // sup sqrt(m) sigma_n (sum_{k=m+1}^n alpha_k^2)^(1/2)
  CriterionTrace g1;
  bool agree = false;          // same trend class
  nlohmann::json to_json() const;
};
Prop66Report prop66_check(const WeightSystem& w,
                          std::uint64_t N = kDefaultG1Truncation);

// (alpha sigma, 1)
WeightSystem product_weight_transfer(const WeightSystem& w);

}  // namespace treegauss
