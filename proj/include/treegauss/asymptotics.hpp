#pragma once

// Growth signatures for level sequences of the form
//   base^n * exp(c * (log n)^beta) * n^power * (log n)^log_power,   beta > 1,
// with just enough algebra (products, powers, partial sums) to decide
// whether sup_n of a combination is finite.

#include <optional>

namespace treegauss {

struct Growth {
  double log_base = 0.0;
  double logexp_coef = 0.0;
  double logexp_beta = 2.0;
  double power = 0.0;
  double log_power = 0.0;
};

inline constexpr double kGrowthTolerance = 1e-9;

Growth constant_growth();

std::optional<Growth> multiply(const Growth& a, const Growth& b);

Growth power_of(const Growth& g, double exponent);

// Asymptotic order of sum_{k <= n} a_k for a positive sequence a of growth g.
// nullopt on the log-log boundary, which the signature cannot express.
std::optional<Growth> partial_sum(const Growth& g);

// sup_n a_n < infinity
bool is_bounded(const Growth& g);

// a_n -> infinity
bool diverges(const Growth& g);

// a_{n+1} >= a_n for all large n
bool eventually_nondecreasing(const Growth& g);

// sup_n sup_{n <= k <= 2n} a_k / a_n < infinity
bool window_ratio_bounded(const Growth& g);

}  // namespace treegauss
