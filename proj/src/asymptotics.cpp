#include "treegauss/asymptotics.hpp"

#include <array>
#include <cmath>

namespace treegauss {

namespace {

bool is_zero(double x) { return std::abs(x) <= kGrowthTolerance; }

// Components ordered from the fastest scale to the slowest.
std::array<double, 4> scales(const Growth& g) {
  return {g.log_base, g.logexp_coef, g.power, g.log_power};
}

int leading_sign(const Growth& g) {
  for (double c : scales(g)) {
    if (!is_zero(c)) return c > 0 ? 1 : -1;
  }
  return 0;
}

}  // namespace

Growth constant_growth() { return Growth{}; }

std::optional<Growth> multiply(const Growth& a, const Growth& b) {
  Growth out;
  out.log_base = a.log_base + b.log_base;
  out.power = a.power + b.power;
  out.log_power = a.log_power + b.log_power;
  if (is_zero(a.logexp_coef)) {
    out.logexp_coef = b.logexp_coef;
    out.logexp_beta = b.logexp_beta;
  } else if (is_zero(b.logexp_coef)) {
    out.logexp_coef = a.logexp_coef;
    out.logexp_beta = a.logexp_beta;
  } else if (std::abs(a.logexp_beta - b.logexp_beta) <= kGrowthTolerance) {
    out.logexp_coef = a.logexp_coef + b.logexp_coef;
    out.logexp_beta = a.logexp_beta;
  } else {
    // The larger beta dominates only if its coefficient survives; keep the
    // algebra exact instead of guessing.
    return std::nullopt;
  }
  if (is_zero(out.logexp_coef)) out.logexp_coef = 0.0;
  return out;
}

Growth power_of(const Growth& g, double exponent) {
  Growth out = g;
  out.log_base *= exponent;
  out.logexp_coef *= exponent;
  out.power *= exponent;
  out.log_power *= exponent;
  return out;
}

std::optional<Growth> partial_sum(const Growth& g) {
  if (g.log_base > kGrowthTolerance) return g;
  if (g.log_base < -kGrowthTolerance) return constant_growth();
  if (g.logexp_coef > kGrowthTolerance) {
    // sum ~ a_n * n / (c beta (log n)^(beta-1))
    Growth out = g;
    out.power += 1.0;
    out.log_power -= g.logexp_beta - 1.0;
    return out;
  }
  if (g.logexp_coef < -kGrowthTolerance) return constant_growth();
  if (g.power > -1.0 + kGrowthTolerance) {
    Growth out = g;
    out.power += 1.0;
    return out;
  }
  if (g.power < -1.0 - kGrowthTolerance) return constant_growth();
  // power == -1: harmonic-type sums
  if (g.log_power > -1.0 + kGrowthTolerance) {
    Growth out;
    out.log_power = g.log_power + 1.0;
    return out;
  }
  if (g.log_power < -1.0 - kGrowthTolerance) return constant_growth();
  return std::nullopt;
}

bool is_bounded(const Growth& g) { return leading_sign(g) <= 0; }

bool diverges(const Growth& g) { return leading_sign(g) > 0; }

bool eventually_nondecreasing(const Growth& g) { return leading_sign(g) >= 0; }

bool window_ratio_bounded(const Growth& g) {
  if (g.log_base > kGrowthTolerance) return false;
  if (g.log_base < -kGrowthTolerance) return true;
  return g.logexp_coef <= kGrowthTolerance;
}

}  // namespace treegauss
