#pragma once

// Covering numbers N(T, rho, eps) with open balls, order covering numbers,
// certified sandwich bounds, the disjoint-interval packing behind the
// Sudakov-type lower bound, and the Dudley/Sudakov functionals.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "treegauss/metrics.hpp"
#include "treegauss/tree.hpp"
#include "treegauss/weights.hpp"

namespace treegauss {

inline constexpr std::size_t kExactCoverCap = 15;
// Generic (non-chain) covering enumerates nodes; above this a dense distance
// cache is not built and distances are evaluated on demand.
inline constexpr std::size_t kDistanceCacheCap = 2048;
inline constexpr std::uint64_t kCoverScaleCap = std::uint64_t{1} << 22;

struct CoverResult {
  double epsilon = 0.0;
  std::uint64_t lower_bound = 1;  // packing at separation 2*eps
  std::uint64_t upper_bound = 1;  // greedy open-ball net at eps
  std::optional<std::uint64_t> exact;
  std::vector<NodeRef> net;
  std::vector<NodeRef> packing;
};

struct EntropyCurve {
  Metric metric = Metric::kD;
  std::optional<double> diameter;
  std::vector<CoverResult> points;  // epsilon strictly decreasing
};

// Top-down greedy eps-order net for d: a node joins when its nearest net
// ancestor is at distance >= eps. Chains and explicit trees.
std::vector<NodeRef> greedy_order_net(const Tree& tree, const WeightSystem& w,
                                      double eps);

// Centers of a valid open-ball eps-cover: a maximal eps-separated set.
// On chains with metric d the balls are order intervals and the
// left-to-right interval greedy is used, which is optimal.
std::vector<NodeRef> greedy_ball_cover(const Tree& tree, const WeightSystem& w,
                                       Metric metric, double eps);

// Maximal set with pairwise distances >= separation, built greedily.
std::vector<NodeRef> packing_set(const Tree& tree, const WeightSystem& w,
                                 Metric metric, double separation);
std::uint64_t packing_lower_bound(const Tree& tree, const WeightSystem& w,
                                  Metric metric, double separation);

// Exact minimal open-ball cover by exhaustive set cover (<= 15 nodes).
std::uint64_t exact_cover_small(const Tree& tree, const WeightSystem& w,
                                Metric metric, double eps);
// Exact minimal eps-order net (<= 15 nodes).
std::uint64_t exact_order_cover_small(const Tree& tree, const WeightSystem& w,
                                      Metric metric, double eps);

struct OrderInterval {
  NodeRef start;    // t_i, excluded
  NodeRef end;      // s_i
  NodeRef witness;  // r_i in (t_i, s_i]
  double witness_value = 0.0;  // sigma(r_i) (sum_{t_i < v <= r_i} alpha^2)^(1/2)
};

struct IntervalPacking {
  double epsilon = 0.0;
  std::vector<OrderInterval> intervals;
  std::size_t count() const { return intervals.size(); }
};

// Greedy maximal family of pairwise disjoint order intervals (t, s] with
// d(t, s) >= eps, scanned in preorder; each interval ends at the first node
// where the threshold is crossed.
IntervalPacking disjoint_interval_packing(const Tree& tree,
                                          const WeightSystem& w, double eps);

CoverResult cover(const Tree& tree, const WeightSystem& w, Metric metric,
                  double eps);

// Per-eps covers with bounds made monotone in eps. The grid must be
// strictly decreasing.
EntropyCurve entropy_curve(const Tree& tree, const WeightSystem& w,
                           Metric metric, std::span<const double> grid);

double diameter(const Tree& tree, const WeightSystem& w, Metric metric);

std::vector<double> geometric_grid(double start, double stop,
                                   std::size_t points);

// Grid range where covering counts of the truncated tree still track the
// untruncated one: from the diameter down to the distance spanned by the
// deeper half of the deepest branch.
struct EpsRange {
  double start = 0.0;
  double stop = 0.0;
};
EpsRange resolvable_range(const Tree& tree, const WeightSystem& w,
                          Metric metric);

struct DudleyEstimate {
  double value = 0.0;
  // [0, untreated_below] is not integrated.
  double untreated_below = 0.0;
  bool head_from_diameter = false;
};

// Upper Riemann sum of sqrt(log N) using the upper bounds: each grid cell
// [eps_{i+1}, eps_i] is charged with N(eps_{i+1}). Above the grid, the cell
// up to the diameter is charged with N(eps_0) when the diameter is known.
DudleyEstimate dudley_integral(const EntropyCurve& curve);

// max over the grid of eps * sqrt(log lower_bound(eps)).
double sudakov_sup(const EntropyCurve& curve);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::size_t points_used = 0;
};

// Least squares of log N against log(1/eps) over the middle 80% of the grid.
SlopeFit fit_entropy_exponent(const EntropyCurve& curve, bool use_upper = true);

struct EquivalenceRow {
  double epsilon = 0.0;
  std::uint64_t n_d = 1;
  std::uint64_t n_dX = 1;
  double scaled_d = 0.0;   // eps^2 log N_d
  double scaled_dX = 0.0;  // eps^2 log N_dX
  double ratio = 1.0;      // N_dX / N_d
};

struct EquivalenceReport {
  std::vector<EquivalenceRow> rows;
  double max_scaled_d = 0.0;
  double max_scaled_dX = 0.0;
  DudleyEstimate dudley_d;
  DudleyEstimate dudley_dX;
};

EquivalenceReport entropy_equivalence_report(const Tree& tree,
                                             const WeightSystem& w,
                                             std::span<const double> grid);
// From curves for d and d_X on the same grid.
EquivalenceReport entropy_equivalence_report(const EntropyCurve& d,
                                             const EntropyCurve& dX);

// eps,lower,upper,exact,metric
void write_curve_csv(std::ostream& out, const EntropyCurve& curve);

}  // namespace treegauss
