#include "treegauss/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "treegauss/asymptotics.hpp"
#include "treegauss/error.hpp"

namespace treegauss {

std::string to_string(Trend t) {
  switch (t) {
    case Trend::kConverged:
      return "converged";
    case Trend::kIncreasing:
      return "increasing";
    case Trend::kOscillating:
      return "oscillating";
  }
  return "?";
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::kBounded:
      return "Bounded";
    case Classification::kUnbounded:
      return "Unbounded";
    case Classification::kInconclusive:
      return "Inconclusive";
  }
  return "?";
}

std::string to_string(Rule r) {
  switch (r) {
    case Rule::kClosedForm:
      return "ClosedForm";
    case Rule::kThm61a:
      return "Thm6.1a";
    case Rule::kThm61b:
      return "Thm6.1b";
    case Rule::kThm62a:
      return "Thm6.2a";
    case Rule::kThm62b:
      return "Thm6.2b";
    case Rule::kThm62c:
      return "Thm6.2c";
    case Rule::kNone:
      return "none";
  }
  return "?";
}

std::string to_string(Certainty c) {
  return c == Certainty::kAnalytic ? "analytic" : "heuristic";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void require_homogeneous(const WeightSystem& w) {
  if (!w.is_homogeneous()) {
    throw Error(ErrorCode::kNotHomogeneous,
                "criteria need homogeneous (level) weights");
  }
}

void require_truncation(std::uint64_t N) {
  if (N < 1) throw invalid_argument("truncation N must be at least 1");
}

std::vector<double> log_table(const LevelSequence& seq, std::uint64_t N,
                              const char* what) {
  std::vector<double> out(N + 1);
  for (std::uint64_t k = 0; k <= N; ++k) {
    out[k] = seq.log_value(k);
    if (std::isnan(out[k]) || out[k] == std::numeric_limits<double>::infinity()) {
      throw invalid_argument(std::string(what) + " is not finite at level " +
                             std::to_string(k));
    }
  }
  return out;
}

std::vector<std::uint64_t> checkpoints(std::uint64_t N) { return {N / 4, N / 2, N}; }

Trend classify(const std::vector<double>& lv) {
  const double step = std::log(kTrendFactor);
  auto grew = [&](double a, double b) {
    if (b == kNegInf) return false;
    return a == kNegInf || b > a + step;
  };
  const bool first = grew(lv[0], lv[1]);
  const bool second = grew(lv[1], lv[2]);
  if (first && second) return Trend::kIncreasing;
  if (!first && !second) return Trend::kConverged;
  return Trend::kOscillating;
}

// Trace from the running sup of per-n log values (index n = 0..N).
CriterionTrace running_sup_trace(std::string name, std::uint64_t N,
                                 const std::vector<double>& per_n) {
  CriterionTrace t;
  t.name = std::move(name);
  t.truncation = N;
  t.checkpoints = checkpoints(N);
  std::vector<double> run(per_n.size());
  double best = kNegInf;
  for (std::size_t n = 0; n < per_n.size(); ++n) {
    best = std::max(best, per_n[n]);
    run[n] = best;
  }
  for (const auto c : t.checkpoints) t.log_values.push_back(run[c]);
  t.trend = classify(t.log_values);
  return t;
}

struct Tables {
  std::vector<double> la;
  std::vector<double> ls;
};

Tables tables(const WeightSystem& w, std::uint64_t N) {
  require_homogeneous(w);
  require_truncation(N);
  return {log_table(w.alpha_levels(), N, "alpha"),
          log_table(w.sigma_levels(), N, "sigma")};
}

// log of sup_{1 <= n <= M} sup_{n <= k <= min(2n, M)} alpha_k / alpha_n
double log_Q(const std::vector<double>& la, std::uint64_t M) {
  std::deque<std::uint64_t> window;  // indices with decreasing la
  std::uint64_t right = 0;
  double best = 0.0;
  for (std::uint64_t n = 1; n <= M; ++n) {
    const std::uint64_t end = std::min(2 * n, M);
    while (right < end) {
      ++right;
      while (!window.empty() && la[window.back()] <= la[right]) window.pop_back();
      window.push_back(right);
    }
    while (window.front() < n) window.pop_front();
    best = std::max(best, la[window.front()] - la[n]);
  }
  return best;
}

// Per-n values of sup_m sqrt(m) sigma_n (sum alpha_k^2)^(1/2), k from m
// (or m+1 when `exclusive`) to n. Terms are scaled by the largest alpha up
// to n so that geometric growth does not overflow.
std::vector<double> g1_per_n(const Tables& t, std::uint64_t N, bool exclusive) {
  std::vector<double> out(N + 1, kNegInf);
  double top = kNegInf;
  for (std::uint64_t n = 1; n <= N; ++n) {
    top = std::max(top, t.la[n]);
    if (top == kNegInf) continue;
    double acc = 0.0;
    double best = kNegInf;
    for (std::uint64_t m = n; m >= 1; --m) {
      if (exclusive) {
        if (m == n) continue;
        acc += std::exp(2.0 * (t.la[m + 1] - top));
      } else {
        acc += std::exp(2.0 * (t.la[m] - top));
      }
      if (acc > 0.0) {
        best = std::max(best, 0.5 * std::log(static_cast<double>(m)) + 0.5 * std::log(acc));
      }
    }
    if (best != kNegInf) out[n] = t.ls[n] + top + best;
  }
  return out;
}

void check_g1_cap(std::uint64_t N) {
  if (N > kG1TruncationCap) {
    throw cap_exceeded("G1 truncation is limited to " +
                       std::to_string(kG1TruncationCap));
  }
}

}  // namespace

double CriterionTrace::value(std::size_t i) const { return std::exp(log_values.at(i)); }

nlohmann::json CriterionTrace::to_json() const {
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json logs = nlohmann::json::array();
  for (std::size_t i = 0; i < log_values.size(); ++i) {
    const double v = value(i);
    values.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
    logs.push_back(std::isfinite(log_values[i]) ? nlohmann::json(log_values[i])
                                                : nlohmann::json(nullptr));
  }
  return {{"name", name},         {"truncation", truncation},
          {"checkpoints", checkpoints}, {"values", values},
          {"log_values", logs},   {"trend", to_string(trend)}};
}

CriterionTrace eval_G(const WeightSystem& w, std::uint64_t N) {
  const Tables t = tables(w, N);
  std::vector<double> per_n(N + 1, kNegInf);
  double sum = kNegInf;
  for (std::uint64_t n = 1; n <= N; ++n) {
    sum = log_add(sum, t.la[n]);
    per_n[n] = t.ls[n] + sum;
  }
  return running_sup_trace("G", N, per_n);
}

CriterionTrace eval_Q(const WeightSystem& w, std::uint64_t N) {
  const Tables t = tables(w, N);
  for (std::uint64_t k = 1; k <= N; ++k) {
    if (t.la[k] == kNegInf) {
      throw invalid_argument("Q needs alpha_k > 0, zero at level " + std::to_string(k));
    }
  }
  CriterionTrace out;
  out.name = "Q";
  out.truncation = N;
  out.checkpoints = checkpoints(N);
  for (const auto c : out.checkpoints) out.log_values.push_back(log_Q(t.la, c));
  out.trend = classify(out.log_values);
  return out;
}

CriterionTrace eval_G1(const WeightSystem& w, std::uint64_t N) {
  check_g1_cap(N);
  const Tables t = tables(w, N);
  return running_sup_trace("G1", N, g1_per_n(t, N, false));
}

CriterionTrace eval_G2(const WeightSystem& w, std::uint64_t N) {
  const Tables t = tables(w, N);
  std::vector<double> per_n(N + 1, kNegInf);
  double sum = kNegInf;
  for (std::uint64_t n = 0; n <= N; ++n) {
    sum = log_add(sum, 2.0 * t.la[n]);
    if (n > 0 && sum != kNegInf) {
      per_n[n] = t.ls[n] + 0.5 * std::log(static_cast<double>(n)) + 0.5 * sum;
    }
  }
  return running_sup_trace("G2", N, per_n);
}

bool Verdict::contradictory() const {
  bool bounded = false;
  bool unbounded = false;
  for (const auto& f : fired) {
    if (f.certainty != Certainty::kAnalytic) continue;
    bounded |= f.classification == Classification::kBounded;
    unbounded |= f.classification == Classification::kUnbounded;
  }
  return bounded && unbounded;
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json tr = nlohmann::json::object();
  for (const auto& [name, t] : traces) tr[name] = t.to_json();
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& f : fired) {
    rules.push_back({{"rule", to_string(f.rule)},
                     {"classification", to_string(f.classification)},
                     {"certainty", to_string(f.certainty)}});
  }
  return {{"classification", to_string(classification)},
          {"rule", to_string(rule)},
          {"certainty", to_string(certainty)},
          {"fired", rules},
          {"traces", tr},
          {"truncation", truncation}};
}

namespace {

// Whether a criterion is finite, and how that was decided.
struct Finding {
  std::optional<bool> finite;
  Certainty certainty = Certainty::kHeuristic;
};

Finding from_trace(const std::map<std::string, CriterionTrace>& traces,
                   const std::string& name) {
  const auto it = traces.find(name);
  if (it == traces.end()) return {};
  switch (it->second.trend) {
    case Trend::kConverged:
      return {true, Certainty::kHeuristic};
    case Trend::kIncreasing:
      return {false, Certainty::kHeuristic};
    case Trend::kOscillating:
      return {};
  }
  return {};
}

Certainty both(Certainty a, Certainty b) {
  return a == Certainty::kAnalytic && b == Certainty::kAnalytic ? Certainty::kAnalytic
                                                                : Certainty::kHeuristic;
}

std::optional<Growth> times(const std::optional<Growth>& a,
                            const std::optional<Growth>& b) {
  if (!a || !b) return std::nullopt;
  return multiply(*a, *b);
}

}  // namespace

Verdict combined_verdict(const WeightSystem& w, const VerdictOptions& opts) {
  require_homogeneous(w);
  Verdict v;
  v.truncation = opts.truncation;

  auto fire = [&](Rule rule, Classification c, Certainty cert) {
    v.fired.push_back({rule, c, cert});
  };

  if (w.alpha_levels().is_identically_zero()) {
    fire(Rule::kClosedForm, Classification::kBounded, Certainty::kAnalytic);
  } else {
    v.traces["G"] = eval_G(w, opts.truncation);
    v.traces["G2"] = eval_G2(w, opts.truncation);
    v.traces["G1"] = eval_G1(w, std::min(opts.g1_truncation, opts.truncation));
    try {
      v.traces["Q"] = eval_Q(w, opts.truncation);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInvalidArgument) throw;
    }

    Finding g = from_trace(v.traces, "G");
    Finding q = from_trace(v.traces, "Q");
    Finding g2 = from_trace(v.traces, "G2");
    Finding g1 = from_trace(v.traces, "G1");
    bool g1_via_monotone = false;

    const auto ga = opts.analytic ? w.alpha_levels().growth() : std::nullopt;
    const auto gs = opts.analytic ? w.sigma_levels().growth() : std::nullopt;
    if (ga && gs) {
      const auto sum_a = partial_sum(*ga);
      if (const auto gg = times(gs, sum_a)) g = {is_bounded(*gg), Certainty::kAnalytic};
      q = {window_ratio_bounded(*ga), Certainty::kAnalytic};
      Growth root_n;
      root_n.power = 0.5;
      const auto sum_a2 = partial_sum(power_of(*ga, 2.0));
      std::optional<Growth> g2g;
      if (sum_a2) g2g = times(times(gs, root_n), power_of(*sum_a2, 0.5));
      if (g2g) {
        g2 = {is_bounded(*g2g), Certainty::kAnalytic};
        // For non-decreasing alpha, G2/2 <= G1 <= G2.
        if (eventually_nondecreasing(*ga)) {
          g1 = g2;
          g1_via_monotone = true;
        }
      }
    }

    if (g.finite && !*g.finite) {
      fire(Rule::kThm61a, Classification::kUnbounded, g.certainty);
    }
    if (g.finite && *g.finite && q.finite && *q.finite) {
      fire(Rule::kThm61b, Classification::kBounded, both(g.certainty, q.certainty));
    }
    if (g2.finite && *g2.finite) {
      fire(Rule::kThm62b, Classification::kBounded, g2.certainty);
    }
    if (g1.finite && !*g1.finite) {
      fire(g1_via_monotone ? Rule::kThm62c : Rule::kThm62a,
           Classification::kUnbounded, g1.certainty);
    }
  }

  // Analytic rules take precedence over heuristic ones; list order otherwise.
  const FiredRule* chosen = nullptr;
  for (const auto& f : v.fired) {
    if (f.certainty == Certainty::kAnalytic) {
      chosen = &f;
      break;
    }
  }
  if (!chosen && !v.fired.empty()) chosen = &v.fired.front();
  if (chosen) {
    v.classification = chosen->classification;
    v.rule = chosen->rule;
    v.certainty = chosen->certainty;
  }
  return v;
}

bool cor64_predicate(double b, const LevelSequence& sigma) {
  const auto gs = sigma.growth();
  if (!gs) throw invalid_argument("sigma has no growth signature");
  Growth g;
  g.log_base = std::log(2.0);
  g.power = 0.5 + b;
  const auto prod = multiply(*gs, g);
  if (!prod) throw invalid_argument("growth product is not expressible");
  return is_bounded(*prod);
}

bool cor65_predicate(double beta, const LevelSequence& sigma) {
  if (!(beta > 1.0)) throw invalid_argument("beta must exceed 1");
  const auto gs = sigma.growth();
  if (!gs) throw invalid_argument("sigma has no growth signature");
  Growth g;
  g.power = 1.0;
  g.log_power = -(beta - 1.0) / 2.0;
  g.logexp_coef = 0.5;
  g.logexp_beta = beta;
  const auto prod = multiply(*gs, g);
  if (!prod) throw invalid_argument("growth product is not expressible");
  return is_bounded(*prod);
}

double cor65_sum_ratio(double beta, std::uint64_t n) {
  if (!(beta > 1.0)) throw invalid_argument("beta must exceed 1");
  if (n < 2) throw invalid_argument("n must be at least 2");
  const LevelSequence a = cor65_alpha(beta);
  const double ln = std::log(static_cast<double>(n));
  const double log_scale = std::pow(ln, beta);
  // Sum with the largest term factored out.
  double sum = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    sum += std::exp(2.0 * a.log_value(k) - log_scale);
  }
  const double asym = static_cast<double>(n) / (beta * std::pow(ln, beta - 1.0));
  return sum / asym;
}

LevelSequence cor65_alpha(double beta) {
  if (!(beta > 1.0)) throw invalid_argument("beta must exceed 1");
  return LevelSequence::log_exp(beta, 0.5);
}

LevelSequence cor65_sigma(double beta, double delta) {
  if (!(beta > 1.0)) throw invalid_argument("beta must exceed 1");
  LevelSequence::Term t;
  t.shift = 0.0;
  t.power = -1.0 + delta;
  t.log_power = (beta - 1.0) / 2.0;
  t.logexp_coef = -0.5;
  t.logexp_beta = beta;
  return LevelSequence::term(t).with_hold_below(3);
}

nlohmann::json Prop66Report::to_json() const {
  return {{"metric_side", metric_side.to_json()}, {"G1", g1.to_json()}, {"agree", agree}};
}

Prop66Report prop66_check(const WeightSystem& w, std::uint64_t N) {
  check_g1_cap(N);
  const Tables t = tables(w, N);
  Prop66Report r;
  r.metric_side = running_sup_trace("metric_side", N, g1_per_n(t, N, true));
  r.g1 = running_sup_trace("G1", N, g1_per_n(t, N, false));
  auto settled = [](Trend tr) { return tr == Trend::kConverged; };
  r.agree = settled(r.metric_side.trend) == settled(r.g1.trend) &&
            r.metric_side.trend != Trend::kOscillating &&
            r.g1.trend != Trend::kOscillating;
  return r;
}

WeightSystem product_weight_transfer(const WeightSystem& w) {
  require_homogeneous(w);
  return WeightSystem::level(LevelSequence::product(w.alpha_levels(), w.sigma_levels()),
                             LevelSequence::constant(1.0), w.horizon());
}

}  // namespace treegauss
