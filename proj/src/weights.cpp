#include "treegauss/weights.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "treegauss/error.hpp"

namespace treegauss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMonotoneSlack = 1e-12;

double json_number(const nlohmann::json& spec, const char* key,
                   std::optional<double> fallback = std::nullopt) {
  if (spec.contains(key)) {
    if (!spec[key].is_number()) {
      throw invalid_argument(std::string("weight parameter \"") + key +
                             "\" must be a number");
    }
    return spec[key].get<double>();
  }
  if (fallback) return *fallback;
  throw invalid_argument(std::string("weight family needs \"") + key + "\"");
}

// log(x) with log(0) = -inf and rejection of negatives.
double checked_log(double x) {
  if (!(x >= 0.0)) throw invalid_argument("weights must be non-negative");
  return x == 0.0 ? -kInf : std::log(x);
}

}  // namespace

struct LevelSequence::Node {
  enum class Kind { kTerm, kArray, kProduct, kDyadic };

  Kind kind = Kind::kTerm;
  Term term;
  std::vector<double> values;
  std::vector<LevelSequence> children;
  double scale = 1.0;
  std::optional<double> at0;
  std::uint64_t hold_below = 0;
  nlohmann::json spec;
};

LevelSequence::LevelSequence(std::shared_ptr<const Node> node)
    : node_(std::move(node)) {}

LevelSequence LevelSequence::term(const Term& t) {
  auto node = std::make_shared<Node>();
  node->term = t;
  node->spec = {{"family", "term"},          {"shift", t.shift},
                {"power", t.power},          {"base", t.base},
                {"log_power", t.log_power},  {"logexp_coef", t.logexp_coef},
                {"logexp_beta", t.logexp_beta}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::constant(double c) {
  auto node = std::make_shared<Node>();
  node->scale = c;
  node->spec = {{"family", "constant"}, {"c", c}};
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw invalid_argument("constant weight must be finite and >= 0");
  }
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::power(double gamma, double shift) {
  auto node = std::make_shared<Node>();
  node->term.power = -gamma;
  node->term.shift = shift;
  node->spec = {{"family", "power"}, {"gamma", gamma}, {"shift", shift}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::geometric(double q) {
  if (!(q > 0.0)) throw invalid_argument("geometric ratio must be positive");
  auto node = std::make_shared<Node>();
  node->term.base = q;
  node->spec = {{"family", "geometric"}, {"q", q}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::power_geometric(double b, double q, double shift) {
  if (!(q > 0.0)) throw invalid_argument("geometric ratio must be positive");
  auto node = std::make_shared<Node>();
  node->term.power = b;
  node->term.base = q;
  node->term.shift = shift;
  node->spec = {
      {"family", "power_geometric"}, {"b", b}, {"q", q}, {"shift", shift}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::log_exp(double beta, double coef) {
  auto node = std::make_shared<Node>();
  node->term.shift = 0.0;
  node->term.logexp_coef = coef;
  node->term.logexp_beta = beta;
  node->at0 = 1.0;
  node->spec = {{"family", "log_exp"}, {"beta", beta}, {"coef", coef}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::array(std::vector<double> values) {
  auto node = std::make_shared<Node>();
  node->kind = Node::Kind::kArray;
  node->spec = {{"family", "array"}, {"values", values}};
  node->values = std::move(values);
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::product(const LevelSequence& a,
                                     const LevelSequence& b) {
  auto node = std::make_shared<Node>();
  node->kind = Node::Kind::kProduct;
  node->children = {a, b};
  node->spec = {{"family", "product"},
                {"factors", nlohmann::json::array({a.to_json(), b.to_json()})}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::dyadic(const LevelSequence& of) {
  auto node = std::make_shared<Node>();
  node->kind = Node::Kind::kDyadic;
  node->children = {of};
  node->spec = {{"family", "dyadic"}, {"of", of.to_json()}};
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("family") ||
      !spec["family"].is_string()) {
    throw invalid_argument("weight sequence needs a \"family\" string");
  }
  const auto family = spec["family"].get<std::string>();
  std::optional<LevelSequence> seq;
  if (family == "constant") {
    seq = constant(json_number(spec, "c"));
  } else if (family == "power") {
    seq = power(json_number(spec, "gamma"), json_number(spec, "shift", 1.0));
  } else if (family == "geometric") {
    seq = geometric(json_number(spec, "q"));
  } else if (family == "power_geometric") {
    seq = power_geometric(json_number(spec, "b"), json_number(spec, "q"),
                          json_number(spec, "shift", 1.0));
  } else if (family == "log_exp") {
    seq = log_exp(json_number(spec, "beta"), json_number(spec, "coef", 0.5));
  } else if (family == "term") {
    Term t;
    t.shift = json_number(spec, "shift", 1.0);
    t.power = json_number(spec, "power", 0.0);
    t.base = json_number(spec, "base", 1.0);
    t.log_power = json_number(spec, "log_power", 0.0);
    t.logexp_coef = json_number(spec, "logexp_coef", 0.0);
    t.logexp_beta = json_number(spec, "logexp_beta", 2.0);
    if (!(t.base > 0.0)) throw invalid_argument("term base must be positive");
    seq = term(t);
  } else if (family == "array") {
    if (!spec.contains("values") || !spec["values"].is_array()) {
      throw invalid_argument("array family needs \"values\"");
    }
    std::vector<double> values;
    for (const auto& v : spec["values"]) {
      if (!v.is_number()) throw invalid_argument("array values must be numbers");
      values.push_back(v.get<double>());
    }
    seq = array(std::move(values));
  } else if (family == "product") {
    if (!spec.contains("factors") || !spec["factors"].is_array() ||
        spec["factors"].empty()) {
      throw invalid_argument("product family needs a \"factors\" list");
    }
    seq = from_json(spec["factors"][0]);
    for (std::size_t i = 1; i < spec["factors"].size(); ++i) {
      seq = product(*seq, from_json(spec["factors"][i]));
    }
  } else if (family == "dyadic") {
    if (!spec.contains("of")) throw invalid_argument("dyadic needs \"of\"");
    seq = dyadic(from_json(spec["of"]));
  } else {
    throw invalid_argument("unknown weight family \"" + family + "\"");
  }
  if (spec.contains("scale")) seq = seq->with_scale(json_number(spec, "scale"));
  if (spec.contains("at0")) seq = seq->with_at0(json_number(spec, "at0"));
  if (spec.contains("hold_below")) {
    const double h = json_number(spec, "hold_below");
    if (!(h >= 0.0)) throw invalid_argument("hold_below must be >= 0");
    seq = seq->with_hold_below(static_cast<std::uint64_t>(h));
  }
  return *seq;
}

nlohmann::json LevelSequence::to_json() const {
  nlohmann::json out = node_->spec;
  const std::string family = out["family"].get<std::string>();
  if (node_->scale != 1.0 && family != "constant") out["scale"] = node_->scale;
  if (node_->at0 && family != "log_exp") out["at0"] = *node_->at0;
  if (node_->at0 && family == "log_exp" && *node_->at0 != 1.0) {
    out["at0"] = *node_->at0;
  }
  if (node_->hold_below > 0) out["hold_below"] = node_->hold_below;
  return out;
}

LevelSequence LevelSequence::with_scale(double scale) const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw invalid_argument("scale must be finite and >= 0");
  }
  auto node = std::make_shared<Node>(*node_);
  node->scale *= scale;
  if (node->kind == Node::Kind::kTerm && node->spec["family"] == "constant") {
    node->spec["c"] = node->scale;
  }
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::with_at0(double value) const {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw invalid_argument("at0 must be finite and >= 0");
  }
  auto node = std::make_shared<Node>(*node_);
  node->at0 = value;
  return LevelSequence(std::move(node));
}

LevelSequence LevelSequence::with_hold_below(std::uint64_t level) const {
  auto node = std::make_shared<Node>(*node_);
  node->hold_below = level;
  return LevelSequence(std::move(node));
}

double LevelSequence::raw_log_value(std::uint64_t k) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Node::Kind::kTerm: {
      const Term& t = n.term;
      const double s = static_cast<double>(k) + t.shift;
      double lv = 0.0;
      if (t.power != 0.0) {
        if (!(s >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
        lv += t.power * std::log(s);
      }
      if (t.base != 1.0) lv += static_cast<double>(k) * std::log(t.base);
      if (t.log_power != 0.0 || t.logexp_coef != 0.0) {
        const double ls = std::log(s);
        if (t.log_power != 0.0) lv += t.log_power * std::log(ls);
        if (t.logexp_coef != 0.0) {
          lv += t.logexp_coef * std::pow(ls, t.logexp_beta);
        }
      }
      return lv;
    }
    case Node::Kind::kArray:
      if (k >= n.values.size()) {
        throw invalid_argument("array weights have no level " +
                               std::to_string(k));
      }
      return checked_log(n.values[k]);
    case Node::Kind::kProduct: {
      double lv = 0.0;
      for (const auto& c : n.children) lv += c.log_value(k);
      return lv;
    }
    case Node::Kind::kDyadic: {
      const double inner = n.children[0].log_value(k);
      if (!std::isfinite(inner)) return inner;
      const double v = std::exp(inner);
      double level;
      if (v > 0.0 && std::isfinite(v)) {
        int e = 0;
        const double m = std::frexp(v, &e);
        // same snapping as dyadic_class
        level = m - 0.5 <= 8 * std::numeric_limits<double>::epsilon()
                    ? 1.0 - e
                    : -static_cast<double>(e);
      } else {
        level = std::floor(-inner / std::log(2.0));
      }
      return -level * std::log(2.0);
    }
  }
  return 0.0;
}

double LevelSequence::log_value(std::uint64_t k) const {
  const Node& n = *node_;
  if (k == 0 && n.at0) return checked_log(*n.at0);
  if (n.scale == 0.0) return -kInf;
  const std::uint64_t level = k < n.hold_below ? n.hold_below : k;
  return std::log(n.scale) + raw_log_value(level);
}

double LevelSequence::value(std::uint64_t k) const {
  return std::exp(log_value(k));
}

std::optional<std::uint64_t> LevelSequence::length() const {
  const Node& n = *node_;
  if (n.kind == Node::Kind::kArray) return n.values.size();
  std::optional<std::uint64_t> out;
  for (const auto& c : n.children) {
    if (const auto len = c.length()) out = out ? std::min(*out, *len) : *len;
  }
  return out;
}

std::optional<Growth> LevelSequence::growth() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Node::Kind::kTerm: {
      const Term& t = n.term;
      Growth g;
      g.log_base = std::log(t.base);
      g.power = t.power;
      g.log_power = t.log_power;
      if (t.logexp_coef != 0.0) {
        if (std::abs(t.logexp_beta - 1.0) <= kGrowthTolerance) {
          g.power += t.logexp_coef;
        } else if (t.logexp_beta > 1.0) {
          g.logexp_coef = t.logexp_coef;
          g.logexp_beta = t.logexp_beta;
        } else {
          return std::nullopt;
        }
      }
      return g;
    }
    case Node::Kind::kProduct: {
      Growth g = constant_growth();
      for (const auto& c : n.children) {
        const auto cg = c.growth();
        if (!cg) return std::nullopt;
        const auto prod = multiply(g, *cg);
        if (!prod) return std::nullopt;
        g = *prod;
      }
      return g;
    }
    case Node::Kind::kArray:
    case Node::Kind::kDyadic:
      return std::nullopt;
  }
  return std::nullopt;
}

bool LevelSequence::is_identically_zero() const {
  const Node& n = *node_;
  if (n.at0 && *n.at0 != 0.0) return false;
  if (n.scale == 0.0) return true;
  if (n.kind == Node::Kind::kArray) {
    for (std::size_t k = n.at0 ? 1 : 0; k < n.values.size(); ++k) {
      if (n.values[k] != 0.0) return false;
    }
    return true;
  }
  if (n.kind == Node::Kind::kProduct) {
    for (const auto& c : n.children) {
      if (c.is_identically_zero()) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

WeightSystem WeightSystem::level(LevelSequence alpha, LevelSequence sigma,
                                 std::uint64_t horizon) {
  double prev_log_sigma = kInf;
  for (std::uint64_t k = 0; k <= horizon; ++k) {
    const double la = alpha.log_value(k);
    const double ls = sigma.log_value(k);
    if (std::isnan(la) || la == kInf) {
      throw invalid_argument("alpha is not finite at level " +
                             std::to_string(k));
    }
    if (!std::isfinite(ls)) {
      throw invalid_argument("sigma must be positive and finite (level " +
                             std::to_string(k) + ")");
    }
    if (ls > prev_log_sigma + kMonotoneSlack) {
      throw invalid_argument("sigma increases at level " + std::to_string(k));
    }
    prev_log_sigma = ls;
  }
  WeightSystem w;
  w.mode_ = WeightMode::kLevel;
  w.horizon_ = horizon;
  w.alpha_levels_ = std::move(alpha);
  w.sigma_levels_ = std::move(sigma);
  return w;
}

WeightSystem WeightSystem::per_node(const Tree& tree, Eigen::VectorXd alpha,
                                    Eigen::VectorXd sigma) {
  const auto n = static_cast<Eigen::Index>(tree.size());
  if (alpha.size() != n || sigma.size() != n) {
    throw invalid_argument("per-node weights need one entry per node");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] < 0.0) {
      throw invalid_argument("alpha must be finite and >= 0 (node " +
                             std::to_string(i) + ")");
    }
    if (!std::isfinite(sigma[i]) || !(sigma[i] > 0.0)) {
      throw invalid_argument("sigma must be finite and > 0 (node " +
                             std::to_string(i) + ")");
    }
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    const auto p = tree.parent(tree.node(static_cast<std::uint64_t>(i)));
    const double sp = sigma[static_cast<Eigen::Index>(p->key)];
    if (sigma[i] > sp * (1.0 + kMonotoneSlack)) {
      throw invalid_argument("sigma increases along the branch at node " +
                             std::to_string(i));
    }
  }
  WeightSystem w;
  w.mode_ = WeightMode::kPerNode;
  w.horizon_ = tree.height();
  w.tree_id_ = tree.id();
  w.alpha_table_ = std::move(alpha);
  w.sigma_table_ = std::move(sigma);
  return w;
}

WeightSystem WeightSystem::from_json(const nlohmann::json& spec,
                                     const Tree& tree) {
  if (!spec.is_object()) throw invalid_argument("weights must be an object");
  const std::string mode =
      spec.contains("mode") ? spec["mode"].get<std::string>() : "level";
  if (!spec.contains("alpha") || !spec.contains("sigma")) {
    throw invalid_argument("weights need \"alpha\" and \"sigma\"");
  }
  if (mode == "level") {
    return level(LevelSequence::from_json(spec["alpha"]),
                 LevelSequence::from_json(spec["sigma"]), tree.height());
  }
  if (mode == "node") {
    auto to_vec = [](const nlohmann::json& arr) {
      if (!arr.is_array()) throw invalid_argument("node weights are arrays");
      Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
      for (std::size_t i = 0; i < arr.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
      }
      return v;
    };
    return per_node(tree, to_vec(spec["alpha"]), to_vec(spec["sigma"]));
  }
  throw invalid_argument("weight mode must be \"level\" or \"node\"");
}

nlohmann::json WeightSystem::to_json() const {
  if (mode_ == WeightMode::kLevel) {
    return {{"mode", "level"},
            {"alpha", alpha_levels_->to_json()},
            {"sigma", sigma_levels_->to_json()}};
  }
  return {{"mode", "node"},
          {"alpha", std::vector<double>(alpha_table_.begin(),
                                        alpha_table_.end())},
          {"sigma", std::vector<double>(sigma_table_.begin(),
                                        sigma_table_.end())}};
}

void WeightSystem::check_compatible(const Tree& tree) const {
  if (mode_ == WeightMode::kPerNode) {
    if (tree.id() != tree_id_) {
      throw invalid_argument("per-node weights belong to another tree");
    }
    return;
  }
  if (tree.height() > horizon_) {
    throw invalid_argument("level weights validated to depth " +
                           std::to_string(horizon_) + " but the tree has depth " +
                           std::to_string(tree.height()));
  }
}

double WeightSystem::alpha(const Tree& tree, NodeRef t) const {
  if (mode_ == WeightMode::kLevel) {
    return alpha_levels_->value(tree.depth(t));
  }
  return alpha_table_[static_cast<Eigen::Index>(tree.index(t))];
}

double WeightSystem::sigma(const Tree& tree, NodeRef t) const {
  if (mode_ == WeightMode::kLevel) {
    return sigma_levels_->value(tree.depth(t));
  }
  return sigma_table_[static_cast<Eigen::Index>(tree.index(t))];
}

const LevelSequence& WeightSystem::alpha_levels() const {
  if (!alpha_levels_) throw Error(ErrorCode::kNotHomogeneous, "weights are per-node");
  return *alpha_levels_;
}

const LevelSequence& WeightSystem::sigma_levels() const {
  if (!sigma_levels_) throw Error(ErrorCode::kNotHomogeneous, "weights are per-node");
  return *sigma_levels_;
}

double WeightSystem::alpha_level(std::uint64_t k) const {
  return alpha_levels().value(k);
}

double WeightSystem::sigma_level(std::uint64_t k) const {
  return sigma_levels().value(k);
}

Eigen::VectorXd WeightSystem::alpha_vector(const Tree& tree) const {
  check_compatible(tree);
  if (mode_ == WeightMode::kPerNode) return alpha_table_;
  Eigen::VectorXd per_level(static_cast<Eigen::Index>(tree.height() + 1));
  for (Eigen::Index k = 0; k < per_level.size(); ++k) {
    per_level[k] = alpha_levels_->value(static_cast<std::uint64_t>(k));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(tree.size()));
  for (std::uint64_t i = 0; i < tree.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        per_level[static_cast<Eigen::Index>(tree.depth(tree.node(i)))];
  }
  return out;
}

Eigen::VectorXd WeightSystem::sigma_vector(const Tree& tree) const {
  check_compatible(tree);
  if (mode_ == WeightMode::kPerNode) return sigma_table_;
  Eigen::VectorXd per_level(static_cast<Eigen::Index>(tree.height() + 1));
  for (Eigen::Index k = 0; k < per_level.size(); ++k) {
    per_level[k] = sigma_levels_->value(static_cast<std::uint64_t>(k));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(tree.size()));
  for (std::uint64_t i = 0; i < tree.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        per_level[static_cast<Eigen::Index>(tree.depth(tree.node(i)))];
  }
  return out;
}

WeightSystem WeightSystem::with_root_alpha(const Tree& tree,
                                           double value) const {
  check_compatible(tree);
  if (mode_ == WeightMode::kLevel) {
    return level(alpha_levels_->with_at0(value), *sigma_levels_, horizon_);
  }
  Eigen::VectorXd alpha = alpha_table_;
  alpha[0] = value;
  return per_node(tree, std::move(alpha), sigma_table_);
}

}  // namespace treegauss
