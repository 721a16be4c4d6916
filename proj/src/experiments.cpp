#include "treegauss/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <locale>
#include <set>
#include <sstream>

#include "treegauss/criteria.hpp"
#include "treegauss/entropy.hpp"
#include "treegauss/error.hpp"
#include "treegauss/metrics.hpp"
#include "treegauss/simulate.hpp"
#include "treegauss/tree_spec.hpp"

namespace treegauss {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {"command", "tree",     "weights",
                                          "eps",     "depths",   "replicas",
                                          "seed",    "out_dir"};

template <class T>
T read(const json& doc, const char* key, T fallback) {
  try {
    return doc.contains(key) ? doc[key].get<T>() : fallback;
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("config key \"") + key + "\": " + e.what());
  }
}

std::string format_number(double x) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << x;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& doc, Artifacts& written) {
  write_text(path, doc.dump(2) + "\n");
  written.push_back(path);
}

void write_csv(const ExperimentConfig& config, const std::string& name,
               const std::string& text, Artifacts& written) {
  const fs::path path = config.out_dir / (name + ".csv");
  write_text(path, text);
  written.push_back(path);
  write_json(config.out_dir / (name + ".config.json"), config.to_json(), written);
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw invalid_argument("output directory " + dir.string() + " is not usable");
  }
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw invalid_argument("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

json dudley_json(const DudleyEstimate& d) {
  return {{"value", d.value},
          {"untreated_below", d.untreated_below},
          {"head_from_diameter", d.head_from_diameter}};
}

std::vector<Metric> requested_metrics(const ExperimentConfig& config) {
  std::vector<Metric> out;
  if (config.options.contains("metrics")) {
    for (const auto& m : config.options["metrics"]) {
      out.push_back(metric_from_string(m.get<std::string>()));
    }
  } else {
    out.push_back(metric_from_string(read<std::string>(config.options, "metric", "d")));
  }
  if (out.empty()) throw invalid_argument("no metric requested");
  return out;
}

std::vector<double> grid_for(const ExperimentConfig& config, const Tree& tree,
                             const WeightSystem& w, Metric metric) {
  if (config.eps) return geometric_grid(config.eps->start, config.eps->stop, config.eps->points);
  const EpsRange r = resolvable_range(tree, w, metric);
  return geometric_grid(r.start, r.stop, config.eps_points);
}

void require_weights(const json& weights) {
  if (weights.is_null()) throw invalid_argument("config needs \"weights\"");
}

}  // namespace

namespace {

void check_command(const std::string& command) {
  if (!command.empty() && command != "entropy" && command != "compare-metrics" &&
      command != "simulate" && command != "criteria") {
    throw invalid_argument("unknown command \"" + command + "\"");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw invalid_argument("config must be a JSON object");
  ExperimentConfig c;
  c.command = read<std::string>(doc, "command", "");
  check_command(c.command);
  if (doc.contains("tree")) c.tree = doc["tree"];
  if (doc.contains("weights")) c.weights = doc["weights"];
  if (doc.contains("eps")) {
    const json& e = doc["eps"];
    if (!e.is_object()) throw invalid_argument("\"eps\" must be an object");
    c.eps_points = read<std::size_t>(e, "points", c.eps_points);
    if (e.contains("start") || e.contains("stop")) {
      c.eps = EpsGrid{read<double>(e, "start", 0.0), read<double>(e, "stop", 0.0),
                      c.eps_points};
    }
  }
  if (doc.contains("depths")) {
    if (doc["depths"].is_array()) {
      c.depths = read<std::vector<std::uint64_t>>(doc, "depths", {});
    } else {
      c.depths = {read<std::uint64_t>(doc, "depths", 0)};
    }
  }
  c.replicas = read<std::uint64_t>(doc, "replicas", c.replicas);
  c.seed = read<std::uint64_t>(doc, "seed", c.seed);
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownKeys.contains(key)) c.options[key] = value;
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json doc = options;
  doc["command"] = command;
  if (!tree.is_null()) doc["tree"] = tree;
  if (!weights.is_null()) doc["weights"] = weights;
  if (eps) {
    doc["eps"] = {{"start", eps->start}, {"stop", eps->stop}, {"points", eps->points}};
  } else {
    doc["eps"] = {{"points", eps_points}};
  }
  doc["depths"] = depths;
  doc["replicas"] = replicas;
  doc["seed"] = seed;
  return doc;
}

void ExperimentConfig::validate() const {
  if (eps) {
    if (!(eps->start > 0.0) || !(eps->stop > 0.0) || !(eps->stop < eps->start)) {
      throw invalid_argument("eps grid needs start > stop > 0");
    }
    if (eps->points < 2) throw invalid_argument("eps grid needs at least 2 points");
  } else if (eps_points < 2) {
    throw invalid_argument("eps grid needs at least 2 points");
  }
  if (replicas < 1) throw invalid_argument("replicas must be at least 1");
  check_command(command);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw invalid_argument("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw invalid_argument("config " + path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(doc);
}

Artifacts run_entropy(const ExperimentConfig& config) {
  config.validate();
  require_weights(config.weights);
  prepare_out_dir(config.out_dir);
  const Tree tree = tree_from_spec(config.tree);
  const WeightSystem w = WeightSystem::from_json(config.weights, tree);
  const std::vector<Metric> metrics = requested_metrics(config);

  Artifacts written;
  json summary = json::object();
  for (const Metric metric : metrics) {
    EntropyCurve curve;
    curve.metric = metric;
    curve.diameter = tree.size() > 1 ? diameter(tree, w, metric) : 0.0;
    if (tree.size() > 1 && *curve.diameter > 0.0) {
      const std::vector<double> grid = grid_for(config, tree, w, metric);
      curve = entropy_curve(tree, w, metric, grid);
    }
    std::ostringstream csv;
    write_curve_csv(csv, curve);
    write_csv(config, "entropy_" + to_string(metric), csv.str(), written);

    json m = {{"diameter", *curve.diameter}, {"points", curve.points.size()}};
    if (curve.points.empty()) {
      m["dudley"] = dudley_json(DudleyEstimate{});
      m["sudakov"] = 0.0;
    } else {
      m["dudley"] = dudley_json(dudley_integral(curve));
      m["sudakov"] = sudakov_sup(curve);
      double worst = 1.0;
      for (const auto& p : curve.points) {
        worst = std::max(worst, static_cast<double>(p.upper_bound) /
                                    static_cast<double>(p.lower_bound));
      }
      m["max_upper_over_lower"] = worst;
      if (curve.points.size() >= 3) {
        const SlopeFit fit = fit_entropy_exponent(curve);
        m["slope"] = {{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"residual_rms", fit.residual_rms},
                      {"points_used", fit.points_used}};
      }
    }
    summary[to_string(metric)] = m;
  }
  write_json(config.out_dir / "entropy_summary.json",
             {{"config", config.to_json()}, {"metrics", summary}}, written);
  return written;
}

Artifacts run_compare_metrics(const ExperimentConfig& config) {
  config.validate();
  require_weights(config.weights);
  prepare_out_dir(config.out_dir);
  const Tree tree = tree_from_spec(config.tree);
  const WeightSystem w = WeightSystem::from_json(config.weights, tree);
  Artifacts written;
  json summary = {{"config", config.to_json()}};

  if (read<bool>(config.options, "curves", true) && tree.size() > 1) {
    const std::vector<double> grid = grid_for(config, tree, w, Metric::kD);
    const EntropyCurve cd = entropy_curve(tree, w, Metric::kD, grid);
    const EntropyCurve cx = entropy_curve(tree, w, Metric::kDX, grid);
    const EquivalenceReport rep = entropy_equivalence_report(cd, cx);

    std::ostringstream csv;
    csv << "eps,n_d,n_dX,ratio,scaled_d,scaled_dX\n";
    for (const auto& r : rep.rows) {
      csv << format_number(r.epsilon) << ',' << r.n_d << ',' << r.n_dX << ','
          << format_number(r.ratio) << ',' << format_number(r.scaled_d) << ','
          << format_number(r.scaled_dX) << '\n';
    }
    write_csv(config, "compare_metrics", csv.str(), written);

    json cmp = {{"max_scaled_d", rep.max_scaled_d},
                {"max_scaled_dX", rep.max_scaled_dX},
                {"ratio_first", rep.rows.front().ratio},
                {"ratio_last", rep.rows.back().ratio},
                {"dudley_d", dudley_json(rep.dudley_d)},
                {"dudley_dX", dudley_json(rep.dudley_dX)}};
    if (rep.max_scaled_d > 0.0 && rep.max_scaled_dX > 0.0) {
      cmp["scaled_factor"] = std::max(rep.max_scaled_d / rep.max_scaled_dX,
                                      rep.max_scaled_dX / rep.max_scaled_d);
    }
    cmp["ratio_growth"] = rep.rows.back().ratio / rep.rows.front().ratio;
    if (grid.size() >= 3) {
      cmp["slope_d"] = fit_entropy_exponent(cd).slope;
      cmp["slope_dX"] = fit_entropy_exponent(cx).slope;
    }
    summary["curves"] = cmp;
  }

  if (tree.kind() == TreeKind::kChain) {
    // d(root, k) and d_X(root, k) along the chain.
    const std::uint64_t levels =
        std::min<std::uint64_t>(tree.height(), read<std::uint64_t>(config.options,
                                                                   "root_table_levels", 10'000));
    const double a0 = w.alpha(tree, tree.root());
    const double s0 = w.sigma(tree, tree.root());
    double acc = 0.0;
    double best = 0.0;
    double max_dX_tail = 0.0;
    const std::uint64_t tail_from = read<std::uint64_t>(config.options, "tail_from", 14);
    std::ostringstream csv;
    csv << "k,d_root,dX_root\n";
    csv << 0 << ',' << 0 << ',' << 0 << '\n';
    for (std::uint64_t k = 1; k <= levels; ++k) {
      const NodeRef v = tree.node(k);
      const double a = w.alpha(tree, v);
      const double s = w.sigma(tree, v);
      acc += a * a;
      best = std::max(best, s * std::sqrt(acc));
      const double gap = s0 - s;
      const double dx = std::sqrt(gap * gap * a0 * a0 + s * s * acc);
      if (k >= tail_from) max_dX_tail = std::max(max_dX_tail, dx);
      csv << k << ',' << format_number(best) << ',' << format_number(dx) << '\n';
    }
    write_csv(config, "root_distances", csv.str(), written);
    summary["root_table"] = {{"levels", levels},
                             {"d_root_last", best},
                             {"tail_from", tail_from},
                             {"max_dX_root_tail", max_dX_tail}};
  }
  write_json(config.out_dir / "compare_metrics_summary.json", summary, written);
  return written;
}

Artifacts run_simulate(const ExperimentConfig& config) {
  config.validate();
  prepare_out_dir(config.out_dir);
  json cases = config.options.value("cases", json::array());
  if (cases.empty()) {
    require_weights(config.weights);
    cases.push_back({{"name", "main"}, {"weights", config.weights}});
  }
  Artifacts written;
  json summary = {{"config", config.to_json()}, {"cases", json::array()}};
  for (const auto& c : cases) {
    const std::string name = read<std::string>(c, "name", "case");
    SimConfig sim;
    sim.tree = c.contains("tree") ? c["tree"] : config.tree;
    sim.weights = c.contains("weights") ? c["weights"] : config.weights;
    require_weights(sim.weights);
    sim.replicas = config.replicas;
    sim.seed = config.seed;
    sim.depths = config.depths;
    sim.options.statistic = statistic_from_string(
        read<std::string>(c, "statistic", read<std::string>(config.options, "statistic", "abs_sup")));
    sim.options.leaves_only =
        read<bool>(c, "leaves_only", read<bool>(config.options, "leaves_only", false));
    sim.options.binary_depth_cap = read<unsigned>(config.options, "binary_depth_cap",
                                                  kSimBinaryDepthCap);
    if (const auto d = spec_depth(sim.tree); d && sim.depths.empty()) sim.depths = {*d};
    const SimEstimate est = estimate_esup(sim);

    std::ostringstream csv;
    write_estimate_csv(csv, est);
    write_csv(config, "simulate_" + name, csv.str(), written);
    json rows = json::array();
    for (const auto& r : est.rows) {
      rows.push_back({{"depth", r.depth}, {"mean_sup", r.mean}, {"stderr", r.std_error}});
    }
    summary["cases"].push_back({{"name", name}, {"sim", sim.to_json()}, {"rows", rows}});
  }
  write_json(config.out_dir / "simulate_summary.json", summary, written);
  return written;
}

Artifacts run_criteria(const ExperimentConfig& config) {
  config.validate();
  prepare_out_dir(config.out_dir);
  VerdictOptions opts;
  opts.truncation = read<std::uint64_t>(config.options, "truncation", kDefaultTruncation);
  opts.g1_truncation = read<std::uint64_t>(config.options, "g1_truncation", kDefaultG1Truncation);
  if (opts.truncation < 1) throw invalid_argument("truncation must be at least 1");
  const Tree horizon = Tree::chain(opts.truncation);

  json cases = config.options.value("cases", json::array());
  if (cases.empty()) {
    require_weights(config.weights);
    cases.push_back({{"name", "main"}, {"weights", config.weights}});
  }
  Artifacts written;
  json out_cases = json::array();
  for (const auto& c : cases) {
    const std::string name = read<std::string>(c, "name", "case");
    json row = {{"name", name}};
    std::optional<WeightSystem> w;
    if (c.contains("cor65")) {
      const double beta = read<double>(c["cor65"], "beta", 1.5);
      const double delta = read<double>(c["cor65"], "delta", 0.0);
      const LevelSequence sigma = cor65_sigma(beta, delta);
      w = WeightSystem::level(cor65_alpha(beta), sigma, opts.truncation);
      row["predicate_bounded"] = cor65_predicate(beta, sigma);
      row["sum_ratio"] = {{"1000", cor65_sum_ratio(beta, 1000)},
                          {"10000", cor65_sum_ratio(beta, 10000)}};
    } else {
      if (!c.contains("weights")) throw invalid_argument("criteria case needs \"weights\"");
      if (c["weights"].value("mode", "level") != "level") {
        throw Error(ErrorCode::kNotHomogeneous, "criteria need level weights");
      }
      w = WeightSystem::from_json(c["weights"], horizon);
      if (!w->is_homogeneous()) {
        throw Error(ErrorCode::kNotHomogeneous, "criteria need level weights");
      }
      if (c.contains("cor64_b")) {
        row["predicate_bounded"] = cor64_predicate(read<double>(c, "cor64_b", 0.0),
                                                   w->sigma_levels());
      }
    }
    if (read<bool>(c, "transfer", false)) {
      row["original"] = combined_verdict(*w, opts).to_json();
      w = product_weight_transfer(*w);
    }
    row["weights"] = w->to_json();
    row["verdict"] = combined_verdict(*w, opts).to_json();
    if (read<bool>(c, "prop66", false)) {
      row["prop66"] = prop66_check(*w, std::min(opts.g1_truncation, opts.truncation)).to_json();
    }
    out_cases.push_back(row);
  }
  write_json(config.out_dir / "verdicts.json",
             {{"config", config.to_json()}, {"cases", out_cases}}, written);
  return written;
}

std::vector<std::string> reproduce_targets() {
  return {"prop41", "prop42", "cor62", "c2-remark", "onesided"};
}

fs::path reproduce_config_path(const fs::path& config_dir, const std::string& target) {
  const auto targets = reproduce_targets();
  if (std::find(targets.begin(), targets.end(), target) == targets.end()) {
    throw invalid_argument("unknown reproduce target \"" + target + "\"");
  }
  return config_dir / (target + ".json");
}

Artifacts run_config(const ExperimentConfig& config) {
  if (config.command == "entropy") return run_entropy(config);
  if (config.command == "compare-metrics") return run_compare_metrics(config);
  if (config.command == "simulate") return run_simulate(config);
  if (config.command == "criteria") return run_criteria(config);
  throw invalid_argument("config names no known command (\"" + config.command + "\")");
}

}  // namespace treegauss
