#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "treegauss/error.hpp"
#include "treegauss/experiments.hpp"

#ifndef TREEGAUSS_CONFIG_DIR
#define TREEGAUSS_CONFIG_DIR "configs/reproduce"
#endif

namespace {

using namespace treegauss;

struct Overrides {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicas;
  std::string depth;
  std::optional<double> eps_start;
  std::optional<double> eps_stop;
  std::optional<std::size_t> eps_points;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool need_config) {
  auto* c = cmd->add_option("--config", o.config, "experiment config (JSON)");
  if (need_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed (default 0x5EED)");
  cmd->add_option("--replicas", o.replicas, "Monte Carlo replicas");
  cmd->add_option("--depth", o.depth, "depth or comma-separated depth list");
  cmd->add_option("--eps-start", o.eps_start, "largest epsilon of the grid");
  cmd->add_option("--eps-stop", o.eps_stop, "smallest epsilon of the grid");
  cmd->add_option("--eps-points", o.eps_points, "grid points");
  cmd->add_flag("--quiet", o.quiet, "do not list written files");
}

std::vector<std::uint64_t> parse_depths(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw invalid_argument("bad depth \"" + item + "\"");
    }
  }
  if (out.empty()) throw invalid_argument("empty depth list");
  return out;
}

ExperimentConfig resolve(const std::string& command, const Overrides& o) {
  ExperimentConfig c = load_config(o.config);
  c.command = command;
  c.out_dir = o.out;
  c.quiet = o.quiet;
  if (o.seed) c.seed = *o.seed;
  if (o.replicas) c.replicas = *o.replicas;
  if (!o.depth.empty()) c.depths = parse_depths(o.depth);
  if (o.eps_points) {
    c.eps_points = *o.eps_points;
    if (c.eps) c.eps->points = *o.eps_points;
  }
  if (o.eps_start || o.eps_stop) {
    if (!c.eps && !(o.eps_start && o.eps_stop)) {
      throw invalid_argument("--eps-start and --eps-stop go together unless the config has a grid");
    }
    EpsGrid g = c.eps.value_or(EpsGrid{0.0, 0.0, c.eps_points});
    if (o.eps_start) g.start = *o.eps_start;
    if (o.eps_stop) g.stop = *o.eps_stop;
    g.points = c.eps_points;
    c.eps = g;
  }
  return c;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kCapExceeded:
      return 3;
    case ErrorCode::kNotHomogeneous:
      return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian processes indexed by weighted trees: entropy, simulation, criteria"};
  app.require_subcommand(1);

  Overrides o;
  std::string target;
  std::string config_dir = TREEGAUSS_CONFIG_DIR;
  const std::vector<std::string> commands = {"entropy", "compare-metrics", "simulate",
                                             "criteria"};
  for (const auto& name : commands) add_common(app.add_subcommand(name), o, true);
  auto* reproduce = app.add_subcommand("reproduce", "run a frozen reproduction config");
  add_common(reproduce, o, false);
  reproduce->add_option("target", target, "prop41 | prop42 | cor62 | c2-remark | onesided")
      ->required();
  reproduce->add_option("--config-dir", config_dir, "directory of frozen configs")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::string command = app.get_subcommands().front()->get_name();
    if (command == "reproduce") {
      o.config = reproduce_config_path(config_dir, target).string();
      command = load_config(o.config).command;
    }
    const ExperimentConfig config = resolve(command, o);
    const Artifacts written = run_config(config);
    if (!o.quiet) {
      for (const auto& p : written) std::cout << p.string() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
