#pragma once

// Experiment runners behind the command-line tool. Each reads a resolved
// config, writes its artifacts into the output directory and returns the
// paths it wrote. Every CSV gets a sibling <name>.config.json echoing the
// resolved config; JSON artifacts embed it under "config".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace treegauss {

struct EpsGrid {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 64;
};

struct ExperimentConfig {
  std::string command;
  nlohmann::json tree;
  nlohmann::json weights;
  // Unset: from the diameter down to the resolvable floor of the tree.
  std::optional<EpsGrid> eps;
  std::size_t eps_points = 64;
  std::vector<std::uint64_t> depths;
  std::uint64_t replicas = 100;
  std::uint64_t seed = 0x5EED;
  std::filesystem::path out_dir = ".";
  bool quiet = false;
  // Command-specific keys kept verbatim ("metric", "cases", "truncation", ...).
  nlohmann::json options = nlohmann::json::object();

  // Throws Error(kInvalidArgument) on malformed input.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

using Artifacts = std::vector<std::filesystem::path>;

Artifacts run_entropy(const ExperimentConfig& config);
Artifacts run_compare_metrics(const ExperimentConfig& config);
Artifacts run_simulate(const ExperimentConfig& config);
Artifacts run_criteria(const ExperimentConfig& config);

// Names of the frozen reproduction targets.
std::vector<std::string> reproduce_targets();
// Path of the frozen config for a target under `config_dir`.
std::filesystem::path reproduce_config_path(const std::filesystem::path& config_dir,
                                            const std::string& target);
Artifacts run_config(const ExperimentConfig& config);

}  // namespace treegauss
