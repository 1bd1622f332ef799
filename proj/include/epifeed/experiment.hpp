#pragma once

#include "epifeed/agents.hpp"
#include "epifeed/oracle_check.hpp"
#include "epifeed/reinforce.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace epifeed {

enum class Mode { Alg1, Alg3, Reinforce, OracleCheck, CoverageStudy };

struct CheckThresholds {
  double quartile_ratio_max = 0.5;
  std::optional<double> optimism_min;
  double coverage_min = 0.95;
  double reward_min = 0.8;
  int min_passing_seeds = 3;
};

struct ExperimentConfig {
  Mode mode = Mode::Alg1;
  std::string instance_name;          // built-in name, or empty when mdp_path is set
  std::filesystem::path mdp_path;
  RunConfig run;
  TrainConfig reinforce;
  bool any_of_last3 = false;
  std::int64_t coverage_episodes = 500;
  double coverage_delta = 0.05;
  OracleCheckOptions oracle;
  std::vector<std::uint64_t> seeds;
  int workers = 1;
  std::filesystem::path output_dir = "out";
  CheckThresholds check;
  nlohmann::json echo;                // the parsed file, for the summary
};

/// Parses and validates a config file; relative paths resolve against the
/// file's directory. Throws ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = ".");

/// Nearest-rank quantile: the ceil(q n)-th smallest value (the smallest for q = 0).
double nearest_rank(std::vector<double> values, double q);

struct ExperimentResult {
  nlohmann::json summary;
  bool check_passed = true;
  std::vector<std::string> check_messages;
};

/// Runs every seed (on up to cfg.workers threads), writes per-seed CSVs and
/// summary.json into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Theoretical constants of the configured instance (verbatim formulas).
nlohmann::json print_constants(const ExperimentConfig& cfg);

Instance resolve_instance(const ExperimentConfig& cfg);

}  // namespace epifeed
