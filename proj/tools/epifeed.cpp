#include "epifeed/experiment.hpp"
#include "epifeed/oracle_check.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epifeed: episodic RL with once-per-episode binary feedback"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EPIFEED_VERSION);

  std::string config_path;
  bool check = false;
  int workers = 0;
  std::string out_dir;
  bool paper_exact = false;
  bool paper_constants = false;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_flag("--check", check, "exit 3 if acceptance thresholds are not met");
  run->add_option("--workers", workers, "number of seed workers")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--paper-exact", paper_exact, "use the verbatim bonus constants (both scales 1)");
  run->add_flag("--paper-constants", paper_constants,
                "print the theoretical constants of the config instead of running");

  int oracle_instances = 100;
  std::uint64_t oracle_seed = epifeed::OracleCheckOptions{}.seed;
  std::string oracle_json;
  auto* oracle = app.add_subcommand("oracle-check", "run the planner and coverage oracles");
  oracle->add_option("--instances", oracle_instances, "random micro instances per epsilon");
  oracle->add_option("--seed", oracle_seed, "oracle seed");
  oracle->add_option("--json", oracle_json, "write the report as JSON to this path");

  std::string constants_path;
  auto* constants = app.add_subcommand("print-constants", "print theoretical constants for an instance");
  constants->add_option("config", constants_path, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      auto cfg = epifeed::load_experiment_config(config_path);
      if (workers > 0) cfg.workers = workers;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (paper_exact) cfg.run.bonus_scale = cfg.run.glm_bonus_scale = 1.0;
      if (paper_constants) {
        std::cout << epifeed::print_constants(cfg).dump(2) << "\n";
        return 0;
      }
      const auto res = epifeed::run_experiment(cfg);
      std::cout << "wrote " << (cfg.output_dir / "summary.json").string() << "\n";
      for (const auto& m : res.check_messages) std::cout << "check: " << m << "\n";
      if (check && !res.check_passed) return kExitCheck;
      return 0;
    }
    if (*oracle) {
      epifeed::OracleCheckOptions opts;
      opts.grid_instances = oracle_instances;
      opts.seed = oracle_seed;
      const auto items = epifeed::oracle_check(opts);
      epifeed::print_oracle_report(items, std::cout);
      if (!oracle_json.empty()) {
        std::ofstream os(oracle_json);
        os << epifeed::oracle_report_json(items).dump(2) << "\n";
      }
      for (const auto& it : items)
        if (!it.pass) return kExitCheck;
      return 0;
    }
    if (*constants) {
      const auto cfg = epifeed::load_experiment_config(constants_path);
      std::cout << epifeed::print_constants(cfg).dump(2) << "\n";
      return 0;
    }
  } catch (const epifeed::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
