#include "epifeed/experiment.hpp"

#include "epifeed/exploration.hpp"
#include "epifeed/mdp_io.hpp"
#include "epifeed/oracle_check.hpp"
#include "epifeed/transitions.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace epifeed {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

Mode parse_mode(const std::string& s) {
  if (s == "alg1") return Mode::Alg1;
  if (s == "alg3") return Mode::Alg3;
  if (s == "reinforce") return Mode::Reinforce;
  if (s == "oracle-check") return Mode::OracleCheck;
  if (s == "coverage-study") return Mode::CoverageStudy;
  throw ConfigError("unknown mode '" + s + "'");
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Alg1: return "alg1";
    case Mode::Alg3: return "alg3";
    case Mode::Reinforce: return "reinforce";
    case Mode::OracleCheck: return "oracle-check";
    case Mode::CoverageStudy: return "coverage-study";
  }
  return "?";
}

GridDpMode parse_grid_mode(const std::string& s) {
  if (s == "auto") return GridDpMode::Auto;
  if (s == "dense") return GridDpMode::Dense;
  if (s == "sparse") return GridDpMode::Sparse;
  throw ConfigError("grid_mode must be auto, dense or sparse");
}

RunConfig parse_run(const nlohmann::json& r) {
  RunConfig c;
  c.N = get_or<std::int64_t>(r, "N", c.N);
  c.delta_bar = get_or(r, "delta_bar", c.delta_bar);
  const auto planner = get_or<std::string>(r, "planner", "exact");
  if (planner == "exact")
    c.planner = PlannerKind::Exact;
  else if (planner == "grid_dp")
    c.planner = PlannerKind::GridDp;
  else
    throw ConfigError("planner must be exact or grid_dp");
  c.omega = get_or(r, "omega", c.omega);
  c.n_eul = get_or(r, "n_eul", c.n_eul);
  c.n_eval = get_or(r, "n_eval", c.n_eval);
  c.n_max = get_or(r, "n_max", c.n_max);
  c.eps_dp = get_or(r, "eps_dp", c.eps_dp);
  c.paper_zeta = get_or(r, "paper_zeta", c.paper_zeta);
  c.grid.mode = parse_grid_mode(get_or<std::string>(r, "grid_mode", "auto"));
  c.grid.parallel = get_or(r, "grid_parallel", c.grid.parallel);
  c.bonus_scale = get_or(r, "bonus_scale", c.bonus_scale);
  c.glm_bonus_scale = get_or(r, "glm_bonus_scale", c.glm_bonus_scale);
  if (get_or(r, "paper_exact", false)) {
    c.bonus_scale = 1.0;
    c.glm_bonus_scale = 1.0;
  }
  c.mc_samples = get_or(r, "mc_samples", c.mc_samples);
  c.enumeration_cap = get_or(r, "enumeration_cap", c.enumeration_cap);
  c.timing = get_or(r, "timing", c.timing);
  c.check_confidence = get_or(r, "check_confidence", c.check_confidence);
  if (c.N < 1) throw ConfigError("run.N must be at least 1");
  if (!(c.delta_bar > 0.0 && c.delta_bar <= 1.0)) throw ConfigError("run.delta_bar must lie in (0,1]");
  if (c.mc_samples < 1) throw ConfigError("run.mc_samples must be positive");
  return c;
}

double median_of(const std::vector<double>& v) { return nearest_rank(v, 0.5); }

nlohmann::json quantiles(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  return {{"min", nearest_rank(v, 0.0)},
          {"q25", nearest_rank(v, 0.25)},
          {"median", nearest_rank(v, 0.5)},
          {"q75", nearest_rank(v, 0.75)},
          {"max", nearest_rank(v, 1.0)}};
}

struct SeedOutcome {
  nlohmann::json summary;
  double seconds = 0.0;
  std::string csv;  // per-seed file contents
};

template <typename F>
std::vector<SeedOutcome> fan_out(const std::vector<std::uint64_t>& seeds, int workers, F&& job) {
  std::vector<SeedOutcome> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      const auto start = std::chrono::steady_clock::now();
      try {
        out[i] = job(seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      out[i].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << contents;
}

}  // namespace

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("nearest_rank: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
  return values[std::min(rank, values.size()) - 1];
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.echo = j;
  if (!j.contains("mode")) throw ConfigError("config: missing 'mode'");
  c.mode = parse_mode(get_or<std::string>(j, "mode", ""));
  if (j.contains("mdp")) {
    c.mdp_path = base_dir / get_or<std::string>(j, "mdp", "");
    if (!std::filesystem::exists(c.mdp_path))
      throw ConfigError("config: MDP file " + c.mdp_path.string() + " does not exist");
  } else {
    c.instance_name = get_or<std::string>(j, "instance", "");
  }
  const bool tabular = c.mode == Mode::Alg1 || c.mode == Mode::Alg3 || c.mode == Mode::CoverageStudy;
  if (tabular && c.mdp_path.empty()) {
    const auto names = builtin_instance_names();
    if (std::find(names.begin(), names.end(), c.instance_name) == names.end())
      throw ConfigError("config: unknown or missing instance '" + c.instance_name + "'");
  }
  if (c.mode == Mode::Reinforce && !c.instance_name.empty() && c.instance_name != "gridworld")
    throw ConfigError("reinforce mode runs on the built-in 'gridworld' instance");
  if (j.contains("run")) c.run = parse_run(j.at("run"));
  if (j.contains("reinforce")) {
    const auto& r = j.at("reinforce");
    c.reinforce.iterations = get_or(r, "iterations", c.reinforce.iterations);
    c.reinforce.batch = get_or(r, "batch", c.reinforce.batch);
    c.reinforce.eval_every = get_or(r, "eval_every", c.reinforce.eval_every);
    c.reinforce.eval_episodes = get_or(r, "eval_episodes", c.reinforce.eval_episodes);
    c.reinforce.lr = get_or(r, "lr", c.reinforce.lr);
    c.reinforce.parallel = get_or(r, "parallel", c.reinforce.parallel);
    c.any_of_last3 = get_or(r, "any_of_last3", c.any_of_last3);
    if (c.reinforce.batch < 1 || c.reinforce.eval_every < 1 || c.reinforce.eval_episodes < 1 ||
        c.reinforce.iterations < 0)
      throw ConfigError("reinforce: sizes must be positive");
  }
  if (j.contains("coverage")) {
    const auto& r = j.at("coverage");
    c.coverage_episodes = get_or(r, "N", c.coverage_episodes);
    c.coverage_delta = get_or(r, "delta", c.coverage_delta);
  }
  if (j.contains("oracle")) {
    const auto& r = j.at("oracle");
    c.oracle.grid_instances = get_or(r, "grid_instances", c.oracle.grid_instances);
    c.oracle.seed = get_or(r, "seed", c.oracle.seed);
    c.oracle.coverage_runs = get_or(r, "coverage_runs", c.oracle.coverage_runs);
    c.oracle.coverage_episodes = get_or(r, "coverage_episodes", c.oracle.coverage_episodes);
    c.oracle.inject_eps_violation = get_or(r, "inject_eps_violation", c.oracle.inject_eps_violation);
  }
  c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
  if (c.seeds.empty() && c.mode != Mode::OracleCheck) throw ConfigError("config: 'seeds' must be nonempty");
  c.workers = get_or(j, "workers", c.workers);
  if (c.workers < 1) throw ConfigError("config: workers must be positive");
  if (j.contains("output_dir")) c.output_dir = base_dir / get_or<std::string>(j, "output_dir", "out");
  if (j.contains("check")) {
    const auto& k = j.at("check");
    c.check.quartile_ratio_max = get_or(k, "quartile_ratio_max", c.check.quartile_ratio_max);
    if (k.contains("optimism_min")) c.check.optimism_min = get_or(k, "optimism_min", 0.0);
    c.check.coverage_min = get_or(k, "coverage_min", c.check.coverage_min);
    c.check.reward_min = get_or(k, "reward_min", c.check.reward_min);
    c.check.min_passing_seeds = get_or(k, "min_passing_seeds", c.check.min_passing_seeds);
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(j, path.parent_path().empty() ? "." : path.parent_path());
}

Instance resolve_instance(const ExperimentConfig& cfg) {
  if (!cfg.mdp_path.empty()) return load_instance(cfg.mdp_path);
  return builtin_instance(cfg.instance_name);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  ExperimentResult res;
  nlohmann::json& s = res.summary;
  s["version"] = EPIFEED_VERSION;
  s["mode"] = mode_name(cfg.mode);
  s["config"] = cfg.echo;
  const auto wall_start = std::chrono::steady_clock::now();
  std::vector<SeedOutcome> outcomes;

  switch (cfg.mode) {
    case Mode::Alg1:
    case Mode::Alg3: {
      const Instance inst = resolve_instance(cfg);
      s["instance"] = inst.name;
      outcomes = fan_out(cfg.seeds, cfg.workers, [&](std::uint64_t seed) {
        RunConfig rc = cfg.run;
        rc.seed = seed;
        const RegretTrace tr = cfg.mode == Mode::Alg1 ? run_alg1(inst, rc) : run_alg3(inst, rc);
        std::ostringstream os;
        write_trace_csv(tr, os);
        SeedOutcome o;
        o.summary = trace_summary(tr);
        o.summary["seed"] = seed;
        o.summary["determinant_bound_holds"] = tr.elliptic_sum() <= tr.determinant_bound();
        o.csv = os.str();
        return o;
      });
      std::vector<double> finals, ratios, optimism;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        write_file(cfg.output_dir / (std::string(mode_name(cfg.mode)) + "_seed" +
                                     std::to_string(cfg.seeds[i]) + ".csv"),
                   outcomes[i].csv);
        const auto& o = outcomes[i].summary;
        finals.push_back(o.at("final_regret").get<double>());
        ratios.push_back(o.at("quartile_ratio").get<double>());
        if (!o.at("optimism_frequency").is_null())
          optimism.push_back(o.at("optimism_frequency").get<double>());
      }
      s["final_regret"] = quantiles(finals);
      s["quartile_ratio"] = quantiles(ratios);
      if (!optimism.empty()) {
        double mean = 0.0;
        for (double x : optimism) mean += x;
        s["optimism_frequency"] = mean / optimism.size();
      }
      const double med = median_of(ratios);
      if (!(med <= cfg.check.quartile_ratio_max)) {
        res.check_passed = false;
        res.check_messages.push_back("median quartile ratio " + std::to_string(med) + " > " +
                                     std::to_string(cfg.check.quartile_ratio_max));
      }
      if (cfg.check.optimism_min && s.contains("optimism_frequency") &&
          s["optimism_frequency"].get<double>() < *cfg.check.optimism_min) {
        res.check_passed = false;
        res.check_messages.push_back("optimism frequency below threshold");
      }
      break;
    }
    case Mode::CoverageStudy: {
      const Instance inst = resolve_instance(cfg);
      s["instance"] = inst.name;
      outcomes = fan_out(cfg.seeds, cfg.workers, [&](std::uint64_t seed) {
        SeedOutcome o;
        const bool held = run_coverage(inst, cfg.coverage_episodes, cfg.coverage_delta, seed);
        o.summary = {{"seed", seed}, {"event_held", held}};
        return o;
      });
      std::string csv = "seed,event_held\n";
      int held = 0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const bool h = outcomes[i].summary.at("event_held").get<bool>();
        held += h ? 1 : 0;
        csv += std::to_string(cfg.seeds[i]) + "," + (h ? "1" : "0") + "\n";
      }
      write_file(cfg.output_dir / "coverage.csv", csv);
      const double freq = static_cast<double>(held) / outcomes.size();
      s["confidence_coverage"] = freq;
      if (freq < cfg.check.coverage_min) {
        res.check_passed = false;
        res.check_messages.push_back("coverage " + std::to_string(freq) + " below threshold");
      }
      break;
    }
    case Mode::Reinforce: {
      s["instance"] = "gridworld";
      const GoalGridEnv env(15, 10, 30, cfg.any_of_last3);
      outcomes = fan_out(cfg.seeds, cfg.workers, [&](std::uint64_t seed) {
        Rng init(mix_seed(seed, 0x696e6974));
        MlpPolicy policy = MlpPolicy::default_grid_policy(init);
        TrainConfig tc = cfg.reinforce;
        tc.seed = seed;
        const auto curve = train(env, policy, tc);
        policy.save(cfg.output_dir / ("reinforce_seed" + std::to_string(seed) + ".policy"));
        std::ostringstream os;
        write_curve_csv(curve, os);
        SeedOutcome o;
        double best = 0.0;
        for (const auto& c : curve) best = std::max(best, c.mean_reward);
        o.summary = {{"seed", seed}, {"final_reward", curve.back().mean_reward}, {"best_reward", best}};
        o.csv = os.str();
        return o;
      });
      std::vector<double> finals;
      int passing = 0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        write_file(cfg.output_dir / ("reinforce_seed" + std::to_string(cfg.seeds[i]) + ".csv"),
                   outcomes[i].csv);
        const double f = outcomes[i].summary.at("final_reward").get<double>();
        finals.push_back(f);
        passing += f >= cfg.check.reward_min ? 1 : 0;
      }
      s["final_reward"] = quantiles(finals);
      s["seeds_reaching_threshold"] = passing;
      if (passing < cfg.check.min_passing_seeds) {
        res.check_passed = false;
        res.check_messages.push_back(std::to_string(passing) + " seeds reached the reward threshold");
      }
      break;
    }
    case Mode::OracleCheck: {
      const auto items = oracle_check(cfg.oracle);
      print_oracle_report(items, std::cout);
      s["oracle"] = oracle_report_json(items);
      for (const auto& it : items)
        if (!it.pass) {
          res.check_passed = false;
          res.check_messages.push_back("oracle item failed: " + it.name);
        }
      break;
    }
  }

  nlohmann::json per_seed = nlohmann::json::array();
  std::vector<double> secs;
  for (const auto& o : outcomes) {
    per_seed.push_back(o.summary);
    secs.push_back(o.seconds);
  }
  s["per_seed"] = per_seed;
  s["wall_seconds"] = {
      {"total", std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count()},
      {"per_seed", secs}};
  if (!secs.empty()) s["wall_seconds"]["median"] = median_of(secs);
  s["check_passed"] = res.check_passed;
  write_file(cfg.output_dir / "summary.json", s.dump(2) + "\n");
  return res;
}

nlohmann::json print_constants(const ExperimentConfig& cfg) {
  if (cfg.mode == Mode::Reinforce) throw ConfigError("print-constants needs a tabular instance");
  const Instance inst = resolve_instance(cfg);
  const TabularMdp& m = *inst.mdp;
  const int d = inst.map->dim();
  const std::int64_t N = cfg.run.N;
  const bool alg3 = cfg.mode == Mode::Alg3;
  const double delta = cfg.run.delta_bar / ((alg3 ? 12.0 : 6.0) * static_cast<double>(N));
  const double kap = kappa(inst.model->B(), inst.map->max_norm());
  const ConfidenceParams cp{d, N, delta, inst.model->B()};
  const XiParams xp{N, delta, m.num_states(), m.num_actions(), m.horizon(), 1.0};
  nlohmann::json j;
  j["instance"] = inst.name;
  j["N"] = N;
  j["delta"] = delta;
  j["d"] = d;
  j["B"] = inst.model->B();
  j["kappa"] = kap;
  const auto r1 = rho_beta(cp, 1), rn = rho_beta(cp, N);
  j["rho_1"] = r1.rho;
  j["beta_1"] = r1.beta;
  j["rho_N"] = rn.rho;
  j["beta_N"] = rn.beta;
  j["bonus_coefficient_1"] = std::sqrt(kap) * r1.beta;
  nlohmann::json xi;
  for (std::int64_t n : {0, 1, 10, 100, 1000, 10000, 100000})
    xi[std::to_string(n)] = xi_bonus(n, xp);
  j["xi_by_count"] = xi;
  if (inst.map->orthogonal() && inst.map->kind() != FeatureKind::DirectTabular) {
    const auto c = exploration_constants(m.num_states(), m.num_actions(), m.horizon(), d, N, delta,
                                         cfg.run.omega);
    j["exploration"] = {{"omega", cfg.run.omega},
                        {"n_eul", c.n_eul},
                        {"n_eval", c.n_eval},
                        {"n_exp_bar", c.n_exp_bar},
                        {"covariance_floor", c.covariance_floor},
                        {"note", "absolute constants C1 = C2 = 1"}};
  }
  return j;
}

}  // namespace epifeed
