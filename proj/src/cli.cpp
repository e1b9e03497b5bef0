#include "trdrl/cli.hpp"

#include "trdrl/metrics.hpp"
#include "trdrl/trainer.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace trdrl {

namespace {

namespace fs = std::filesystem;

void run_pool(const std::vector<std::function<void()>>& jobs, int workers) {
  if (workers < 1) workers = 1;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 0; w < std::min<int>(workers, static_cast<int>(jobs.size())); ++w)
    threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Shared run flags; config file first, then explicit flags on top.
struct RunFlags {
  std::string config_path;
  std::string env, mode, scheme, out_dir;
  std::int64_t seed = -1;
  int episodes = -1, horizon = -1, batch = -1, demos = -1;
  int eval_interval = -1, eval_episodes = -1, warmup = -1;
  double beta = -1.0, lr = -1.0, gamma = -1.0;
  bool no_aug = false, no_filter = false, no_shaping = false;

  void attach(CLI::App* cmd, bool with_toggles = true) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    cmd->add_option("--env", env, "task pair id (peg | door-inward | door-outward)");
    cmd->add_option("--mode", mode, "single | task-cond | multi-head");
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--episodes", episodes, "training episodes per task");
    cmd->add_option("--horizon", horizon, "episode length");
    cmd->add_option("--batch", batch, "minibatch size");
    cmd->add_option("--demos", demos, "expert demonstrations per task");
    cmd->add_option("--eval-interval", eval_interval, "episodes between evaluations");
    cmd->add_option("--eval-episodes", eval_episodes, "episodes per evaluation");
    cmd->add_option("--warmup", warmup, "uniform-random warmup steps");
    cmd->add_option("--beta", beta, "filter tolerance");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--gamma", gamma, "discount");
    cmd->add_option("--scheme", scheme,
                    "potential labels: linear | triangular | geom-orig | geom");
    cmd->add_option("--out", out_dir, "run directory");
    if (with_toggles) {
      cmd->add_flag("--no-aug", no_aug, "disable reversal augmentation");
      cmd->add_flag("--no-filter", no_filter, "disable the dynamics-aware filter");
      cmd->add_flag("--no-shaping", no_shaping, "disable reward shaping");
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config not found: " + config_path);
      cfg = load_config_file(config_path, cfg);
    }
    if (!env.empty()) cfg.pair = env;
    if (!mode.empty()) cfg.mode = mode;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (episodes > 0) cfg.episodes = episodes;
    if (horizon > 0) cfg.horizon = horizon;
    if (batch > 0) cfg.batch_size = batch;
    if (demos >= 0) cfg.demo_count = demos;
    if (eval_interval > 0) cfg.eval_interval = eval_interval;
    if (eval_episodes > 0) cfg.eval_episodes = eval_episodes;
    if (warmup >= 0) cfg.warmup_steps = warmup;
    if (beta > 0) cfg.beta = beta;
    if (lr > 0) cfg.lr = lr;
    if (gamma >= 0) cfg.gamma = gamma;
    if (!scheme.empty()) cfg.scheme = scheme;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (no_aug) cfg.augment = false;
    if (no_filter) cfg.filter = false;
    if (no_shaping) cfg.shaping = false;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

void execute_run(RunConfig cfg) {
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_config_file(cfg, cfg.out_dir + "/config.resolved");
  }
  RunMetrics metrics = run_training(cfg);
  if (metrics.rows.empty()) {
    std::cout << "run " << method_tag(cfg) << " seed " << cfg.seed
              << ": no evaluation points (episodes < eval_interval)\n";
    return;
  }
  std::cout << "run " << method_tag(cfg) << " on " << cfg.pair << " seed " << cfg.seed
            << ": final success";
  for (int task = 0; task < 2; ++task) {
    for (auto it = metrics.rows.rbegin(); it != metrics.rows.rend(); ++it)
      if (it->task_id == task) {
        std::cout << " task" << task << "=" << it->success_rate;
        break;
      }
  }
  std::cout << " (" << metrics.wall_clock_s << " s)\n";
}

int cmd_gen_demos(const std::string& env_id, int count, std::uint64_t seed,
                  std::string out_path, int horizon) {
  auto env = [&] {
    try {
      return make_env(env_id);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  if (out_path.empty()) out_path = env_id + "-demos.txt";
  auto demos = generate_demos(*env, count, seed, horizon > 0 ? horizon : env->spec().horizon);
  save_demos(out_path, *env, demos);
  std::cout << "wrote " << demos.size() << " demonstrations to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& env_id, int task,
             int episodes, std::uint64_t seed, int horizon) {
  if (!fs::exists(checkpoint + "/manifest.txt"))
    throw UsageError("checkpoint not found: " + checkpoint);
  SacAgent agent = SacAgent::load_checkpoint(checkpoint);
  auto env = make_env(env_id);
  std::mt19937 dummy(0);
  Policy pol = [&](const State& s) { return agent.select_action(s, task, true, dummy); };
  double rate = evaluate(pol, *env, episodes, horizon > 0 ? horizon : env->spec().horizon,
                         seed);
  std::cout << "success rate on " << env_id << ": " << rate << "\n";
  return 0;
}

int aggregate_dirs(const std::vector<std::string>& dirs, const std::string& stat_tag,
                   const std::string& out_path) {
  std::vector<RunRecord> records;
  for (const std::string& dir : dirs) {
    if (!fs::exists(dir + "/metrics.csv")) throw UsageError("not a run directory: " + dir);
    auto recs = load_run_dir(dir);
    records.insert(records.end(), recs.begin(), recs.end());
  }
  AggregateStat stat;
  try {
    stat = parse_stat(stat_tag);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto rows = aggregate(records, stat);
  if (out_path.empty()) {
    write_aggregate_csv(rows, std::cout);
  } else {
    write_aggregate_csv_file(rows, out_path);
    std::cout << "wrote " << rows.size() << " aggregate rows to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Time-reversal symmetry enhanced SAC on reversible task pairs"};
  app.require_subcommand(1);

  // gen-demos
  auto* gen = app.add_subcommand("gen-demos", "collect scripted-expert demonstrations");
  std::string gen_env, gen_out;
  int gen_count = 10, gen_horizon = -1;
  std::uint64_t gen_seed = 0;
  gen->add_option("--env", gen_env, "environment id")->required();
  gen->add_option("--count", gen_count, "number of trajectories");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output file");
  gen->add_option("--horizon", gen_horizon, "episode length");

  // train
  auto* train = app.add_subcommand("train", "run one training configuration");
  RunFlags train_flags;
  train_flags.attach(train);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved checkpoint");
  std::string eval_ckpt, eval_env;
  int eval_task = 0, eval_eps = 20, eval_horizon = -1;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
  eval_cmd->add_option("--env", eval_env, "environment id")->required();
  eval_cmd->add_option("--task", eval_task, "task head (multi-task checkpoints)");
  eval_cmd->add_option("--episodes", eval_eps, "evaluation episodes");
  eval_cmd->add_option("--seed", eval_seed, "seed");
  eval_cmd->add_option("--horizon", eval_horizon, "episode length");

  // sweep-beta
  auto* sweep = app.add_subcommand("sweep-beta", "one run directory per filter tolerance");
  RunFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::string sweep_values = "0.01,0.001,0.0001";
  int sweep_jobs = 1;
  sweep->add_option("--values", sweep_values, "comma-separated beta values");
  sweep->add_option("--jobs", sweep_jobs, "parallel runs");

  // ablate-potential
  auto* abl_pot = app.add_subcommand("ablate-potential", "compare potential label schemes");
  RunFlags pot_flags;
  pot_flags.attach(abl_pot);
  std::string pot_schemes = "linear,triangular,geom-orig,geom";
  int pot_jobs = 1;
  abl_pot->add_option("--schemes", pot_schemes, "comma-separated scheme tags");
  abl_pot->add_option("--jobs", pot_jobs, "parallel runs");

  // ablate-components
  auto* abl_comp = app.add_subcommand(
      "ablate-components", "run {baseline, +aug, +shaping, both} across seeds");
  RunFlags comp_flags;
  comp_flags.attach(abl_comp, /*with_toggles=*/false);
  std::string comp_seeds = "0";
  std::string comp_stat = "mean-std";
  int comp_jobs = 1;
  abl_comp->add_option("--seeds", comp_seeds, "comma-separated seeds");
  abl_comp->add_option("--stat", comp_stat, "iqm | mean-std");
  abl_comp->add_option("--jobs", comp_jobs, "parallel runs");

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "combine run directories into one CSV");
  std::vector<std::string> agg_dirs;
  std::string agg_stat = "mean-std", agg_out;
  agg->add_option("dirs", agg_dirs, "run directories")->required();
  agg->add_option("--stat", agg_stat, "iqm | mean-std");
  agg->add_option("--out", agg_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_demos(gen_env, gen_count, gen_seed, gen_out, gen_horizon);

    if (train->parsed()) {
      execute_run(train_flags.resolve());
      return 0;
    }

    if (eval_cmd->parsed())
      return cmd_eval(eval_ckpt, eval_env, eval_task, eval_eps, eval_seed, eval_horizon);

    if (sweep->parsed()) {
      RunConfig base = sweep_flags.resolve();
      if (base.out_dir.empty()) throw UsageError("sweep-beta needs --out");
      std::vector<std::function<void()>> jobs;
      for (const std::string& v : split_list(sweep_values)) {
        RunConfig cfg = base;
        cfg.beta = std::stod(v);
        cfg.out_dir = base.out_dir + "/beta-" + v;
        jobs.push_back([cfg] { execute_run(cfg); });
      }
      if (jobs.empty()) throw UsageError("sweep-beta: empty --values");
      run_pool(jobs, sweep_jobs);
      return 0;
    }

    if (abl_pot->parsed()) {
      RunConfig base = pot_flags.resolve();
      if (base.out_dir.empty()) throw UsageError("ablate-potential needs --out");
      std::vector<std::function<void()>> jobs;
      for (const std::string& tag : split_list(pot_schemes)) {
        parse_label_scheme(tag);  // validate early
        RunConfig cfg = base;
        cfg.scheme = tag;
        cfg.out_dir = base.out_dir + "/scheme-" + tag;
        jobs.push_back([cfg] { execute_run(cfg); });
      }
      run_pool(jobs, pot_jobs);
      return 0;
    }

    if (abl_comp->parsed()) {
      RunConfig base = comp_flags.resolve();
      if (base.out_dir.empty()) throw UsageError("ablate-components needs --out");
      struct Arm {
        const char* name;
        bool aug, filter, shaping;
      };
      const Arm arms[] = {{"baseline", false, false, false},
                          {"aug", true, true, false},
                          {"shaping", false, false, true},
                          {"both", true, true, true}};
      std::vector<std::function<void()>> jobs;
      std::vector<std::string> run_dirs;
      for (const Arm& arm : arms) {
        for (const std::string& seed_str : split_list(comp_seeds)) {
          RunConfig cfg = base;
          cfg.augment = arm.aug;
          cfg.filter = arm.filter;
          cfg.shaping = arm.shaping;
          cfg.seed = std::stoull(seed_str);
          cfg.out_dir = base.out_dir + "/" + arm.name + "-seed" + seed_str;
          run_dirs.push_back(cfg.out_dir);
          jobs.push_back([cfg] { execute_run(cfg); });
        }
      }
      run_pool(jobs, comp_jobs);
      return aggregate_dirs(run_dirs, comp_stat, base.out_dir + "/comparison.csv");
    }

    if (agg->parsed()) return aggregate_dirs(agg_dirs, agg_stat, agg_out);

    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace trdrl
