#include "trdrl/trainer.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace trdrl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint32_t id) {
  return splitmix64(base ^ (0xA24BAED4963EE407ULL * (id + 1)));
}

std::mt19937 stream32(std::uint64_t base, std::uint32_t id) {
  return std::mt19937(static_cast<std::uint32_t>(stream_seed(base, id)));
}

std::mt19937_64 stream64(std::uint64_t base, std::uint32_t id) {
  return std::mt19937_64(stream_seed(base, id));
}

// Fixed stream ids so ablations and the plain-SAC reference consume
// identical draws on the paths they share.
enum StreamId : std::uint32_t {
  kEnvReset = 0,    // +task
  kEvalBase = 2,    // +task
  kPolicy = 4,      // +task
  kWarmup = 6,      // +task
  kSampleOwn = 8,   // +task
  kSampleAug = 10,  // +task
  kDynBatch = 12,
  kPotBatch = 13,  // +task
  kInit = 15,
  kDemoSeed = 16,  // +task
  kUpdate = 18,    // +task
};

struct TaskRuntime {
  std::unique_ptr<Env> env;
  std::unique_ptr<ReplayBuffer> buffer;
  std::unique_ptr<SuccessDataset> successes;
  State state;
  int ep_t = 0;
  Trajectory traj;
  std::mt19937_64 reset_rng;
  std::mt19937 policy_rng, warmup_rng, sample_own_rng, sample_aug_rng, pot_rng, update_rng;
  std::uint64_t eval_base = 0;

  // diagnostics accumulated between evaluation points
  AugmentStats filter_stats;
  double shaping_abs_sum = 0.0;
  std::size_t shaping_count = 0;
  double last_loss_phi_own = std::numeric_limits<double>::quiet_NaN();
  double last_loss_phi_rev = std::numeric_limits<double>::quiet_NaN();

  void begin_episode(const State& s) {
    state = s;
    ep_t = 0;
    traj = Trajectory{};
    traj.task_id = env->spec().reversed ? 1 : 0;
    traj.states.push_back(s);
  }
};

Action uniform_action(int dim, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Action a(dim);
  for (int i = 0; i < dim; ++i) a(i) = u(rng);
  return a;
}

std::vector<Transition> sample_union(const ReplayBuffer& a, const ReplayBuffer& b,
                                     std::size_t n, std::mt19937& rng) {
  std::vector<Transition> out = a.sample(n - n / 2, rng);
  std::vector<Transition> other = b.sample(n / 2, rng);
  out.insert(out.end(), std::make_move_iterator(other.begin()),
             std::make_move_iterator(other.end()));
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (episodes < 1 || horizon < 1 || batch_size < 1 || eval_interval < 1 ||
      eval_episodes < 1 || hidden_dim < 1 || hidden_depth < 1)
    throw std::invalid_argument("config: counts must be positive");
  if (demo_count < 0 || warmup_steps < 0)
    throw std::invalid_argument("config: demo_count/warmup_steps must be non-negative");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("config: gamma outside [0,1]");
  if (beta <= 0.0) throw std::invalid_argument("config: beta must be positive");
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("config: tau outside (0,1]");
  if (buffer_capacity == 0) throw std::invalid_argument("config: zero buffer capacity");
  pair_tasks(pair);       // throws on unknown pair
  parse_mode(mode);       // throws on unknown mode
  parse_label_scheme(scheme);
}

bool apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto as_bool = [&](std::string v) {
    for (char& c : v) c = static_cast<char>(std::tolower(c));
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
  };
  if (key == "pair") cfg.pair = value;
  else if (key == "mode") cfg.mode = value;
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "episodes") cfg.episodes = std::stoi(value);
  else if (key == "horizon") cfg.horizon = std::stoi(value);
  else if (key == "batch_size") cfg.batch_size = std::stoi(value);
  else if (key == "gamma") cfg.gamma = std::stod(value);
  else if (key == "lr") cfg.lr = std::stod(value);
  else if (key == "alpha_lr") cfg.alpha_lr = std::stod(value);
  else if (key == "beta") cfg.beta = std::stod(value);
  else if (key == "scheme") cfg.scheme = value;
  else if (key == "warmup_steps") cfg.warmup_steps = std::stoi(value);
  else if (key == "eval_interval") cfg.eval_interval = std::stoi(value);
  else if (key == "eval_episodes") cfg.eval_episodes = std::stoi(value);
  else if (key == "demo_count") cfg.demo_count = std::stoi(value);
  else if (key == "buffer_capacity") cfg.buffer_capacity = std::stoull(value);
  else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
  else if (key == "hidden_depth") cfg.hidden_depth = std::stoi(value);
  else if (key == "tau") cfg.tau = std::stod(value);
  else if (key == "actor_update_freq") cfg.actor_update_freq = std::stoi(value);
  else if (key == "target_update_freq") cfg.target_update_freq = std::stoi(value);
  else if (key == "init_temperature") cfg.init_temperature = std::stod(value);
  else if (key == "log_std_min") cfg.log_std_min = std::stod(value);
  else if (key == "log_std_max") cfg.log_std_max = std::stod(value);
  else if (key == "augment") cfg.augment = as_bool(value);
  else if (key == "filter") cfg.filter = as_bool(value);
  else if (key == "shaping") cfg.shaping = as_bool(value);
  else if (key == "success_cap") cfg.success_cap = std::stoull(value);
  else if (key == "rev_labels_forward") cfg.rev_labels_forward = as_bool(value);
  else if (key == "filter_max_norm") cfg.filter_max_norm = as_bool(value);
  else if (key == "out_dir") cfg.out_dir = value;
  else return false;
  return true;
}

RunConfig parse_config_text(std::istream& is, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    key = strip(key);
    value = strip(value);
    if (!apply_config_key(base, key, value))
      throw std::invalid_argument("config: unknown key '" + key + "' (line " +
                                  std::to_string(lineno) + ")");
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config not found: " + path);
  return parse_config_text(is, base);
}

void write_config(const RunConfig& cfg, std::ostream& os) {
  os << std::setprecision(17);
  os << "pair=" << cfg.pair << "\n";
  os << "mode=" << cfg.mode << "\n";
  os << "seed=" << cfg.seed << "\n";
  os << "episodes=" << cfg.episodes << "\n";
  os << "horizon=" << cfg.horizon << "\n";
  os << "batch_size=" << cfg.batch_size << "\n";
  os << "gamma=" << cfg.gamma << "\n";
  os << "lr=" << cfg.lr << "\n";
  os << "alpha_lr=" << cfg.alpha_lr << "\n";
  os << "beta=" << cfg.beta << "\n";
  os << "scheme=" << cfg.scheme << "\n";
  os << "warmup_steps=" << cfg.warmup_steps << "\n";
  os << "eval_interval=" << cfg.eval_interval << "\n";
  os << "eval_episodes=" << cfg.eval_episodes << "\n";
  os << "demo_count=" << cfg.demo_count << "\n";
  os << "buffer_capacity=" << cfg.buffer_capacity << "\n";
  os << "hidden_dim=" << cfg.hidden_dim << "\n";
  os << "hidden_depth=" << cfg.hidden_depth << "\n";
  os << "tau=" << cfg.tau << "\n";
  os << "actor_update_freq=" << cfg.actor_update_freq << "\n";
  os << "target_update_freq=" << cfg.target_update_freq << "\n";
  os << "init_temperature=" << cfg.init_temperature << "\n";
  os << "log_std_min=" << cfg.log_std_min << "\n";
  os << "log_std_max=" << cfg.log_std_max << "\n";
  os << "augment=" << (cfg.augment ? "true" : "false") << "\n";
  os << "filter=" << (cfg.filter ? "true" : "false") << "\n";
  os << "shaping=" << (cfg.shaping ? "true" : "false") << "\n";
  os << "success_cap=" << cfg.success_cap << "\n";
  os << "rev_labels_forward=" << (cfg.rev_labels_forward ? "true" : "false") << "\n";
  os << "filter_max_norm=" << (cfg.filter_max_norm ? "true" : "false") << "\n";
  os << "out_dir=" << cfg.out_dir << "\n";
}

void write_config_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write config: " + path);
  write_config(cfg, os);
}

void write_metrics_csv(const RunMetrics& metrics, std::ostream& os) {
  os << "episode,task-id,success-rate,loss-h,loss-g,loss-phi-own,loss-phi-rev,"
        "filter-accept-rate,shaping-mean\n";
  os << std::setprecision(17);
  for (const MetricRow& r : metrics.rows) {
    os << r.episode << ',' << r.task_id << ',' << r.success_rate << ',' << r.loss_h << ','
       << r.loss_g << ',' << r.loss_phi_own << ',' << r.loss_phi_rev << ','
       << r.filter_accept_rate << ',' << r.shaping_mean << '\n';
  }
}

void write_metrics_csv_file(const RunMetrics& metrics, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write metrics: " + path);
  write_metrics_csv(metrics, os);
}

RunMetrics load_metrics_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read metrics: " + path);
  RunMetrics m;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    MetricRow r;
    char comma;
    ls >> r.episode >> comma >> r.task_id >> comma >> r.success_rate >> comma >> r.loss_h >>
        comma >> r.loss_g >> comma >> r.loss_phi_own >> comma >> r.loss_phi_rev >> comma >>
        r.filter_accept_rate >> comma >> r.shaping_mean;
    m.rows.push_back(r);
    m.episodes = std::max(m.episodes, r.episode);
  }
  return m;
}

int episodes_to_full_success(const RunMetrics& metrics, int task_id) {
  for (const MetricRow& r : metrics.rows)
    if (r.task_id == task_id && r.success_rate >= 1.0) return r.episode;
  return metrics.episodes;
}

double evaluate(const Policy& policy, const Env& env, int episodes, int horizon,
                std::uint64_t seed_base) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    State s = env.reset(seed_base + static_cast<std::uint64_t>(e));
    for (int t = 0; t < horizon; ++t) {
      StepOut out = env.step(s, policy(s));
      if (out.success) {
        ++successes;
        break;
      }
      s = out.next;
    }
  }
  return static_cast<double>(successes) / episodes;
}

std::string method_tag(const RunConfig& cfg) {
  std::string m;
  if (cfg.augment && cfg.shaping) m = "tr-sac";
  else if (cfg.augment) m = cfg.filter ? "+aug" : "+aug-nofilter";
  else if (cfg.shaping) m = "+shaping";
  else m = "sac";
  if (cfg.mode != "single") m = cfg.mode + "/" + m;
  return m;
}

namespace {

struct CommonSetup {
  std::vector<TaskRuntime> tasks;
  std::vector<std::unique_ptr<SacAgent>> agents;
  MultiTaskMode mode;
  int state_dim = 0, action_dim = 0;

  SacAgent& agent_for(int task) {
    return mode == MultiTaskMode::Single ? *agents[task] : *agents[0];
  }
};

CommonSetup make_common(const RunConfig& cfg) {
  cfg.validate();
  CommonSetup su;
  su.mode = parse_mode(cfg.mode);
  auto [id_a, id_b] = pair_tasks(cfg.pair);
  std::mt19937 init_rng = stream32(cfg.seed, kInit);

  for (int task = 0; task < 2; ++task) {
    TaskRuntime rt;
    rt.env = make_env(task == 0 ? id_a : id_b);
    rt.buffer = std::make_unique<ReplayBuffer>(cfg.buffer_capacity);
    rt.successes = std::make_unique<SuccessDataset>(rt.env->spec().object_indices,
                                                    cfg.success_cap);
    rt.reset_rng = stream64(cfg.seed, kEnvReset + task);
    rt.policy_rng = stream32(cfg.seed, kPolicy + task);
    rt.warmup_rng = stream32(cfg.seed, kWarmup + task);
    rt.sample_own_rng = stream32(cfg.seed, kSampleOwn + task);
    rt.sample_aug_rng = stream32(cfg.seed, kSampleAug + task);
    rt.pot_rng = stream32(cfg.seed, kPotBatch + task);
    rt.update_rng = stream32(cfg.seed, kUpdate + task);
    rt.eval_base = stream_seed(cfg.seed, kEvalBase + task);
    su.tasks.push_back(std::move(rt));
  }
  su.state_dim = su.tasks[0].env->spec().state_dim;
  su.action_dim = su.tasks[0].env->spec().action_dim;

  SacConfig sc;
  sc.hidden = cfg.hidden();
  sc.lr = cfg.lr;
  sc.alpha_lr = cfg.alpha_lr;
  sc.init_temperature = cfg.init_temperature;
  sc.log_std_bounds = {cfg.log_std_min, cfg.log_std_max};
  sc.tau = cfg.tau;
  sc.actor_update_freq = cfg.actor_update_freq;
  sc.target_update_freq = cfg.target_update_freq;
  int agent_count = su.mode == MultiTaskMode::Single ? 2 : 1;
  for (int i = 0; i < agent_count; ++i)
    su.agents.push_back(std::make_unique<SacAgent>(su.state_dim, su.action_dim, 2, su.mode,
                                                   sc, init_rng));
  return su;
}

void seed_demos(const RunConfig& cfg, CommonSetup& su, RunMetrics& metrics) {
  for (int task = 0; task < 2; ++task) {
    TaskRuntime& rt = su.tasks[task];
    if (cfg.demo_count == 0) {
      if (!cfg.out_dir.empty())
        save_demos(cfg.out_dir + "/demos_task" + std::to_string(task) + ".txt", *rt.env, {});
      continue;
    }
    // demos roll at the env's documented horizon, independent of the
    // training episode length
    auto demos = generate_demos(*rt.env, cfg.demo_count,
                                stream_seed(cfg.seed, kDemoSeed + task),
                                rt.env->spec().horizon);
    for (Trajectory& traj : demos) {
      traj.task_id = task;
      for (const Transition& tr : trajectory_transitions(traj)) {
        rt.buffer->push(tr);
        metrics.demo_transitions[task]++;
      }
      rt.successes->record(traj);
    }
    if (!cfg.out_dir.empty())
      save_demos(cfg.out_dir + "/demos_task" + std::to_string(task) + ".txt", *rt.env, demos);
  }
}

void run_eval_point(const RunConfig& cfg, CommonSetup& su, int episode, RunMetrics& metrics,
                    const double* loss_h, const double* loss_g) {
  for (int task = 0; task < 2; ++task) {
    TaskRuntime& rt = su.tasks[task];
    SacAgent& agent = su.agent_for(task);
    std::mt19937 dummy(0);
    Policy pol = [&](const State& s) { return agent.select_action(s, task, true, dummy); };
    std::uint64_t seed_base =
        splitmix64(rt.eval_base ^ (static_cast<std::uint64_t>(episode) * 0x9E3779B9ULL));
    MetricRow row;
    row.episode = episode;
    row.task_id = task;
    row.success_rate = evaluate(pol, *rt.env, cfg.eval_episodes, cfg.horizon, seed_base);
    if (loss_h) row.loss_h = *loss_h;
    if (loss_g) row.loss_g = *loss_g;
    row.loss_phi_own = rt.last_loss_phi_own;
    row.loss_phi_rev = rt.last_loss_phi_rev;
    if (cfg.augment) row.filter_accept_rate = rt.filter_stats.accept_rate();
    if (cfg.shaping && rt.shaping_count > 0)
      row.shaping_mean = rt.shaping_abs_sum / static_cast<double>(rt.shaping_count);
    metrics.rows.push_back(row);
    rt.filter_stats = AugmentStats{};
    rt.shaping_abs_sum = 0.0;
    rt.shaping_count = 0;
  }
}

void finalize_run(const RunConfig& cfg, CommonSetup& su, RunMetrics& metrics) {
  if (cfg.out_dir.empty()) return;
  write_metrics_csv_file(metrics, cfg.out_dir + "/metrics.csv");
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir + "/checkpoints");
  if (su.mode == MultiTaskMode::Single) {
    su.agents[0]->save_checkpoint(cfg.out_dir + "/checkpoints/task0");
    su.agents[1]->save_checkpoint(cfg.out_dir + "/checkpoints/task1");
  } else {
    su.agents[0]->save_checkpoint(cfg.out_dir + "/checkpoints/shared");
  }
}

void write_abort_snapshot(const RunConfig& cfg, const std::exception& e, long step) {
  if (cfg.out_dir.empty()) return;
  std::ofstream os(cfg.out_dir + "/abort.txt");
  os << "run aborted at combined step " << step << "\n" << e.what() << "\n";
}

}  // namespace

RunMetrics run_training(const RunConfig& cfg, const TrainHooks& hooks) {
  auto t0 = std::chrono::steady_clock::now();
  CommonSetup su = make_common(cfg);
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  RunMetrics metrics;
  metrics.episodes = cfg.episodes;
  metrics.eval_interval = cfg.eval_interval;
  seed_demos(cfg, su, metrics);

  std::optional<DynamicsModels> dynamics;
  std::optional<FilterConfig> fcfg;
  std::mt19937 dyn_rng = stream32(cfg.seed, kDynBatch);
  if (cfg.augment) {
    std::mt19937 dyn_init = stream32(cfg.seed, kInit + 100);
    dynamics = make_dynamics(su.state_dim, su.action_dim, cfg.hidden(), cfg.lr, dyn_init);
    fcfg = filter_config_for(su.tasks[0].env->spec(), cfg.beta, cfg.filter_max_norm);
  }
  std::optional<PotentialBank> potentials;
  if (cfg.shaping) {
    std::mt19937 pot_init = stream32(cfg.seed, kInit + 200);
    potentials.emplace(static_cast<int>(su.tasks[0].env->spec().object_indices.size()), 2,
                       su.mode, cfg.hidden(), cfg.lr, parse_label_scheme(cfg.scheme),
                       cfg.gamma, pot_init, cfg.rev_labels_forward);
  }

  for (int task = 0; task < 2; ++task)
    su.tasks[task].begin_episode(su.tasks[task].env->reset(su.tasks[task].reset_rng()));

  double last_loss_h = std::numeric_limits<double>::quiet_NaN();
  double last_loss_g = std::numeric_limits<double>::quiet_NaN();

  const long steps_per_task = static_cast<long>(cfg.episodes) * cfg.horizon;
  long combined_step = 0;
  try {
    for (long step = 0; step < steps_per_task; ++step) {
      for (int task = 0; task < 2; ++task, ++combined_step) {
        TaskRuntime& rt = su.tasks[task];
        TaskRuntime& other = su.tasks[1 - task];
        SacAgent& agent = su.agent_for(task);
        bool in_warmup = combined_step < cfg.warmup_steps;

        Action a = in_warmup
                       ? uniform_action(su.action_dim, rt.warmup_rng)
                       : agent.select_action(rt.state, task, false, rt.policy_rng);
        StepOut out = rt.env->step(rt.state, a);
        bool done = out.success || (rt.ep_t + 1 >= cfg.horizon);
        rt.buffer->push({rt.state, a, out.reward, out.next, done, out.success, task});
        rt.traj.actions.push_back(a);
        rt.traj.rewards.push_back(out.reward);
        rt.traj.states.push_back(out.next);
        if (out.success) rt.traj.success = true;

        if (!in_warmup) {
          if (dynamics) {
            auto batch = sample_union(*rt.buffer, *other.buffer,
                                      static_cast<std::size_t>(cfg.batch_size), dyn_rng);
            auto [lh, lg] = train_dynamics_step(*dynamics, batch);
            if (lh) last_loss_h = *lh;
            if (lg) last_loss_g = *lg;
          }
          if (potentials) {
            auto [lo, lre] = potentials->train_step(
                task, *rt.successes, *other.successes,
                static_cast<std::size_t>(cfg.batch_size), rt.pot_rng);
            if (lo) rt.last_loss_phi_own = *lo;
            if (lre) rt.last_loss_phi_rev = *lre;
          }

          auto combined =
              rt.buffer->sample(static_cast<std::size_t>(cfg.batch_size), rt.sample_own_rng);
          if (dynamics) {
            auto d_b = other.buffer->sample(static_cast<std::size_t>(cfg.batch_size),
                                            rt.sample_aug_rng);
            auto d_aug = augment_minibatch(*dynamics, d_b, *fcfg, *rt.env, task, cfg.filter,
                                           &rt.filter_stats);
            combined.insert(combined.end(), std::make_move_iterator(d_aug.begin()),
                            std::make_move_iterator(d_aug.end()));
          }
          if (potentials) {
            for (Transition& tr : combined) {
              double delta = potentials->shaping_delta(task, rt.env->object_part(tr.s),
                                                       rt.env->object_part(tr.next), cfg.gamma);
              tr.r += delta;
              rt.shaping_abs_sum += std::abs(delta);
              ++rt.shaping_count;
            }
          }
          if (hooks.on_sac_batch) hooks.on_sac_batch(task, combined);
          agent.critic_step(combined, cfg.gamma, rt.update_rng);
          if (agent.critic_updates() % cfg.actor_update_freq == 0) {
            agent.actor_step(combined, rt.update_rng);
            agent.temperature_step(combined, rt.update_rng);
          }
          if (agent.critic_updates() % cfg.target_update_freq == 0)
            agent.soft_update_targets(cfg.tau);
        }

        if (done) {
          rt.successes->record(rt.traj);
          rt.begin_episode(rt.env->reset(rt.reset_rng()));
        } else {
          rt.state = out.next;
          ++rt.ep_t;
        }
      }

      if ((step + 1) % cfg.horizon == 0) {
        int episode = static_cast<int>((step + 1) / cfg.horizon);
        if (episode % cfg.eval_interval == 0)
          run_eval_point(cfg, su, episode, metrics,
                         dynamics ? &last_loss_h : nullptr,
                         dynamics ? &last_loss_g : nullptr);
      }
    }
  } catch (const std::exception& e) {
    write_abort_snapshot(cfg, e, combined_step);
    throw;
  }

  for (int task = 0; task < 2; ++task) {
    metrics.buffer_size[task] = su.tasks[task].buffer->size();
    metrics.env_steps[task] = static_cast<std::uint64_t>(steps_per_task);
  }
  metrics.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finalize_run(cfg, su, metrics);
  return metrics;
}

RunMetrics run_plain_sac(const RunConfig& cfg, const TrainHooks& hooks) {
  auto t0 = std::chrono::steady_clock::now();
  CommonSetup su = make_common(cfg);
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  RunMetrics metrics;
  metrics.episodes = cfg.episodes;
  metrics.eval_interval = cfg.eval_interval;
  seed_demos(cfg, su, metrics);

  for (int task = 0; task < 2; ++task)
    su.tasks[task].begin_episode(su.tasks[task].env->reset(su.tasks[task].reset_rng()));

  const long steps_per_task = static_cast<long>(cfg.episodes) * cfg.horizon;
  long combined_step = 0;
  try {
    for (long step = 0; step < steps_per_task; ++step) {
      for (int task = 0; task < 2; ++task, ++combined_step) {
        TaskRuntime& rt = su.tasks[task];
        SacAgent& agent = su.agent_for(task);
        bool in_warmup = combined_step < cfg.warmup_steps;

        Action a = in_warmup
                       ? uniform_action(su.action_dim, rt.warmup_rng)
                       : agent.select_action(rt.state, task, false, rt.policy_rng);
        StepOut out = rt.env->step(rt.state, a);
        bool done = out.success || (rt.ep_t + 1 >= cfg.horizon);
        rt.buffer->push({rt.state, a, out.reward, out.next, done, out.success, task});
        rt.traj.actions.push_back(a);
        rt.traj.rewards.push_back(out.reward);
        rt.traj.states.push_back(out.next);
        if (out.success) rt.traj.success = true;

        if (!in_warmup) {
          auto batch =
              rt.buffer->sample(static_cast<std::size_t>(cfg.batch_size), rt.sample_own_rng);
          if (hooks.on_sac_batch) hooks.on_sac_batch(task, batch);
          agent.critic_step(batch, cfg.gamma, rt.update_rng);
          if (agent.critic_updates() % cfg.actor_update_freq == 0) {
            agent.actor_step(batch, rt.update_rng);
            agent.temperature_step(batch, rt.update_rng);
          }
          if (agent.critic_updates() % cfg.target_update_freq == 0)
            agent.soft_update_targets(cfg.tau);
        }

        if (done) {
          rt.successes->record(rt.traj);
          rt.begin_episode(rt.env->reset(rt.reset_rng()));
        } else {
          rt.state = out.next;
          ++rt.ep_t;
        }
      }
      if ((step + 1) % cfg.horizon == 0) {
        int episode = static_cast<int>((step + 1) / cfg.horizon);
        if (episode % cfg.eval_interval == 0)
          run_eval_point(cfg, su, episode, metrics, nullptr, nullptr);
      }
    }
  } catch (const std::exception& e) {
    write_abort_snapshot(cfg, e, combined_step);
    throw;
  }

  for (int task = 0; task < 2; ++task) {
    metrics.buffer_size[task] = su.tasks[task].buffer->size();
    metrics.env_steps[task] = static_cast<std::uint64_t>(steps_per_task);
  }
  metrics.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finalize_run(cfg, su, metrics);
  return metrics;
}

}  // namespace trdrl
