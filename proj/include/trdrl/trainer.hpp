#pragma once

#include "trdrl/dynamics.hpp"
#include "trdrl/env.hpp"
#include "trdrl/replay.hpp"
#include "trdrl/sac.hpp"
#include "trdrl/shaping.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace trdrl {

/// Full experiment description. Every field maps to a key in the flat
/// key=value config format and can be overridden from the CLI.
struct RunConfig {
  std::string pair = "peg";
  std::string mode = "single";  // single | task-cond | multi-head
  std::uint64_t seed = 0;
  int episodes = 300;
  int horizon = 100;
  int batch_size = 128;
  double gamma = 0.99;
  double lr = 1e-3;
  double alpha_lr = 1e-3;
  double beta = 0.01;
  std::string scheme = "linear";
  int warmup_steps = 1000;
  int eval_interval = 20;  // episodes
  int eval_episodes = 20;
  int demo_count = 10;
  std::size_t buffer_capacity = 50000;
  int hidden_dim = 64;
  int hidden_depth = 2;
  double tau = 0.01;
  int actor_update_freq = 2;
  int target_update_freq = 2;
  double init_temperature = 0.1;
  double log_std_min = -10.0;
  double log_std_max = 2.0;
  bool augment = true;
  bool filter = true;
  bool shaping = true;
  std::size_t success_cap = 50;
  bool rev_labels_forward = false;  // alternative reversed-label reading
  bool filter_max_norm = false;
  std::string out_dir;

  std::vector<int> hidden() const { return std::vector<int>(hidden_depth, hidden_dim); }
  void validate() const;
};

RunConfig parse_config_text(std::istream& is, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});
void write_config(const RunConfig& cfg, std::ostream& os);
void write_config_file(const RunConfig& cfg, const std::string& path);
bool apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// One metrics row per (evaluation point, task).
struct MetricRow {
  int episode = 0;
  int task_id = 0;
  double success_rate = 0.0;
  double loss_h = std::numeric_limits<double>::quiet_NaN();
  double loss_g = std::numeric_limits<double>::quiet_NaN();
  double loss_phi_own = std::numeric_limits<double>::quiet_NaN();
  double loss_phi_rev = std::numeric_limits<double>::quiet_NaN();
  double filter_accept_rate = std::numeric_limits<double>::quiet_NaN();
  double shaping_mean = std::numeric_limits<double>::quiet_NaN();
};

struct RunMetrics {
  std::vector<MetricRow> rows;
  int episodes = 0;
  int eval_interval = 0;
  double wall_clock_s = 0.0;
  // per-task accounting, filled by the training loops
  std::array<std::size_t, 2> demo_transitions{0, 0};
  std::array<std::size_t, 2> buffer_size{0, 0};
  std::array<std::uint64_t, 2> env_steps{0, 0};
};

void write_metrics_csv(const RunMetrics& metrics, std::ostream& os);
void write_metrics_csv_file(const RunMetrics& metrics, const std::string& path);
RunMetrics load_metrics_csv_file(const std::string& path);

/// First evaluation point where the task's success rate reaches 1.0,
/// converted to an episode count; cfg.episodes if never.
int episodes_to_full_success(const RunMetrics& metrics, int task_id);

/// Deterministic-policy evaluation: fraction of successful episodes.
using Policy = std::function<Action(const State&)>;
double evaluate(const Policy& policy, const Env& env, int episodes, int horizon,
                std::uint64_t seed_base);

struct TrainHooks {
  /// Called with every minibatch handed to the SAC update (after
  /// augmentation and shaping), in order.
  std::function<void(int task, const std::vector<Transition>&)> on_sac_batch;
};

/// Algorithm: alternate the two tasks inside the timestep loop; per
/// step collect a transition, update dynamics and potential models,
/// sample d_A and d_B, augment-and-filter d_B, shape rewards, update
/// SAC. Deterministic given cfg.seed.
RunMetrics run_training(const RunConfig& cfg, const TrainHooks& hooks = {});

/// Reference implementation: plain SAC per task with demo seeding and
/// the same RNG discipline, no reversal machinery at all.
RunMetrics run_plain_sac(const RunConfig& cfg, const TrainHooks& hooks = {});

std::string method_tag(const RunConfig& cfg);

}  // namespace trdrl
