#pragma once

#include "trdrl/gaussian_policy.hpp"
#include "trdrl/nn.hpp"
#include "trdrl/replay.hpp"
#include "trdrl/shaping.hpp"

#include <random>
#include <string>
#include <vector>

namespace trdrl {

struct SacConfig {
  std::vector<int> hidden = {64, 64};
  double lr = 1e-3;
  double alpha_lr = 1e-3;
  double init_temperature = 0.1;
  LogStdBounds log_std_bounds;
  double target_entropy = 0.0;  // 0 -> default -action_dim
  double tau = 0.01;
  int actor_update_freq = 2;
  int target_update_freq = 2;
};

/// Soft actor-critic with twin critics (minimum over the pair), target
/// critics maintained as an exponential moving average, and a trainable
/// temperature stored in log space. Multi-task variants: task-conditioned
/// (one-hot appended to the state) and multi-head (per-task output
/// slices).
class SacAgent {
 public:
  SacAgent(int state_dim, int action_dim, int task_count, MultiTaskMode mode,
           const SacConfig& cfg, std::mt19937& init_rng);

  Action select_action(const State& s, int task, bool deterministic,
                       std::mt19937& rng) const;

  /// One critic update; rewards in the batch are expected to be already
  /// shaped. Terminal transitions never bootstrap. Returns the loss.
  double critic_step(const std::vector<Transition>& batch, double gamma,
                     std::mt19937& rng);
  /// Loss-only evaluation with no parameter update (same math).
  double critic_loss(const std::vector<Transition>& batch, double gamma,
                     std::mt19937& rng) const;

  double actor_step(const std::vector<Transition>& batch, std::mt19937& rng);
  double temperature_step(const std::vector<Transition>& batch, std::mt19937& rng);

  /// target <- (1 - tau) * target + tau * online, elementwise.
  void soft_update_targets(double tau);
  void soft_update_targets() { soft_update_targets(cfg_.tau); }

  /// Actor loss and gradients with an externally fixed noise matrix
  /// (action_dim x batch); the finite-difference tests go through here.
  struct ActorLoss {
    double loss = 0.0;
    NetGrads grads;
  };
  ActorLoss actor_loss_with_noise(const std::vector<Transition>& batch,
                                  const Mat& noise) const;

  /// Mode-dependent network input (one-hot appended in task-conditioned
  /// mode; plain state otherwise).
  Vec condition_input(const State& s, int task) const;

  double temperature() const { return std::exp(log_alpha_); }
  double log_alpha() const { return log_alpha_; }
  double target_entropy() const { return target_entropy_; }
  MultiTaskMode mode() const { return mode_; }
  int task_count() const { return task_count_; }
  int action_dim() const { return action_dim_; }
  const SacConfig& config() const { return cfg_; }
  std::int64_t critic_updates() const { return critic_updates_; }

  DenseNet& actor() { return actor_; }
  DenseNet& critic1() { return q1_; }
  DenseNet& critic2() { return q2_; }
  DenseNet& target1() { return q1_target_; }
  DenseNet& target2() { return q2_target_; }
  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic1() const { return q1_; }
  const DenseNet& critic2() const { return q2_; }
  const DenseNet& target1() const { return q1_target_; }
  const DenseNet& target2() const { return q2_target_; }

  void save_checkpoint(const std::string& dir) const;
  static SacAgent load_checkpoint(const std::string& dir);

 private:
  struct CriticEval {
    double loss;
    NetGrads g1, g2;
  };
  CriticEval critic_eval(const std::vector<Transition>& batch, double gamma,
                         std::mt19937& rng) const;

  Mat conditioned_states(const std::vector<Transition>& batch, bool next) const;
  Mat critic_inputs(const Mat& cond_states, const Mat& actions) const;
  Vec actor_head(const Mat& raw, Eigen::Index col, int task) const;
  double critic_value(const DenseNet& q, const Mat& outs, Eigen::Index col,
                      int task) const;

  int state_dim_, action_dim_, task_count_;
  MultiTaskMode mode_;
  SacConfig cfg_;
  double target_entropy_;

  DenseNet actor_, q1_, q2_, q1_target_, q2_target_;
  AdamState actor_opt_, q1_opt_, q2_opt_;
  double log_alpha_;
  ScalarAdam alpha_opt_;
  std::int64_t critic_updates_ = 0;
};

}  // namespace trdrl
