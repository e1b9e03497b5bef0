#pragma once

#include "trdrl/env.hpp"
#include "trdrl/nn.hpp"
#include "trdrl/replay.hpp"

#include <optional>
#include <random>
#include <vector>

namespace trdrl {

/// Inverse model h: (s, s') -> a and forward model g: (s, a) -> s',
/// shared across a task pair. Never task-conditioned.
struct DynamicsModels {
  DenseNet inverse;   // 2*state_dim -> action_dim
  DenseNet forward_;  // state_dim + action_dim -> state_dim
  AdamState inv_opt, fwd_opt;
};

DynamicsModels make_dynamics(int state_dim, int action_dim,
                             const std::vector<int>& hidden, double lr,
                             std::mt19937& rng);

Action inverse_action(const DynamicsModels& models, const State& s, const State& next);
State forward_predict(const DynamicsModels& models, const State& s, const Action& a);

/// One Adam step each on the inverse and forward losses (mean squared
/// error over the batch). Non-finite losses skip the step and report
/// nullopt for that model.
std::pair<std::optional<double>, std::optional<double>> train_dynamics_step(
    DynamicsModels& models, const std::vector<Transition>& batch);

struct FilterConfig {
  double beta = 0.01;
  double range_norm = 1.0;  // ||s_max - s_min||
  bool max_norm = false;    // default Euclidean

  double threshold() const { return beta * range_norm; }
};

FilterConfig filter_config_for(const EnvSpec& spec, double beta = 0.01,
                               bool max_norm = false);

/// Builds the reversed candidate (s', h(s', s), s) with the reward and
/// done flag relabeled through the target task's state-only oracle.
Transition reverse_transition(const DynamicsModels& models, const Transition& t,
                              const Env& target_env, int target_task_id);

/// Accept iff ||candidate.next - g(candidate.s, candidate.a)|| is
/// strictly below beta * ||s_max - s_min|| (equality rejects).
bool filter_reversed(const DynamicsModels& models, const Transition& candidate,
                     const FilterConfig& cfg);

double filter_error(const DynamicsModels& models, const Transition& candidate,
                    const FilterConfig& cfg);

struct AugmentStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double error_sum = 0.0;

  double accept_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed;
  }
  double mean_error() const {
    return proposed == 0 ? 0.0 : error_sum / static_cast<double>(proposed);
  }
};

/// Reversal augmentation with dynamics-aware filtering. With
/// `apply_filter` false every reversed candidate passes through.
std::vector<Transition> augment_minibatch(const DynamicsModels& models,
                                          const std::vector<Transition>& d_b,
                                          const FilterConfig& cfg, const Env& target_env,
                                          int target_task_id, bool apply_filter = true,
                                          AugmentStats* stats = nullptr);

}  // namespace trdrl
