#include "trdrl/dynamics.hpp"

#include <cmath>
#include <iostream>

namespace trdrl {

DynamicsModels make_dynamics(int state_dim, int action_dim,
                             const std::vector<int>& hidden, double lr,
                             std::mt19937& rng) {
  DynamicsModels m;
  std::vector<int> inv_dims = {2 * state_dim};
  inv_dims.insert(inv_dims.end(), hidden.begin(), hidden.end());
  inv_dims.push_back(action_dim);
  std::vector<int> fwd_dims = {state_dim + action_dim};
  fwd_dims.insert(fwd_dims.end(), hidden.begin(), hidden.end());
  fwd_dims.push_back(state_dim);
  m.inverse = make_net(inv_dims, Activation::Tanh, OutputActivation::Linear, rng);
  m.forward_ = make_net(fwd_dims, Activation::Tanh, OutputActivation::Linear, rng);
  AdamConfig cfg;
  cfg.lr = lr;
  m.inv_opt = make_adam(m.inverse, cfg);
  m.fwd_opt = make_adam(m.forward_, cfg);
  return m;
}

Action inverse_action(const DynamicsModels& models, const State& s, const State& next) {
  Vec in(s.size() + next.size());
  in << s, next;
  return forward(models.inverse, in);
}

State forward_predict(const DynamicsModels& models, const State& s, const Action& a) {
  Vec in(s.size() + a.size());
  in << s, a;
  return forward(models.forward_, in);
}

std::pair<std::optional<double>, std::optional<double>> train_dynamics_step(
    DynamicsModels& models, const std::vector<Transition>& batch) {
  if (batch.empty()) return {std::nullopt, std::nullopt};
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index sd = batch[0].s.size();
  const Eigen::Index ad = batch[0].a.size();

  Mat inv_in(2 * sd, b), fwd_in(sd + ad, b), a_target(ad, b), s_target(sd, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    inv_in.block(0, i, sd, 1) = batch[i].s;
    inv_in.block(sd, i, sd, 1) = batch[i].next;
    fwd_in.block(0, i, sd, 1) = batch[i].s;
    fwd_in.block(sd, i, ad, 1) = batch[i].a;
    a_target.col(i) = batch[i].a;
    s_target.col(i) = batch[i].next;
  }

  std::optional<double> loss_h, loss_g;

  Mat a_pred = forward_batch(models.inverse, inv_in);
  Mat a_res = a_pred - a_target;
  double lh = a_res.squaredNorm() / static_cast<double>(b);
  if (std::isfinite(lh)) {
    NetGrads g = backward_batch(models.inverse, inv_in, Mat(2.0 * a_res / b));
    adam_step(models.inverse, g, models.inv_opt, "inverse-dynamics");
    loss_h = lh;
  } else {
    std::cerr << "warning: non-finite inverse-dynamics loss, skipping step\n";
  }

  Mat s_pred = forward_batch(models.forward_, fwd_in);
  Mat s_res = s_pred - s_target;
  double lg = s_res.squaredNorm() / static_cast<double>(b);
  if (std::isfinite(lg)) {
    NetGrads g = backward_batch(models.forward_, fwd_in, Mat(2.0 * s_res / b));
    adam_step(models.forward_, g, models.fwd_opt, "forward-dynamics");
    loss_g = lg;
  } else {
    std::cerr << "warning: non-finite forward-dynamics loss, skipping step\n";
  }
  return {loss_h, loss_g};
}

FilterConfig filter_config_for(const EnvSpec& spec, double beta, bool max_norm) {
  FilterConfig cfg;
  cfg.beta = beta;
  cfg.range_norm = max_norm ? (spec.s_max - spec.s_min).lpNorm<Eigen::Infinity>()
                            : spec.range_norm();
  cfg.max_norm = max_norm;
  return cfg;
}

Transition reverse_transition(const DynamicsModels& models, const Transition& t,
                              const Env& target_env, int target_task_id) {
  Transition cand;
  cand.s = t.next;
  cand.a = inverse_action(models, t.next, t.s).cwiseMax(-1.0).cwiseMin(1.0);
  cand.next = t.s;
  auto [r, success] = target_env.reward_oracle(target_env.object_part(t.s));
  cand.r = r;
  cand.success = success;
  cand.done = success;
  cand.task_id = target_task_id;
  return cand;
}

double filter_error(const DynamicsModels& models, const Transition& candidate,
                    const FilterConfig& cfg) {
  State pred = forward_predict(models, candidate.s, candidate.a);
  Vec diff = candidate.next - pred;
  return cfg.max_norm ? diff.lpNorm<Eigen::Infinity>() : diff.norm();
}

bool filter_reversed(const DynamicsModels& models, const Transition& candidate,
                     const FilterConfig& cfg) {
  return filter_error(models, candidate, cfg) < cfg.threshold();
}

std::vector<Transition> augment_minibatch(const DynamicsModels& models,
                                          const std::vector<Transition>& d_b,
                                          const FilterConfig& cfg, const Env& target_env,
                                          int target_task_id, bool apply_filter,
                                          AugmentStats* stats) {
  std::vector<Transition> out;
  double err_sum = 0.0;
  for (const Transition& t : d_b) {
    Transition cand = reverse_transition(models, t, target_env, target_task_id);
    double err = filter_error(models, cand, cfg);
    err_sum += err;
    bool accept = !apply_filter || err < cfg.threshold();
    if (accept) out.push_back(std::move(cand));
  }
  if (stats) {
    stats->proposed += d_b.size();
    stats->accepted += out.size();
    stats->error_sum += err_sum;
  }
  return out;
}

}  // namespace trdrl
