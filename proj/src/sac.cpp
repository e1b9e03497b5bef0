#include "trdrl/sac.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <stdexcept>

namespace trdrl {

namespace {
std::vector<int> net_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims = {in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}
}  // namespace

SacAgent::SacAgent(int state_dim, int action_dim, int task_count, MultiTaskMode mode,
                   const SacConfig& cfg, std::mt19937& init_rng)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      task_count_(task_count),
      mode_(mode),
      cfg_(cfg),
      target_entropy_(cfg.target_entropy != 0.0 ? cfg.target_entropy
                                                : -static_cast<double>(action_dim)),
      log_alpha_(std::log(cfg.init_temperature)) {
  int cond_dim = state_dim + (mode == MultiTaskMode::TaskConditioned ? task_count : 0);
  int heads = (mode == MultiTaskMode::MultiHead) ? task_count : 1;
  actor_ = make_net(net_dims(cond_dim, cfg.hidden, 2 * action_dim * heads),
                    Activation::Tanh, OutputActivation::Linear, init_rng);
  q1_ = make_net(net_dims(cond_dim + action_dim, cfg.hidden, heads), Activation::Tanh,
                 OutputActivation::Linear, init_rng);
  q2_ = make_net(net_dims(cond_dim + action_dim, cfg.hidden, heads), Activation::Tanh,
                 OutputActivation::Linear, init_rng);
  q1_target_ = q1_;
  q2_target_ = q2_;
  AdamConfig opt;
  opt.lr = cfg.lr;
  actor_opt_ = make_adam(actor_, opt);
  q1_opt_ = make_adam(q1_, opt);
  q2_opt_ = make_adam(q2_, opt);
  alpha_opt_.cfg.lr = cfg.alpha_lr;
}

Vec SacAgent::condition_input(const State& s, int task) const {
  if (task < 0 || task >= task_count_)
    throw std::invalid_argument("condition_input: task out of range");
  if (mode_ != MultiTaskMode::TaskConditioned) return s;
  Vec in = Vec::Zero(s.size() + task_count_);
  in.head(s.size()) = s;
  in(s.size() + task) = 1.0;
  return in;
}

Mat SacAgent::conditioned_states(const std::vector<Transition>& batch, bool next) const {
  int cond_dim = state_dim_ + (mode_ == MultiTaskMode::TaskConditioned ? task_count_ : 0);
  Mat m(cond_dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) =
        condition_input(next ? batch[i].next : batch[i].s, batch[i].task_id);
  return m;
}

Mat SacAgent::critic_inputs(const Mat& cond_states, const Mat& actions) const {
  Mat in(cond_states.rows() + actions.rows(), cond_states.cols());
  in.topRows(cond_states.rows()) = cond_states;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

Vec SacAgent::actor_head(const Mat& raw, Eigen::Index col, int task) const {
  if (mode_ == MultiTaskMode::MultiHead)
    return raw.block(2 * action_dim_ * task, col, 2 * action_dim_, 1);
  return raw.col(col);
}

double SacAgent::critic_value(const DenseNet&, const Mat& outs, Eigen::Index col,
                              int task) const {
  return mode_ == MultiTaskMode::MultiHead ? outs(task, col) : outs(0, col);
}

Action SacAgent::select_action(const State& s, int task, bool deterministic,
                               std::mt19937& rng) const {
  Vec in = condition_input(s, task);
  Mat raw = forward_batch(actor_, in);
  Vec head = actor_head(raw, 0, task);
  if (deterministic) return squash_mean(head);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec noise(action_dim_);
  for (int i = 0; i < action_dim_; ++i) noise(i) = normal(rng);
  return squash_sample(head, noise, cfg_.log_std_bounds).action;
}

SacAgent::CriticEval SacAgent::critic_eval(const std::vector<Transition>& batch,
                                           double gamma, std::mt19937& rng) const {
  if (batch.empty()) throw std::invalid_argument("critic update: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  Mat cond_s = conditioned_states(batch, false);
  Mat cond_s2 = conditioned_states(batch, true);

  // Next actions from the current policy, no gradient path.
  Mat raw2 = forward_batch(actor_, cond_s2);
  Mat a2(action_dim_, b);
  Vec logp2(b);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < b; ++i) {
    Vec noise(action_dim_);
    for (int k = 0; k < action_dim_; ++k) noise(k) = normal(rng);
    GaussianPolicyOutput out =
        squash_sample(actor_head(raw2, i, batch[i].task_id), noise, cfg_.log_std_bounds);
    a2.col(i) = out.action;
    logp2(i) = out.log_prob;
  }

  Mat q1t = forward_batch(q1_target_, critic_inputs(cond_s2, a2));
  Mat q2t = forward_batch(q2_target_, critic_inputs(cond_s2, a2));

  double alpha = std::exp(log_alpha_);
  Vec y(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    double target = batch[i].r;
    if (!batch[i].done) {
      double qmin = std::min(critic_value(q1_target_, q1t, i, batch[i].task_id),
                             critic_value(q2_target_, q2t, i, batch[i].task_id));
      target += gamma * (qmin - alpha * logp2(i));
    }
    y(i) = target;
  }

  Mat a_taken(action_dim_, b);
  for (Eigen::Index i = 0; i < b; ++i) a_taken.col(i) = batch[i].a;
  Mat in_q = critic_inputs(cond_s, a_taken);
  Mat q1v = forward_batch(q1_, in_q);
  Mat q2v = forward_batch(q2_, in_q);

  Mat up1 = Mat::Zero(q1v.rows(), b), up2 = Mat::Zero(q2v.rows(), b);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    int row = mode_ == MultiTaskMode::MultiHead ? batch[i].task_id : 0;
    double r1 = q1v(row, i) - y(i);
    double r2 = q2v(row, i) - y(i);
    loss += (r1 * r1 + r2 * r2) / static_cast<double>(b);
    up1(row, i) = 2.0 * r1 / static_cast<double>(b);
    up2(row, i) = 2.0 * r2 / static_cast<double>(b);
  }

  CriticEval ev;
  ev.loss = loss;
  ev.g1 = backward_batch(q1_, in_q, up1);
  ev.g2 = backward_batch(q2_, in_q, up2);
  return ev;
}

double SacAgent::critic_loss(const std::vector<Transition>& batch, double gamma,
                             std::mt19937& rng) const {
  return critic_eval(batch, gamma, rng).loss;
}

double SacAgent::critic_step(const std::vector<Transition>& batch, double gamma,
                             std::mt19937& rng) {
  CriticEval ev = critic_eval(batch, gamma, rng);
  if (!std::isfinite(ev.loss))
    throw std::runtime_error("critic update: non-finite loss");
  adam_step(q1_, ev.g1, q1_opt_, "critic-1");
  adam_step(q2_, ev.g2, q2_opt_, "critic-2");
  ++critic_updates_;
  return ev.loss;
}

SacAgent::ActorLoss SacAgent::actor_loss_with_noise(const std::vector<Transition>& batch,
                                                    const Mat& noise) const {
  if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(b);
  double alpha = std::exp(log_alpha_);

  Mat cond_s = conditioned_states(batch, false);
  Mat raw = forward_batch(actor_, cond_s);

  std::vector<GaussianPolicyOutput> outs(static_cast<std::size_t>(b));
  Mat a_pi(action_dim_, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    outs[static_cast<std::size_t>(i)] = squash_sample(
        actor_head(raw, i, batch[i].task_id), noise.col(i), cfg_.log_std_bounds);
    a_pi.col(i) = outs[static_cast<std::size_t>(i)].action;
  }

  Mat in_q = critic_inputs(cond_s, a_pi);
  Mat q1v = forward_batch(q1_, in_q);
  Mat q2v = forward_batch(q2_, in_q);

  double loss = 0.0;
  Mat up1 = Mat::Zero(q1v.rows(), b), up2 = Mat::Zero(q2v.rows(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    int row = mode_ == MultiTaskMode::MultiHead ? batch[i].task_id : 0;
    double v1 = q1v(row, i), v2 = q2v(row, i);
    double qmin = std::min(v1, v2);
    loss += (alpha * outs[static_cast<std::size_t>(i)].log_prob - qmin) * inv_b;
    // dL/da flows through whichever critic attains the minimum.
    if (v1 <= v2)
      up1(row, i) = -inv_b;
    else
      up2(row, i) = -inv_b;
  }

  NetGrads gq1 = backward_batch(q1_, in_q, up1);
  NetGrads gq2 = backward_batch(q2_, in_q, up2);
  Mat d_actions = gq1.inputs.bottomRows(action_dim_) + gq2.inputs.bottomRows(action_dim_);

  Mat up_actor = Mat::Zero(raw.rows(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& out = outs[static_cast<std::size_t>(i)];
    Vec d_raw = squash_backward(actor_head(raw, i, batch[i].task_id), out,
                                d_actions.col(i), alpha * inv_b, cfg_.log_std_bounds);
    if (mode_ == MultiTaskMode::MultiHead)
      up_actor.block(2 * action_dim_ * batch[i].task_id, i, 2 * action_dim_, 1) = d_raw;
    else
      up_actor.col(i) = d_raw;
  }

  ActorLoss result;
  result.loss = loss;
  result.grads = backward_batch(actor_, cond_s, up_actor);
  return result;
}

double SacAgent::actor_step(const std::vector<Transition>& batch, std::mt19937& rng) {
  Mat noise(action_dim_, static_cast<Eigen::Index>(batch.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < noise.cols(); ++j)
    for (int i = 0; i < action_dim_; ++i) noise(i, j) = normal(rng);
  ActorLoss al = actor_loss_with_noise(batch, noise);
  if (!std::isfinite(al.loss)) throw std::runtime_error("actor update: non-finite loss");
  adam_step(actor_, al.grads, actor_opt_, "actor");
  return al.loss;
}

double SacAgent::temperature_step(const std::vector<Transition>& batch,
                                  std::mt19937& rng) {
  if (batch.empty()) throw std::invalid_argument("temperature update: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  Mat cond_s = conditioned_states(batch, false);
  Mat raw = forward_batch(actor_, cond_s);
  std::normal_distribution<double> normal(0.0, 1.0);
  double alpha = std::exp(log_alpha_);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    Vec noise(action_dim_);
    for (int k = 0; k < action_dim_; ++k) noise(k) = normal(rng);
    GaussianPolicyOutput out =
        squash_sample(actor_head(raw, i, batch[i].task_id), noise, cfg_.log_std_bounds);
    loss += -alpha * (out.log_prob + target_entropy_) / static_cast<double>(b);
  }
  // d/d(log_alpha) of -exp(log_alpha)*(logp + H) equals the loss itself.
  adam_step_scalar(log_alpha_, loss, alpha_opt_, "temperature");
  return loss;
}

void SacAgent::soft_update_targets(double tau) {
  if (tau <= 0.0 || tau > 1.0)
    throw std::invalid_argument("soft_update_targets: tau must be in (0, 1]");
  for (int k = 0; k < q1_.layer_count(); ++k) {
    q1_target_.weights[k] = (1.0 - tau) * q1_target_.weights[k] + tau * q1_.weights[k];
    q1_target_.biases[k] = (1.0 - tau) * q1_target_.biases[k] + tau * q1_.biases[k];
    q2_target_.weights[k] = (1.0 - tau) * q2_target_.weights[k] + tau * q2_.weights[k];
    q2_target_.biases[k] = (1.0 - tau) * q2_target_.biases[k] + tau * q2_.biases[k];
  }
}

void SacAgent::save_checkpoint(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_net_file(actor_, dir + "/actor.net");
  save_net_file(q1_, dir + "/q1.net");
  save_net_file(q2_, dir + "/q2.net");
  save_net_file(q1_target_, dir + "/q1_target.net");
  save_net_file(q2_target_, dir + "/q2_target.net");
  std::ofstream os(dir + "/manifest.txt");
  if (!os) throw std::runtime_error("save_checkpoint: cannot open manifest in " + dir);
  os << std::setprecision(17);
  os << "state_dim=" << state_dim_ << "\n";
  os << "action_dim=" << action_dim_ << "\n";
  os << "task_count=" << task_count_ << "\n";
  os << "mode=" << mode_tag(mode_) << "\n";
  os << "log_alpha=" << log_alpha_ << "\n";
  os << "critic_updates=" << critic_updates_ << "\n";
  os << "lr=" << cfg_.lr << "\n";
  os << "alpha_lr=" << cfg_.alpha_lr << "\n";
  os << "tau=" << cfg_.tau << "\n";
  os << "log_std_min=" << cfg_.log_std_bounds.lo << "\n";
  os << "log_std_max=" << cfg_.log_std_bounds.hi << "\n";
  os << "target_entropy=" << target_entropy_ << "\n";
}

SacAgent SacAgent::load_checkpoint(const std::string& dir) {
  std::ifstream is(dir + "/manifest.txt");
  if (!is) throw std::runtime_error("load_checkpoint: cannot open manifest in " + dir);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  SacConfig cfg;
  cfg.lr = std::stod(kv.at("lr"));
  cfg.alpha_lr = std::stod(kv.at("alpha_lr"));
  cfg.tau = std::stod(kv.at("tau"));
  cfg.log_std_bounds.lo = std::stod(kv.at("log_std_min"));
  cfg.log_std_bounds.hi = std::stod(kv.at("log_std_max"));
  cfg.target_entropy = std::stod(kv.at("target_entropy"));
  std::mt19937 rng(0);
  SacAgent agent(std::stoi(kv.at("state_dim")), std::stoi(kv.at("action_dim")),
                 std::stoi(kv.at("task_count")), parse_mode(kv.at("mode")), cfg, rng);
  agent.actor_ = load_net_file(dir + "/actor.net");
  agent.q1_ = load_net_file(dir + "/q1.net");
  agent.q2_ = load_net_file(dir + "/q2.net");
  agent.q1_target_ = load_net_file(dir + "/q1_target.net");
  agent.q2_target_ = load_net_file(dir + "/q2_target.net");
  agent.actor_opt_ = make_adam(agent.actor_, agent.actor_opt_.cfg);
  agent.q1_opt_ = make_adam(agent.q1_, agent.q1_opt_.cfg);
  agent.q2_opt_ = make_adam(agent.q2_, agent.q2_opt_.cfg);
  agent.log_alpha_ = std::stod(kv.at("log_alpha"));
  agent.critic_updates_ = std::stoll(kv.at("critic_updates"));
  return agent;
}

}  // namespace trdrl
