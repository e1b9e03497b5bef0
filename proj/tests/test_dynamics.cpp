#include <doctest.h>

#include "trdrl/dynamics.hpp"

#include <cmath>

using namespace trdrl;

namespace {

// Pure-translation dynamics s' = s + 0.1 a in 2-d: the inverse and
// forward maps are closed-form, so exact nets exist.
Transition translation_transition(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0), act(-1.0, 1.0);
  Transition t;
  t.s = Vec(2);
  t.s << pos(rng), pos(rng);
  t.a = Vec(2);
  t.a << act(rng), act(rng);
  t.next = t.s + 0.1 * t.a;
  return t;
}

DenseNet exact_inverse_net() {
  // h(s, s') = 10 (s' - s)
  DenseNet net;
  net.dims = {4, 2};
  Mat w(2, 4);
  w << -10, 0, 10, 0, 0, -10, 0, 10;
  net.weights = {w};
  net.biases = {Vec::Zero(2)};
  return net;
}

DenseNet exact_forward_net() {
  // g(s, a) = s + 0.1 a
  DenseNet net;
  net.dims = {4, 2};
  Mat w(2, 4);
  w << 1, 0, 0.1, 0, 0, 1, 0, 0.1;
  net.weights = {w};
  net.biases = {Vec::Zero(2)};
  return net;
}

DynamicsModels exact_models() {
  DynamicsModels m;
  m.inverse = exact_inverse_net();
  m.forward_ = exact_forward_net();
  m.inv_opt = make_adam(m.inverse, {});
  m.fwd_opt = make_adam(m.forward_, {});
  return m;
}

}  // namespace

TEST_CASE("training: translation dynamics recovered to tight tolerances") {
  std::mt19937 init(3), data(5);
  DynamicsModels models = make_dynamics(2, 2, {64, 64}, 1e-3, init);
  for (int step = 0; step < 5000; ++step) {
    std::vector<Transition> batch;
    for (int i = 0; i < 128; ++i) batch.push_back(translation_transition(data));
    auto [lh, lg] = train_dynamics_step(models, batch);
    REQUIRE(lh.has_value());
    REQUIRE(lg.has_value());
  }
  // held-out checks against the closed-form maps
  std::mt19937 held(7);
  double worst_h = 0.0, worst_g = 0.0;
  for (int i = 0; i < 500; ++i) {
    Transition t = translation_transition(held);
    worst_h = std::max(worst_h,
                       (inverse_action(models, t.s, t.next) - t.a).lpNorm<Eigen::Infinity>());
    worst_g = std::max(worst_g,
                       (forward_predict(models, t.s, t.a) - t.next).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst_h < 0.05);
  CHECK(worst_g < 0.01);
}

TEST_CASE("training: converged models make near-no-op steps on repeated data") {
  std::mt19937 init(11), data(13);
  DynamicsModels models = make_dynamics(2, 2, {16}, 1e-3, init);
  Transition t = translation_transition(data);
  std::vector<Transition> batch(64, t);
  for (int i = 0; i < 3000; ++i) train_dynamics_step(models, batch);
  auto [lh, lg] = train_dynamics_step(models, batch);
  CHECK(*lh < 1e-8);
  CHECK(*lg < 1e-8);
  DenseNet before = models.inverse;
  train_dynamics_step(models, batch);
  double drift = 0.0;
  for (int k = 0; k < before.layer_count(); ++k)
    drift = std::max(drift, (models.inverse.weights[k] - before.weights[k])
                                .lpNorm<Eigen::Infinity>());
  CHECK(drift < 2e-3);  // steps bounded by lr once the loss is ~0
}

TEST_CASE("reverse_transition: exact inverse replays the source within 1e-6") {
  DynamicsModels models = exact_models();
  std::mt19937 rng(17);
  auto peg = make_env("peg-insert");  // reward oracle provider only
  for (int i = 0; i < 50; ++i) {
    std::uniform_real_distribution<double> pos(-0.4, 0.4), act(-1.0, 1.0);
    Transition t;
    t.s = Vec(2);
    t.s << pos(rng), pos(rng);
    t.a = Vec(2);
    t.a << act(rng), act(rng);
    t.next = t.s + 0.1 * t.a;
    // reversed candidate under the same translation dynamics
    Vec rev_a = inverse_action(models, t.next, t.s);
    Vec replay = t.next + 0.1 * rev_a;
    CHECK((replay - t.s).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("reverse_transition: null transition maps to the inverse fixed point") {
  DynamicsModels models = exact_models();
  auto env = make_env("peg-insert");
  Transition t;
  t.s = Vec(5);
  t.s << 0.0, 0.1, 0.2, 0.2, 0.0;
  t.a = Vec(3);
  t.a << 0.0, 0.0, -1.0;
  t.next = t.s;  // null transition
  // dims here don't match the 2-d toy nets; build matching nets instead
  std::mt19937 rng(23);
  DynamicsModels m5 = make_dynamics(5, 3, {16}, 1e-3, rng);
  Transition cand = reverse_transition(m5, t, *env, 0);
  CHECK((cand.s - t.s).norm() == 0.0);
  CHECK((cand.next - t.s).norm() == 0.0);
  Vec fixed = inverse_action(m5, t.s, t.s).cwiseMax(-1.0).cwiseMin(1.0);
  CHECK((cand.a - fixed).norm() == 0.0);
  CHECK(cand.task_id == 0);
}

TEST_CASE("reverse_transition: rewards relabeled by the target task's oracle") {
  std::mt19937 rng(29);
  DynamicsModels models = make_dynamics(5, 3, {16}, 1e-3, rng);
  auto insert = make_env("peg-insert");
  auto remove = make_env("peg-remove");
  // a remove-task transition that STARTS at the slot (= insert goal)
  Transition t;
  t.s = Vec(5);
  t.s << 0.4, 0.0, 0.35, 0.05, 1.0;
  t.a = Vec(3);
  t.a << -1.0, 0.0, 1.0;
  t.next = Vec(5);
  t.next << 0.3, 0.0, 0.25, 0.05, 1.0;
  t.task_id = 1;
  Transition cand = reverse_transition(models, t, *insert, 0);
  // candidate ends where the source started: at the insert goal
  CHECK(cand.r == 1.0);
  CHECK(cand.success);
  CHECK(cand.done);
  CHECK(cand.task_id == 0);

  // the same geometry relabeled for the remove task gives zero reward
  Transition cand2 = reverse_transition(models, t, *remove, 1);
  CHECK(cand2.r == 0.0);
  CHECK(!cand2.success);
}

TEST_CASE("filter: perfect models accept reversible candidates with zero error") {
  DynamicsModels models = exact_models();
  FilterConfig cfg;
  cfg.beta = 0.01;
  cfg.range_norm = 4.0;
  Transition cand;
  cand.s = Vec(2);
  cand.s << 0.2, -0.1;
  cand.a = Vec(2);
  cand.a << 0.5, 0.25;
  cand.next = cand.s + 0.1 * cand.a;
  CHECK(filter_error(models, cand, cfg) < 1e-12);
  CHECK(filter_reversed(models, cand, cfg));
}

TEST_CASE("filter: threshold comparison is strict (equality rejects)") {
  DynamicsModels models = exact_models();
  FilterConfig cfg;
  cfg.beta = 0.01;
  cfg.range_norm = 10.0;  // threshold 0.01 * 10 = 0.1
  CHECK(cfg.threshold() == 0.1);
  Transition cand;
  cand.s = Vec(2);
  cand.s << 0.0, 0.0;
  cand.a = Vec(2);
  cand.a << 0.0, 0.0;
  cand.next = Vec(2);
  cand.next << 0.1, 0.0;  // error exactly 0.1
  CHECK(filter_error(models, cand, cfg) == 0.1);
  CHECK(!filter_reversed(models, cand, cfg));
  cand.next << 0.0999, 0.0;
  CHECK(filter_reversed(models, cand, cfg));
}

TEST_CASE("filter: max-norm option changes the norm, not the rule") {
  DynamicsModels models = exact_models();
  FilterConfig cfg;
  cfg.beta = 0.01;
  cfg.range_norm = 10.0;
  cfg.max_norm = true;
  Transition cand;
  cand.s = Vec::Zero(2);
  cand.a = Vec::Zero(2);
  cand.next = Vec(2);
  cand.next << 0.09, 0.09;  // euclidean 0.127 > 0.1, max-norm 0.09 < 0.1
  CHECK(filter_reversed(models, cand, cfg));
  cfg.max_norm = false;
  CHECK(!filter_reversed(models, cand, cfg));
}

TEST_CASE("filter config derives the range norm from the env spec") {
  auto env = make_env("peg-insert");
  FilterConfig cfg = filter_config_for(env->spec());
  CHECK(cfg.range_norm == doctest::Approx(env->spec().range_norm()));
  CHECK(cfg.beta == 0.01);
}

TEST_CASE("augment: empty input gives empty output; exact models pass everything") {
  DynamicsModels models = exact_models();
  FilterConfig cfg;
  cfg.beta = 0.01;
  cfg.range_norm = 4.0;

  // a tiny translation "env" stand-in: the real envs have 5-d states, so
  // build the oracle path through a custom check instead
  struct ToyEnv final : Env {
    ToyEnv() : Env([] {
        EnvSpec s;
        s.id = "toy";
        s.pair_id = "toy";
        s.state_dim = 2;
        s.action_dim = 2;
        s.s_min = Vec::Constant(2, -2.0);
        s.s_max = Vec::Constant(2, 2.0);
        s.horizon = 10;
        s.object_indices = {0, 1};
        return s;
      }()) {}
    std::pair<double, bool> reward_oracle(const Vec& x) const override {
      bool hit = x.norm() < 0.05;
      return {hit ? 1.0 : 0.0, hit};
    }
    Action expert_action(const State&) const override { return Vec::Zero(2); }
   protected:
    State do_reset(std::mt19937&) const override { return Vec::Zero(2); }
    StepOut do_step(const State& s, const Action& a) const override {
      StepOut out;
      out.next = s + 0.1 * a;
      auto [r, success] = reward_oracle(out.next);
      out.reward = r;
      out.success = success;
      return out;
    }
    std::vector<Action> reverse_candidates(const State&, const Action&,
                                           const State&) const override {
      return {};
    }
  } toy;

  std::mt19937 rng(31);
  AugmentStats stats;
  CHECK(augment_minibatch(models, {}, cfg, toy, 0, true, &stats).empty());
  CHECK(stats.proposed == 0);

  std::vector<Transition> batch;
  for (int i = 0; i < 32; ++i) batch.push_back(translation_transition(rng));
  auto out = augment_minibatch(models, batch, cfg, toy, 0, true, &stats);
  CHECK(out.size() == batch.size());  // all reversible under exact models
  CHECK(stats.accept_rate() == 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK((out[i].s - batch[i].next).norm() == 0.0);
    CHECK((out[i].next - batch[i].s).norm() == 0.0);
    CHECK(out[i].task_id == 0);
  }

  // filter off: everything passes regardless of error
  DynamicsModels broken = exact_models();
  broken.forward_.biases[0] = Vec::Constant(2, 5.0);
  auto unfiltered = augment_minibatch(broken, batch, cfg, toy, 0, false, nullptr);
  CHECK(unfiltered.size() == batch.size());
  auto filtered = augment_minibatch(broken, batch, cfg, toy, 0, true, nullptr);
  CHECK(filtered.empty());
}
