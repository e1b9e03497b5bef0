#include <doctest.h>

#include "trdrl/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace trdrl;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.pair = "peg";
  cfg.episodes = 2;
  cfg.horizon = 10;
  cfg.batch_size = 8;
  cfg.demo_count = 2;
  cfg.warmup_steps = 6;
  cfg.eval_interval = 1;
  cfg.eval_episodes = 2;
  cfg.hidden_dim = 16;
  cfg.hidden_depth = 1;
  cfg.buffer_capacity = 1000;
  return cfg;
}

struct BatchDigest {
  std::vector<double> hashes;
  void record(int task, const std::vector<Transition>& batch) {
    double h = task * 7919.0;
    for (const auto& t : batch) {
      h += t.s.sum() + 3.0 * t.a.sum() + 17.0 * t.r + 31.0 * t.next.sum() +
           (t.done ? 101.0 : 0.0) + 7.0 * t.task_id;
    }
    hashes.push_back(h);
  }
};

}  // namespace

TEST_CASE("config: round trip through the key=value format") {
  RunConfig cfg = tiny_config();
  cfg.pair = "door-inward";
  cfg.mode = "multi-head";
  cfg.beta = 0.001;
  cfg.augment = false;
  std::ostringstream os;
  write_config(cfg, os);
  std::istringstream is(os.str());
  RunConfig back = parse_config_text(is);
  CHECK(back.pair == "door-inward");
  CHECK(back.mode == "multi-head");
  CHECK(back.beta == 0.001);
  CHECK(back.augment == false);
  CHECK(back.episodes == cfg.episodes);
}

TEST_CASE("config: unknown keys and malformed lines rejected") {
  std::istringstream bad1("nonsense_key=3\n");
  CHECK_THROWS_WITH_AS(parse_config_text(bad1), doctest::Contains("nonsense_key"),
                       std::invalid_argument);
  std::istringstream bad2("episodes 5\n");
  CHECK_THROWS_AS(parse_config_text(bad2), std::invalid_argument);
  std::istringstream ok("# comment\n\n  episodes = 7 # trailing\n");
  CHECK(parse_config_text(ok).episodes == 7);
  CHECK_THROWS_AS(load_config_file("/nonexistent/path.cfg"), std::runtime_error);
}

TEST_CASE("config: validation catches bad values") {
  RunConfig cfg = tiny_config();
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.pair = "unknown";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.episodes = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("counting: buffers hold the demo transitions plus N*T per task") {
  RunConfig cfg = tiny_config();
  cfg.episodes = 1;
  cfg.horizon = 5;
  cfg.demo_count = 10;
  cfg.warmup_steps = 1000;  // no updates, pure counting
  cfg.eval_interval = 1;
  TrainHooks hooks;
  RunMetrics metrics = run_training(cfg, hooks);
  // one eval point (episode 1), both tasks
  REQUIRE(metrics.rows.size() == 2);
  CHECK(metrics.rows[0].episode == 1);
  CHECK(metrics.rows[0].task_id == 0);
  CHECK(metrics.rows[1].task_id == 1);
  for (int task = 0; task < 2; ++task) {
    CHECK(metrics.env_steps[task] == 5);  // N * T
    CHECK(metrics.demo_transitions[task] > 0);
    CHECK(metrics.buffer_size[task] == metrics.demo_transitions[task] + 5);
  }
}

TEST_CASE("determinism: identical seeds give identical metrics") {
  RunConfig cfg = tiny_config();
  cfg.seed = 5;
  RunMetrics a = run_training(cfg);
  RunMetrics b = run_training(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].success_rate == b.rows[i].success_rate);
    CHECK(a.rows[i].loss_h == doctest::Approx(b.rows[i].loss_h).epsilon(1e-15));
  }
  RunConfig other = cfg;
  other.seed = 6;
  RunMetrics c = run_training(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    if (a.rows[i].success_rate != c.rows[i].success_rate) any_diff = true;
  (void)any_diff;  // different seeds usually differ but need not
}

TEST_CASE("baseline identity: toggles off reproduce the plain-SAC batch stream") {
  RunConfig cfg = tiny_config();
  cfg.augment = false;
  cfg.filter = false;
  cfg.shaping = false;
  cfg.seed = 3;

  BatchDigest full, plain;
  TrainHooks hooks_full, hooks_plain;
  hooks_full.on_sac_batch = [&](int task, const std::vector<Transition>& b) {
    full.record(task, b);
  };
  hooks_plain.on_sac_batch = [&](int task, const std::vector<Transition>& b) {
    plain.record(task, b);
  };
  RunMetrics m1 = run_training(cfg, hooks_full);
  RunMetrics m2 = run_plain_sac(cfg, hooks_plain);

  REQUIRE(!full.hashes.empty());
  REQUIRE(full.hashes.size() == plain.hashes.size());
  for (std::size_t i = 0; i < full.hashes.size(); ++i)
    CHECK(full.hashes[i] == plain.hashes[i]);
  // and the evaluation series agree too
  REQUIRE(m1.rows.size() == m2.rows.size());
  for (std::size_t i = 0; i < m1.rows.size(); ++i)
    CHECK(m1.rows[i].success_rate == m2.rows[i].success_rate);
}

TEST_CASE("toggles on: augmented transitions never enter the replay buffers") {
  // buffer content is demos + episodes*horizon regardless of augmentation;
  // run with small warmup so augmentation actually happens, then verify via
  // the batch hook that augmented minibatches can exceed the batch size
  RunConfig cfg = tiny_config();
  cfg.seed = 11;
  cfg.warmup_steps = 4;
  std::size_t max_batch = 0;
  TrainHooks hooks;
  hooks.on_sac_batch = [&](int, const std::vector<Transition>& b) {
    max_batch = std::max(max_batch, b.size());
  };
  run_training(cfg, hooks);
  CHECK(max_batch >= static_cast<std::size_t>(cfg.batch_size));
  CHECK(max_batch <= static_cast<std::size_t>(2 * cfg.batch_size));
}

TEST_CASE("shaped rewards: stored rewards stay sparse while sampled ones shift") {
  RunConfig cfg = tiny_config();
  cfg.seed = 13;
  cfg.warmup_steps = 2;
  cfg.augment = false;
  cfg.shaping = true;
  bool saw_nonsparse = false;
  TrainHooks hooks;
  hooks.on_sac_batch = [&](int, const std::vector<Transition>& b) {
    for (const auto& t : b)
      if (t.r != 0.0 && t.r != 1.0) saw_nonsparse = true;
  };
  run_training(cfg, hooks);
  // demos give successes immediately, so potentials train and shaping kicks in
  CHECK(saw_nonsparse);
}

TEST_CASE("evaluate: expert policy scores 1.0, idle policy scores 0.0") {
  auto env = make_env("door-inward-open");
  Policy expert = [&](const State& s) { return env->expert_action(s); };
  CHECK(evaluate(expert, *env, 5, env->spec().horizon, 0) == 1.0);
  Policy idle = [&](const State&) { return Action::Zero(3); };
  CHECK(evaluate(idle, *env, 5, env->spec().horizon, 0) == 0.0);
  CHECK_THROWS_AS(evaluate(idle, *env, 0, 10, 0), std::invalid_argument);
}

TEST_CASE("evaluate: fraction arithmetic (13 of 20 is 0.65)") {
  // tiny custom env whose success depends only on the reset seed
  struct SeedEnv final : Env {
    SeedEnv() : Env([] {
        EnvSpec s;
        s.id = "seed-env";
        s.pair_id = "seed";
        s.state_dim = 1;
        s.action_dim = 1;
        s.s_min = Vec::Constant(1, 0.0);
        s.s_max = Vec::Constant(1, 1e9);
        s.horizon = 3;
        s.object_indices = {0};
        return s;
      }()) {}
    std::pair<double, bool> reward_oracle(const Vec& x) const override {
      bool hit = std::fmod(x(0), 20.0) < 13.0;
      return {hit ? 1.0 : 0.0, hit};
    }
    Action expert_action(const State&) const override { return Vec::Zero(1); }
   protected:
    State do_reset(std::mt19937&) const override { return Vec::Zero(1); }
    StepOut do_step(const State& s, const Action&) const override {
      StepOut out;
      out.next = s;
      auto [r, success] = reward_oracle(s);
      out.reward = r;
      out.success = success;
      return out;
    }
    std::vector<Action> reverse_candidates(const State&, const Action&,
                                           const State&) const override {
      return {};
    }
  };
  SeedEnv env;
  // success iff (seed mod 20) < 13 -> exactly 13 of 20 consecutive seeds
  int wins = 0;
  for (int e = 0; e < 20; ++e) {
    State s = Vec::Constant(1, static_cast<double>(e));
    StepOut out = env.step(s, Vec::Zero(1));
    if (out.success) ++wins;
  }
  CHECK(static_cast<double>(wins) / 20.0 == 0.65);
}

TEST_CASE("episodes_to_full_success: first full-success eval point, capped") {
  RunMetrics m;
  m.episodes = 500;
  m.eval_interval = 20;
  for (int i = 1; i <= 3; ++i) {
    MetricRow r;
    r.episode = 20 * i;
    r.task_id = 0;
    r.success_rate = (i == 1 ? 0.0 : i == 2 ? 0.5 : 1.0);
    m.rows.push_back(r);
  }
  CHECK(episodes_to_full_success(m, 0) == 60);
  CHECK(episodes_to_full_success(m, 1) == 500);  // never reached -> cap

  RunMetrics immediate;
  immediate.episodes = 500;
  MetricRow r;
  r.episode = 20;
  r.task_id = 0;
  r.success_rate = 1.0;
  immediate.rows.push_back(r);
  CHECK(episodes_to_full_success(immediate, 0) == 20);
}

TEST_CASE("alternation fairness: both tasks execute the same number of env steps") {
  RunConfig cfg = tiny_config();
  cfg.seed = 17;
  std::vector<int> batches_seen(2, 0);
  TrainHooks hooks;
  hooks.on_sac_batch = [&](int task, const std::vector<Transition>&) {
    batches_seen[task]++;
  };
  RunMetrics m = run_training(cfg, hooks);
  CHECK(batches_seen[0] == batches_seen[1]);
  CHECK(m.env_steps[0] == m.env_steps[1]);
  // augmented transitions never enter the buffers
  for (int task = 0; task < 2; ++task)
    CHECK(m.buffer_size[task] ==
          m.demo_transitions[task] + static_cast<std::size_t>(cfg.episodes) * cfg.horizon);
}

TEST_CASE("metrics CSV: write/load round trip with the documented columns") {
  namespace fs = std::filesystem;
  RunMetrics m;
  m.episodes = 40;
  m.eval_interval = 20;
  for (int task = 0; task < 2; ++task) {
    MetricRow r;
    r.episode = 20;
    r.task_id = task;
    r.success_rate = 0.25 * (task + 1);
    r.loss_h = 0.5;
    r.loss_g = 0.25;
    r.filter_accept_rate = 0.75;
    r.shaping_mean = 0.01;
    m.rows.push_back(r);
  }
  std::ostringstream os;
  write_metrics_csv(m, os);
  std::string text = os.str();
  CHECK(text.find("episode,task-id,success-rate,loss-h,loss-g,loss-phi-own,"
                  "loss-phi-rev,filter-accept-rate,shaping-mean") == 0);
  auto path = (fs::temp_directory_path() / "trdrl_metrics_test.csv").string();
  write_metrics_csv_file(m, path);
  RunMetrics back = load_metrics_csv_file(path);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].success_rate == 0.25);
  CHECK(back.rows[1].success_rate == 0.5);
  CHECK(back.rows[0].loss_h == 0.5);
  fs::remove(path);
}

TEST_CASE("run directory artifacts: resolved config, metrics, demos, checkpoints") {
  namespace fs = std::filesystem;
  auto dir = (fs::temp_directory_path() / "trdrl_run_test").string();
  fs::remove_all(dir);
  RunConfig cfg = tiny_config();
  cfg.out_dir = dir;
  run_training(cfg);
  CHECK(fs::exists(dir + "/metrics.csv"));
  CHECK(fs::exists(dir + "/demos_task0.txt"));
  CHECK(fs::exists(dir + "/demos_task1.txt"));
  CHECK(fs::exists(dir + "/checkpoints/task0/manifest.txt"));
  CHECK(fs::exists(dir + "/checkpoints/task1/manifest.txt"));
  DemoFile demos = load_demos(dir + "/demos_task0.txt");
  CHECK(demos.trajectories.size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("method tags for aggregation") {
  RunConfig cfg;
  cfg.augment = false;
  cfg.shaping = false;
  CHECK(method_tag(cfg) == "sac");
  cfg.augment = true;
  CHECK(method_tag(cfg) == "+aug");
  cfg.filter = false;
  CHECK(method_tag(cfg) == "+aug-nofilter");
  cfg.filter = true;
  cfg.shaping = true;
  CHECK(method_tag(cfg) == "tr-sac");
  cfg.augment = false;
  CHECK(method_tag(cfg) == "+shaping");
  cfg.mode = "multi-head";
  CHECK(method_tag(cfg) == "multi-head/+shaping");
}

TEST_CASE("multi-task modes run end to end") {
  for (const char* mode : {"task-cond", "multi-head"}) {
    RunConfig cfg = tiny_config();
    cfg.mode = mode;
    cfg.seed = 23;
    RunMetrics m = run_training(cfg);
    CHECK(m.rows.size() == 2 * static_cast<std::size_t>(cfg.episodes));
  }
}
