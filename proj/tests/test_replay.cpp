#include <doctest.h>

#include "trdrl/replay.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace trdrl;

namespace {

Transition make_transition(double tag) {
  Transition t;
  t.s = Vec::Constant(2, tag);
  t.a = Vec::Constant(1, tag);
  t.r = tag;
  t.next = Vec::Constant(2, tag + 0.5);
  t.done = false;
  t.success = false;
  t.task_id = 0;
  return t;
}

}  // namespace

TEST_CASE("buffer: ring overwrite semantics") {
  ReplayBuffer buf(2);
  buf.push(make_transition(1));
  buf.push(make_transition(2));
  buf.push(make_transition(3));
  CHECK(buf.size() == 2);
  CHECK(buf.total_pushed() == 3);
  std::vector<double> tags = {buf.at(0).r, buf.at(1).r};
  std::sort(tags.begin(), tags.end());
  CHECK(tags[0] == 2.0);
  CHECK(tags[1] == 3.0);
}

TEST_CASE("buffer: sampling returns only stored items, deterministic per rng") {
  ReplayBuffer buf(8);
  buf.push(make_transition(7));
  std::mt19937 rng(3);
  auto batch = buf.sample(4, rng);
  REQUIRE(batch.size() == 4);
  for (const auto& t : batch) CHECK(t.r == 7.0);

  buf.push(make_transition(9));
  std::mt19937 r1(11), r2(11);
  auto b1 = buf.sample(16, r1);
  auto b2 = buf.sample(16, r2);
  for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i].r == b2[i].r);

  ReplayBuffer empty(4);
  std::mt19937 rng2(0);
  CHECK_THROWS_AS(empty.sample(1, rng2), std::runtime_error);
}

TEST_CASE("buffer: insertion counter tracks pushes to capacity") {
  ReplayBuffer buf(5);
  for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
  CHECK(buf.size() == 5);
  CHECK(buf.total_pushed() == 5);
}

TEST_CASE("buffer: sampling frequencies within 3 sigma of uniform") {
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) buf.push(make_transition(i));
  std::mt19937 rng(17);
  const int draws = 100000;
  std::vector<int> counts(10, 0);
  auto batch = buf.sample(draws, rng);
  for (const auto& t : batch) counts[static_cast<int>(t.r)]++;
  // binomial bound: mean n*p, sigma = sqrt(n*p*(1-p))
  double mean = draws * 0.1;
  double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int c : counts) {
    CHECK(c > mean - 3 * sigma);
    CHECK(c < mean + 3 * sigma);
  }
}

TEST_CASE("success dataset: failures are skipped, successes keep object states") {
  SuccessDataset ds({0, 1}, 50);
  Trajectory fail;
  fail.success = false;
  fail.states = {Vec::Zero(4), Vec::Ones(4)};
  fail.actions = {Vec::Zero(2)};
  fail.rewards = {0.0};
  CHECK(!ds.record(fail));
  CHECK(ds.size() == 0);
  CHECK(ds.skipped() == 1);

  Trajectory ok;
  ok.success = true;
  const int n = 6;
  for (int t = 0; t <= n; ++t) {
    Vec s(4);
    s << t * 0.1, -t * 0.1, 5.0, 6.0;
    ok.states.push_back(s);
    if (t < n) {
      ok.actions.push_back(Vec::Zero(2));
      ok.rewards.push_back(0.0);
    }
  }
  CHECK(ds.record(ok));
  REQUIRE(ds.size() == 1);
  REQUIRE(ds.object_states(0).size() == n + 1);
  CHECK(ds.object_states(0)[3](0) == doctest::Approx(0.3));
  CHECK(ds.object_states(0)[3](1) == doctest::Approx(-0.3));
  CHECK(ds.object_states(0)[0].size() == 2);  // object part only
}

TEST_CASE("success dataset: cap keeps the most recent entries") {
  SuccessDataset ds({0}, 3);
  for (int k = 0; k < 5; ++k) {
    Trajectory t;
    t.success = true;
    t.states = {Vec::Constant(1, k), Vec::Constant(1, k + 10)};
    t.actions = {Vec::Zero(1)};
    t.rewards = {1.0};
    ds.record(t);
  }
  REQUIRE(ds.size() == 3);
  CHECK(ds.object_states(0)[0](0) == 2.0);
  CHECK(ds.object_states(2)[0](0) == 4.0);
}

TEST_CASE("demos: expert rollouts end at the goal and seed the dataset") {
  auto env = make_env("peg-insert");
  auto demos = generate_demos(*env, 10, 0, env->spec().horizon);
  REQUIRE(demos.size() == 10);
  SuccessDataset ds(env->spec().object_indices, 50);
  for (const auto& traj : demos) {
    CHECK(traj.success);
    auto [r, success] = env->reward_oracle(env->object_part(traj.states.back()));
    CHECK(success);
    CHECK(r == 1.0);
    ds.record(traj);
  }
  CHECK(ds.size() == 10);
}

TEST_CASE("demos: ten successes per environment") {
  for (const auto& id : env_ids()) {
    auto env = make_env(id);
    auto demos = generate_demos(*env, 10, 42, env->spec().horizon);
    CHECK(demos.size() == 10);
    for (const auto& t : demos) CHECK(t.success);
  }
}

TEST_CASE("demos: save/load round trip is exact; k=0 gives an empty file") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "trdrl_demo_test";
  fs::create_directories(dir);
  auto env = make_env("door-outward-close");
  auto demos = generate_demos(*env, 3, 5, env->spec().horizon);
  std::string path = (dir / "demos.txt").string();
  save_demos(path, *env, demos);
  DemoFile file = load_demos(path);
  CHECK(file.env_id == "door-outward-close");
  CHECK(file.state_dim == 4);
  CHECK(file.action_dim == 3);
  REQUIRE(file.trajectories.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const Trajectory& a = demos[k];
    const Trajectory& b = file.trajectories[k];
    REQUIRE(a.length() == b.length());
    CHECK(a.success == b.success);
    for (int t = 0; t < a.length(); ++t) {
      CHECK((a.states[t] - b.states[t]).norm() == 0.0);
      CHECK((a.actions[t] - b.actions[t]).norm() == 0.0);
      CHECK(a.rewards[t] == b.rewards[t]);
    }
    CHECK((a.states.back() - b.states.back()).norm() == 0.0);
  }

  std::string empty_path = (dir / "empty.txt").string();
  save_demos(empty_path, *env, {});
  DemoFile empty = load_demos(empty_path);
  CHECK(empty.trajectories.empty());
  fs::remove_all(dir);
}

TEST_CASE("trajectory_transitions: done only on the final step") {
  auto env = make_env("peg-remove");
  auto demos = generate_demos(*env, 1, 9, env->spec().horizon);
  auto transitions = trajectory_transitions(demos[0]);
  REQUIRE(transitions.size() == static_cast<std::size_t>(demos[0].length()));
  for (std::size_t i = 0; i + 1 < transitions.size(); ++i) {
    CHECK(!transitions[i].done);
    CHECK(!transitions[i].success);
    CHECK(transitions[i].r == 0.0);  // sparse: unshaped rewards stored
  }
  CHECK(transitions.back().done);
  CHECK(transitions.back().success);
  CHECK(transitions.back().r == 1.0);
}
