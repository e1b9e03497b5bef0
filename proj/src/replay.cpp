#include "trdrl/replay.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace trdrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  data_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[write_] = t;
  }
  write_ = (write_ + 1) % capacity_;
  ++pushed_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer: sample from empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(data_[pick(rng)]);
  return out;
}

SuccessDataset::SuccessDataset(std::vector<int> object_indices, std::size_t cap)
    : object_indices_(std::move(object_indices)), cap_(cap) {}

bool SuccessDataset::record(const Trajectory& traj) {
  if (!traj.success) {
    ++skipped_;
    return false;
  }
  if (traj.length() < 1) {
    ++skipped_;
    return false;
  }
  std::vector<Vec> xs;
  xs.reserve(traj.states.size());
  for (const State& s : traj.states) {
    Vec x(object_indices_.size());
    for (std::size_t i = 0; i < object_indices_.size(); ++i)
      x(static_cast<Eigen::Index>(i)) = s(object_indices_[i]);
    xs.push_back(std::move(x));
  }
  entries_.push_back(std::move(xs));
  if (cap_ > 0 && entries_.size() > cap_) entries_.pop_front();
  return true;
}

std::vector<Trajectory> generate_demos(const Env& env, int count, std::uint64_t seed,
                                       int horizon) {
  std::vector<Trajectory> demos;
  std::uint64_t episode_seed = seed;
  for (int k = 0; k < count; ++k) {
    Trajectory traj;
    traj.task_id = env.spec().reversed ? 1 : 0;
    State s = env.reset(episode_seed++);
    traj.states.push_back(s);
    bool done = false;
    for (int t = 0; t < horizon && !done; ++t) {
      Action a = env.expert_action(s);
      StepOut out = env.step(s, a);
      traj.actions.push_back(a);
      traj.rewards.push_back(out.reward);
      traj.states.push_back(out.next);
      traj.success = out.success;
      done = out.success;
      s = out.next;
    }
    if (!traj.success)
      throw std::runtime_error("generate_demos: scripted expert failed on " + env.spec().id +
                               " (seed " + std::to_string(episode_seed - 1) + ")");
    demos.push_back(std::move(traj));
  }
  return demos;
}

void save_demos(const std::string& path, const Env& env,
                const std::vector<Trajectory>& demos) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_demos: cannot open " + path);
  os << std::setprecision(17);
  os << "demos " << env.spec().id << ' ' << env.spec().state_dim << ' '
     << env.spec().action_dim << ' ' << demos.size() << '\n';
  for (const Trajectory& traj : demos) {
    os << "traj " << traj.length() << ' ' << (traj.success ? 1 : 0) << ' ' << traj.task_id
       << '\n';
    for (int t = 0; t < traj.length(); ++t) {
      for (Eigen::Index i = 0; i < traj.states[t].size(); ++i) os << traj.states[t](i) << ' ';
      for (Eigen::Index i = 0; i < traj.actions[t].size(); ++i) os << traj.actions[t](i) << ' ';
      os << traj.rewards[t];
      os << '\n';
    }
    // trailing state
    for (Eigen::Index i = 0; i < traj.states.back().size(); ++i) {
      os << traj.states.back()(i) << (i + 1 < traj.states.back().size() ? ' ' : '\n');
    }
  }
}

DemoFile load_demos(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_demos: cannot open " + path);
  std::string tag;
  DemoFile file;
  std::size_t count = 0;
  is >> tag >> file.env_id >> file.state_dim >> file.action_dim >> count;
  if (tag != "demos") throw std::runtime_error("load_demos: bad header in " + path);
  for (std::size_t k = 0; k < count; ++k) {
    int len = 0, success = 0, task = 0;
    is >> tag >> len >> success >> task;
    if (tag != "traj") throw std::runtime_error("load_demos: bad trajectory header");
    Trajectory traj;
    traj.success = success != 0;
    traj.task_id = task;
    for (int t = 0; t < len; ++t) {
      State s(file.state_dim);
      for (int i = 0; i < file.state_dim; ++i) is >> s(i);
      Action a(file.action_dim);
      for (int i = 0; i < file.action_dim; ++i) is >> a(i);
      double r;
      is >> r;
      traj.states.push_back(s);
      traj.actions.push_back(a);
      traj.rewards.push_back(r);
    }
    State last(file.state_dim);
    for (int i = 0; i < file.state_dim; ++i) is >> last(i);
    traj.states.push_back(last);
    file.trajectories.push_back(std::move(traj));
  }
  if (!is) throw std::runtime_error("load_demos: truncated file " + path);
  return file;
}

std::vector<Transition> trajectory_transitions(const Trajectory& traj) {
  std::vector<Transition> out;
  int n = traj.length();
  for (int t = 0; t < n; ++t) {
    Transition tr;
    tr.s = traj.states[t];
    tr.a = traj.actions[t];
    tr.r = traj.rewards[t];
    tr.next = traj.states[t + 1];
    bool last = (t == n - 1);
    tr.success = last && traj.success;
    tr.done = last;
    tr.task_id = traj.task_id;
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace trdrl
