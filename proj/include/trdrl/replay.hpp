#pragma once

#include "trdrl/env.hpp"

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace trdrl {

/// Unit of replay, augmentation and shaping. Rewards are stored
/// un-shaped; shaping happens on sampled copies only.
struct Transition {
  State s;
  Action a;
  double r = 0.0;
  State next;
  bool done = false;
  bool success = false;
  int task_id = 0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  /// n uniform draws with replacement; throws on an empty buffer.
  std::vector<Transition> sample(std::size_t n, std::mt19937& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t write_ = 0;
  std::uint64_t pushed_ = 0;
};

struct Trajectory {
  std::vector<State> states;  // length n+1
  std::vector<Action> actions;
  std::vector<double> rewards;
  bool success = false;
  int task_id = 0;

  int length() const { return static_cast<int>(actions.size()); }
};

/// Successful trajectories only, object parts pre-extracted for the
/// potential models. Capped at the most recent `cap` entries (0 keeps
/// everything).
class SuccessDataset {
 public:
  explicit SuccessDataset(std::vector<int> object_indices, std::size_t cap = 50);

  /// Stores the trajectory iff it ended in success; returns stored.
  bool record(const Trajectory& traj);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t skipped() const { return skipped_; }
  const std::vector<Vec>& object_states(std::size_t i) const { return entries_[i]; }

 private:
  std::vector<int> object_indices_;
  std::size_t cap_;
  std::deque<std::vector<Vec>> entries_;
  std::size_t skipped_ = 0;
};

/// Rolls the scripted expert until `count` successful trajectories are
/// collected. Throws if the expert ever fails within the horizon.
std::vector<Trajectory> generate_demos(const Env& env, int count, std::uint64_t seed,
                                       int horizon);

void save_demos(const std::string& path, const Env& env,
                const std::vector<Trajectory>& demos);

struct DemoFile {
  std::string env_id;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Trajectory> trajectories;
};
DemoFile load_demos(const std::string& path);

/// Flatten a trajectory into transitions (done on success or at the
/// final stored step).
std::vector<Transition> trajectory_transitions(const Trajectory& traj);

}  // namespace trdrl
