#pragma once

#include "trdrl/nn.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace trdrl {

using State = Vec;
using Action = Vec;

/// Static task description. Full state s is the concatenation of the
/// object part x (indices in object_indices) and the agent part y.
struct EnvSpec {
  std::string id;
  std::string pair_id;
  bool reversed = false;  // second task of the pair
  int state_dim = 0;
  int action_dim = 0;
  Vec s_min, s_max;
  int horizon = 100;
  std::vector<int> object_indices;

  double range_norm() const { return (s_max - s_min).norm(); }
  std::string to_text() const;
};

struct StepOut {
  State next;
  double reward = 0.0;
  bool success = false;
};

/// Deterministic, seedable environment. `step` is a pure function of
/// (state, action); episode bookkeeping (horizon, done) lives with the
/// caller so transitions can be replayed exactly.
class Env {
 public:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  State reset(std::uint64_t seed) const;
  StepOut step(const State& s, const Action& a) const;

  Vec object_part(const State& s) const;

  /// Same goal predicate as `step`, exposed state-only for relabeling.
  /// Throws if x is outside the object-state bounds.
  virtual std::pair<double, bool> reward_oracle(const Vec& x) const = 0;

  /// Proportional controller that solves the task from every reset state.
  virtual Action expert_action(const State& s) const = 0;

  /// Ground truth for tests and filter evaluation: true iff some action
  /// takes `next` back to `s` under the true dynamics (analytic reverse
  /// candidates for the attached/grasping phases, a dense action grid
  /// otherwise).
  bool analytic_reversibility_label(const State& s, const Action& a,
                                    const State& next, double tol = 1e-6) const;

 protected:
  virtual State do_reset(std::mt19937& rng) const = 0;
  virtual StepOut do_step(const State& s, const Action& a) const = 0;
  virtual std::vector<Action> reverse_candidates(const State& s, const Action& a,
                                                 const State& next) const = 0;

  void check_object_bounds(const Vec& x) const;

  EnvSpec spec_;
};

/// Peg carried by the effector; while attached the peg displacement
/// equals the effector displacement exactly, so every transition is
/// analytically reversible.
class PegSlotEnv : public Env {
 public:
  explicit PegSlotEnv(bool remove_task);

  std::pair<double, bool> reward_oracle(const Vec& x) const override;
  Action expert_action(const State& s) const override;

  static constexpr double kMoveScale = 0.1;
  static constexpr double kGraspRadius = 0.15;
  static constexpr double kGoalTol = 0.12;

  Vec goal_pos() const { return goal_; }

 protected:
  State do_reset(std::mt19937& rng) const override;
  StepOut do_step(const State& s, const Action& a) const override;
  std::vector<Action> reverse_candidates(const State& s, const Action& a,
                                         const State& next) const override;

 private:
  bool remove_task_;
  Vec slot_, home_, goal_, start_;
};

/// Planar door on a hinge at the origin. The handle sits at the free
/// end (radius L). The door angle changes while the handle is grasped
/// (both directions) and, in the inward variant, when the effector
/// presses on the door face from the opening side (angle decreases
/// only). Invariant: grasp flag 1 implies the effector is exactly on
/// the handle.
class HingeDoorEnv : public Env {
 public:
  HingeDoorEnv(bool inward, bool close_task);

  std::pair<double, bool> reward_oracle(const Vec& x) const override;
  Action expert_action(const State& s) const override;

  static constexpr double kMoveScale = 0.1;
  static constexpr double kGraspRadius = 0.15;
  static constexpr double kDoorLength = 1.0;
  static constexpr double kContactBand = 0.12;  // arc-length width of the face
  static constexpr double kContactRMin = 0.4;   // pushes below this radius slip off
  static constexpr double kGoalMargin = 0.2;

  Vec handle(double theta) const;
  bool inward() const { return inward_; }

 protected:
  State do_reset(std::mt19937& rng) const override;
  StepOut do_step(const State& s, const Action& a) const override;
  std::vector<Action> reverse_candidates(const State& s, const Action& a,
                                         const State& next) const override;

 private:
  bool inward_;
  bool close_task_;
};

std::unique_ptr<Env> make_env(const std::string& id);
const std::vector<std::string>& env_ids();
const std::vector<std::string>& pair_ids();

/// Pair id -> (task A id, task B id), e.g. "peg" -> (peg-insert, peg-remove).
std::pair<std::string, std::string> pair_tasks(const std::string& pair_id);

}  // namespace trdrl
