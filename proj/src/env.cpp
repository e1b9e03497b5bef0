#include "trdrl/env.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace trdrl {

std::string EnvSpec::to_text() const {
  std::ostringstream os;
  os << "env " << id << "\n";
  os << "pair " << pair_id << (reversed ? " (reversed)" : " (forward)") << "\n";
  os << "state_dim " << state_dim << "\n";
  os << "action_dim " << action_dim << "\n";
  os << "horizon " << horizon << "\n";
  os << "s_min";
  for (Eigen::Index i = 0; i < s_min.size(); ++i) os << ' ' << s_min(i);
  os << "\ns_max";
  for (Eigen::Index i = 0; i < s_max.size(); ++i) os << ' ' << s_max(i);
  os << "\nobject_indices";
  for (int i : object_indices) os << ' ' << i;
  os << "\n";
  return os.str();
}

State Env::reset(std::uint64_t seed) const {
  std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  return do_reset(rng);
}

StepOut Env::step(const State& s, const Action& a) const {
  if (s.size() != spec_.state_dim)
    throw std::invalid_argument("step: bad state dim for " + spec_.id);
  if (a.size() != spec_.action_dim)
    throw std::invalid_argument("step: bad action dim for " + spec_.id);
  Action clamped = a.cwiseMax(-1.0).cwiseMin(1.0);
  return do_step(s, clamped);
}

Vec Env::object_part(const State& s) const {
  Vec x(spec_.object_indices.size());
  for (std::size_t i = 0; i < spec_.object_indices.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = s(spec_.object_indices[i]);
  return x;
}

void Env::check_object_bounds(const Vec& x) const {
  constexpr double eps = 1e-9;
  for (std::size_t i = 0; i < spec_.object_indices.size(); ++i) {
    int idx = spec_.object_indices[i];
    double v = x(static_cast<Eigen::Index>(i));
    if (v < spec_.s_min(idx) - eps || v > spec_.s_max(idx) + eps)
      throw std::invalid_argument("reward_oracle: object state out of bounds for " + spec_.id);
  }
}

bool Env::analytic_reversibility_label(const State& s, const Action& a,
                                       const State& next, double tol) const {
  auto replays = [&](const Action& cand) {
    StepOut out = step(next, cand);
    return (out.next - s).lpNorm<Eigen::Infinity>() <= tol;
  };
  for (const Action& cand : reverse_candidates(s, a, next))
    if (replays(cand)) return true;
  // Dense action-grid fallback.
  Action cand(spec_.action_dim);
  for (int gi = 0; gi <= 20; ++gi) {
    cand(0) = -1.0 + 0.1 * gi;
    for (int gj = 0; gj <= 20; ++gj) {
      cand(1) = -1.0 + 0.1 * gj;
      for (double g : {-1.0, 0.0, 1.0}) {
        cand(2) = g;
        if (replays(cand)) return true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// PegSlot

namespace {
double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

PegSlotEnv::PegSlotEnv(bool remove_task) : Env({}), remove_task_(remove_task) {
  slot_ = Vec(2);
  slot_ << 0.4, 0.0;
  home_ = Vec(2);
  home_ << -0.4, 0.0;
  goal_ = remove_task_ ? home_ : slot_;
  start_ = remove_task_ ? slot_ : home_;

  spec_.id = remove_task_ ? "peg-remove" : "peg-insert";
  spec_.pair_id = "peg";
  spec_.reversed = remove_task_;
  spec_.state_dim = 5;  // peg(2), effector(2), grasp flag
  spec_.action_dim = 3;
  spec_.s_min = Vec(5);
  spec_.s_min << -1, -1, -1, -1, 0;
  spec_.s_max = Vec(5);
  spec_.s_max << 1, 1, 1, 1, 1;
  spec_.horizon = 100;
  spec_.object_indices = {0, 1};
}

State PegSlotEnv::do_reset(std::mt19937& rng) const {
  std::uniform_real_distribution<double> peg_noise(-0.05, 0.05);
  std::uniform_real_distribution<double> eff_pos(-0.55, 0.55);
  State s(5);
  s(0) = start_(0) + peg_noise(rng);
  s(1) = start_(1) + peg_noise(rng);
  s(2) = eff_pos(rng);
  s(3) = eff_pos(rng);
  s(4) = 0.0;
  return s;
}

std::pair<double, bool> PegSlotEnv::reward_oracle(const Vec& x) const {
  if (x.size() != 2) throw std::invalid_argument("reward_oracle: peg object state is 2-d");
  check_object_bounds(x);
  bool success = (x - goal_).norm() <= kGoalTol;
  return {success ? 1.0 : 0.0, success};
}

StepOut PegSlotEnv::do_step(const State& s, const Action& a) const {
  Eigen::Vector2d peg = s.head<2>();
  Eigen::Vector2d eff = s.segment<2>(2);
  bool carrying = s(4) > 0.5 && a(2) > 0.0;

  Eigen::Vector2d d = a.head<2>() * kMoveScale;
  for (int i = 0; i < 2; ++i) {
    double lo = -1.0 - eff(i), hi = 1.0 - eff(i);
    if (carrying) {
      lo = std::max(lo, -1.0 - peg(i));
      hi = std::min(hi, 1.0 - peg(i));
    }
    d(i) = clampd(d(i), lo, hi);
  }
  Eigen::Vector2d eff2 = eff + d;
  Eigen::Vector2d peg2 = carrying ? Eigen::Vector2d(peg + d) : peg;
  double flag2 = (a(2) > 0.0 && (eff2 - peg2).norm() <= kGraspRadius) ? 1.0 : 0.0;

  StepOut out;
  out.next = State(5);
  out.next << peg2(0), peg2(1), eff2(0), eff2(1), flag2;
  auto [r, success] = reward_oracle(out.next.head(2));
  out.reward = r;
  out.success = success;
  return out;
}

Action PegSlotEnv::expert_action(const State& s) const {
  Eigen::Vector2d peg = s.head<2>();
  Eigen::Vector2d eff = s.segment<2>(2);
  Eigen::Vector2d target = (s(4) > 0.5) ? Eigen::Vector2d(eff + (goal_ - peg)) : peg;
  Action a(3);
  a(0) = clampd((target(0) - eff(0)) / kMoveScale, -1.0, 1.0);
  a(1) = clampd((target(1) - eff(1)) / kMoveScale, -1.0, 1.0);
  a(2) = 1.0;
  return a;
}

std::vector<Action> PegSlotEnv::reverse_candidates(const State& s, const Action&,
                                                   const State& next) const {
  Eigen::Vector2d back = (s.segment<2>(2) - next.segment<2>(2)) / kMoveScale;
  std::vector<Action> cands;
  for (double g : {1.0, -1.0}) {
    Action c(3);
    c << clampd(back(0), -1.0, 1.0), clampd(back(1), -1.0, 1.0), g;
    cands.push_back(c);
  }
  return cands;
}

// ---------------------------------------------------------------------------
// HingeDoor

HingeDoorEnv::HingeDoorEnv(bool inward, bool close_task)
    : Env({}), inward_(inward), close_task_(close_task) {
  spec_.id = std::string("door-") + (inward ? "inward" : "outward") + "-" +
             (close_task ? "close" : "open");
  spec_.pair_id = std::string("door-") + (inward ? "inward" : "outward");
  spec_.reversed = close_task;
  spec_.state_dim = 4;  // theta, effector(2), grasp flag
  spec_.action_dim = 3;
  spec_.s_min = Vec(4);
  spec_.s_min << 0, -1.2, -1.2, 0;
  spec_.s_max = Vec(4);
  spec_.s_max << M_PI / 2, 1.2, 1.2, 1;
  spec_.horizon = 100;
  spec_.object_indices = {0};
}

Vec HingeDoorEnv::handle(double theta) const {
  Vec h(2);
  h << kDoorLength * std::cos(theta), kDoorLength * std::sin(theta);
  return h;
}

State HingeDoorEnv::do_reset(std::mt19937& rng) const {
  std::uniform_real_distribution<double> eff_pos(-0.6, 0.6);
  State s(4);
  s(0) = close_task_ ? M_PI / 2 : 0.0;
  s(1) = eff_pos(rng);
  s(2) = eff_pos(rng);
  s(3) = 0.0;
  return s;
}

std::pair<double, bool> HingeDoorEnv::reward_oracle(const Vec& x) const {
  if (x.size() != 1) throw std::invalid_argument("reward_oracle: door object state is 1-d");
  check_object_bounds(x);
  bool success = close_task_ ? (x(0) <= kGoalMargin) : (x(0) >= M_PI / 2 - kGoalMargin);
  return {success ? 1.0 : 0.0, success};
}

StepOut HingeDoorEnv::do_step(const State& s, const Action& a) const {
  double theta = s(0);
  Eigen::Vector2d eff = s.segment<2>(1);
  bool carrying = s(3) > 0.5 && a(2) > 0.0;
  Eigen::Vector2d d = a.head<2>() * kMoveScale;

  double theta2 = theta;
  Eigen::Vector2d eff2;
  double flag2 = 0.0;

  if (carrying) {
    // Handle tracks the effector tangentially, angular speed capped.
    Eigen::Vector2d tangent(-std::sin(theta), std::cos(theta));
    double dtheta = clampd(d.dot(tangent), -kMoveScale, kMoveScale) / kDoorLength;
    theta2 = clampd(theta + dtheta, 0.0, M_PI / 2);
    eff2 = handle(theta2).head<2>();
    flag2 = 1.0;
  } else {
    Eigen::Vector2d moved = eff + d;
    moved(0) = clampd(moved(0), -1.2, 1.2);
    moved(1) = clampd(moved(1), -1.2, 1.2);
    eff2 = moved;
    if (inward_) {
      double r = eff.norm();
      double phi = std::atan2(eff(1), eff(0));
      Eigen::Vector2d normal(-std::sin(theta), std::cos(theta));
      bool in_band = r >= kContactRMin && r <= kDoorLength && phi >= theta &&
                     (phi - theta) * r <= kContactBand;
      double push = d.dot(normal);
      if (in_band && push < 0.0) {
        // Pressing on the face from the opening side closes the door;
        // the effector sweeps with it and slides radially.
        double dtheta = clampd(push, -kMoveScale, 0.0) / r;
        theta2 = std::max(theta + dtheta, 0.0);
        Eigen::Vector2d radial(std::cos(phi), std::sin(phi));
        double r2 = clampd(r + d.dot(radial), 0.05, 1.2);
        double phi2 = theta2 + (phi - theta);
        eff2 << r2 * std::cos(phi2), r2 * std::sin(phi2);
      }
    }
    if (a(2) > 0.0 && (eff2 - handle(theta2).head<2>()).norm() <= kGraspRadius) {
      flag2 = 1.0;
      eff2 = handle(theta2).head<2>();  // hand closes on the handle
    }
  }

  StepOut out;
  out.next = State(4);
  out.next << theta2, eff2(0), eff2(1), flag2;
  Vec x(1);
  x << theta2;
  auto [r, success] = reward_oracle(x);
  out.reward = r;
  out.success = success;
  return out;
}

Action HingeDoorEnv::expert_action(const State& s) const {
  double theta = s(0);
  Eigen::Vector2d eff = s.segment<2>(1);
  Action a = Action::Zero(3);

  if (inward_ && close_task_) {
    // Close by pushing: settle into the contact band, then press.
    double r_c = 0.8;
    double band_phi = 0.5 * kContactBand / r_c;
    double r = eff.norm();
    double phi = std::atan2(eff(1), eff(0));
    bool in_band = r >= kContactRMin && r <= kDoorLength && phi >= theta &&
                   (phi - theta) * r <= kContactBand;
    a(2) = -1.0;
    if (in_band) {
      Eigen::Vector2d normal(-std::sin(theta), std::cos(theta));
      a(0) = -normal(0);
      a(1) = -normal(1);
    } else {
      Eigen::Vector2d target(r_c * std::cos(theta + band_phi), r_c * std::sin(theta + band_phi));
      a(0) = clampd((target(0) - eff(0)) / kMoveScale, -1.0, 1.0);
      a(1) = clampd((target(1) - eff(1)) / kMoveScale, -1.0, 1.0);
    }
    return a;
  }

  // Grasping controller: approach the handle, then pull along the arc.
  if (s(3) > 0.5) {
    double goal_theta = close_task_ ? 0.0 : M_PI / 2;
    Eigen::Vector2d tangent(-std::sin(theta), std::cos(theta));
    double c = clampd((goal_theta - theta) * kDoorLength / kMoveScale, -1.0, 1.0);
    a(0) = tangent(0) * c;
    a(1) = tangent(1) * c;
    a(2) = 1.0;
  } else {
    Vec h = handle(theta);
    a(0) = clampd((h(0) - eff(0)) / kMoveScale, -1.0, 1.0);
    a(1) = clampd((h(1) - eff(1)) / kMoveScale, -1.0, 1.0);
    a(2) = 1.0;
  }
  return a;
}

std::vector<Action> HingeDoorEnv::reverse_candidates(const State& s, const Action&,
                                                     const State& next) const {
  std::vector<Action> cands;
  Eigen::Vector2d back = (s.segment<2>(1) - next.segment<2>(1)) / kMoveScale;
  for (double g : {-1.0, 1.0}) {
    Action c(3);
    c << clampd(back(0), -1.0, 1.0), clampd(back(1), -1.0, 1.0), g;
    cands.push_back(c);
  }
  if (s(3) > 0.5 && next(3) > 0.5) {
    // Grasping phase: reverse the tangential sweep.
    double theta_next = next(0);
    Eigen::Vector2d tangent(-std::sin(theta_next), std::cos(theta_next));
    double c = clampd((s(0) - theta_next) * kDoorLength / kMoveScale, -1.0, 1.0);
    Action cand(3);
    cand << tangent(0) * c, tangent(1) * c, 1.0;
    cands.push_back(cand);
  }
  return cands;
}

// ---------------------------------------------------------------------------
// Registry

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "peg-insert") return std::make_unique<PegSlotEnv>(false);
  if (id == "peg-remove") return std::make_unique<PegSlotEnv>(true);
  if (id == "door-inward-open") return std::make_unique<HingeDoorEnv>(true, false);
  if (id == "door-inward-close") return std::make_unique<HingeDoorEnv>(true, true);
  if (id == "door-outward-open") return std::make_unique<HingeDoorEnv>(false, false);
  if (id == "door-outward-close") return std::make_unique<HingeDoorEnv>(false, true);
  throw std::invalid_argument("unknown environment id: " + id);
}

const std::vector<std::string>& env_ids() {
  static const std::vector<std::string> ids = {
      "door-inward-open", "door-inward-close", "door-outward-open",
      "door-outward-close", "peg-insert", "peg-remove"};
  return ids;
}

const std::vector<std::string>& pair_ids() {
  static const std::vector<std::string> ids = {"door-inward", "door-outward", "peg"};
  return ids;
}

std::pair<std::string, std::string> pair_tasks(const std::string& pair_id) {
  if (pair_id == "peg") return {"peg-insert", "peg-remove"};
  if (pair_id == "door-inward") return {"door-inward-open", "door-inward-close"};
  if (pair_id == "door-outward") return {"door-outward-open", "door-outward-close"};
  throw std::invalid_argument("unknown pair id: " + pair_id);
}

}  // namespace trdrl
