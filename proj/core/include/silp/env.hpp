#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "silp/collision.hpp"
#include "silp/geometry.hpp"
#include "silp/kinematics.hpp"
#include "silp/rng.hpp"

namespace silp {

// Actions are per-joint increments in [-1, 1], scaled to radians by
// kActionScale (an exact power of two, so dividing a joint delta by it and
// multiplying back is lossless).
using Action = Eigen::VectorXd;

inline constexpr double kActionScale = 0.125;
inline constexpr double kCollisionReward = -10.0;
inline constexpr double kSuccessReward = 1.0;

// What a collision does to the episode:
//   kTerminate - episode ends; the collision transition is stored.
//   kDiscard   - arm stays put; the collision transition is dropped.
//   kKeep      - arm stays put; the collision transition is stored.
enum class CollisionMode { kTerminate = 0, kDiscard = 1, kKeep = 2 };

CollisionMode collision_mode_from_int(int v);
int to_int(CollisionMode m);

// Feature state of the goal-conditioned MDP: joint angles, end-effector
// position, obstacle box corners, goal point.
struct EnvState {
  JointConfig angles;
  Vec2 ee{0.0, 0.0};
  Aabb obstacle;
  Vec2 goal{0.0, 0.0};

  int dim() const { return static_cast<int>(angles.size()) + 8; }
  Eigen::VectorXd flatten() const;
  void flatten_into(Eigen::Ref<Eigen::VectorXd> out) const;
  static EnvState unflatten(const Eigen::VectorXd& v, int n_joints);
};

struct Transition {
  EnvState s;
  Action a;
  EnvState s_next;
  double r = 0.0;
  bool done = false;
  bool collision = false;
};

// A (possibly stateful) controller mapping states to actions.
using Policy = std::function<Action(const EnvState&)>;

// One episode's problem instance.
struct TaskSpec {
  JointConfig initial;
  Vec2 goal{0.0, 0.0};
  Aabb obstacle;
};

struct EnvConfig {
  ArmModel arm = ArmModel::default_planar();
  // Box the end effector and goal must lie in.
  Aabb workspace{{-0.9, -0.9}, {0.9, 0.9}};
  // Box the obstacle center is drawn from.
  Aabb obstacle_region{{-0.6, -0.6}, {0.6, 0.6}};
  double obstacle_width = 0.2;
  double obstacle_height = 0.3;
  double err = 0.05;  // success radius around the goal, meters
  int max_steps = 50;
  double inflate = kDefaultInflate;
  double step_size = kDefaultStepSize;
  CollisionMode collision_mode = CollisionMode::kKeep;
};

// The known kinematic transition and reward maps of the MDP. States are
// self-contained (they carry their own obstacle and goal), so these work on
// arbitrary stored transitions, not just the live episode.
class EnvModel {
 public:
  EnvModel() : EnvModel(EnvConfig{}) {}
  explicit EnvModel(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  const ArmModel& arm() const { return cfg_.arm; }

  EnvState make_state(const JointConfig& q, const Aabb& obstacle,
                      const Vec2& goal) const;

  // Deterministic transition map: q' = clip(q + kActionScale * a).
  EnvState step_state(const EnvState& s, const Action& a) const;

  // Reward of arriving in s_next: -10 on collision, +1 within err of the
  // goal, otherwise minus the end-effector/goal distance. The done flag
  // covers success and (under kTerminate) collision; step budgets are the
  // environment's business.
  std::pair<double, bool> reward(const EnvState& s,
                                 const EnvState& s_next) const;

  // Reward of executing a from s, sweeping the motion for collisions the
  // same way the environment does.
  double action_reward(const EnvState& s, const Action& a) const;

  bool state_in_collision(const EnvState& s) const;
  bool motion_in_collision(const EnvState& s, const EnvState& s_next) const;

 private:
  EnvConfig cfg_;
};

struct StepResult {
  EnvState s_next;
  double r = 0.0;
  bool done = false;
  bool collision = false;
};

// Episode machinery on top of EnvModel. Collisions never move the arm; under
// kTerminate they end the episode instead. Every step() call consumes one
// unit of the step budget, including rejected (colliding) attempts.
class ArmEnv {
 public:
  explicit ArmEnv(EnvConfig cfg = EnvConfig{});

  const EnvConfig& config() const { return model_.config(); }
  const EnvModel& model() const { return model_; }

  // Rejection-samples an episode: obstacle center in the obstacle region,
  // collision-free initial configuration, goal reached by some collision-free
  // configuration (so it is reachable by construction), and the distance
  // ordering  |ee0 - goal| > |ee0 - obstacle| > |obstacle - goal|  that puts
  // the obstacle roughly between start and goal. Throws after 10000 failed
  // attempts (the configured geometry admits no tasks).
  TaskSpec sample_task(Rng& rng) const;

  EnvState reset(const TaskSpec& task);
  StepResult step(const Action& a);

  const EnvState& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }

  // (configuration, reward) pairs seen this episode, colliding attempts
  // included; the exploration model is fitted on these.
  const std::vector<std::pair<JointConfig, double>>& episode_log() const {
    return log_;
  }

 private:
  EnvModel model_;
  TaskSpec task_;
  EnvState state_;
  int steps_ = 0;
  bool done_ = false;
  std::vector<std::pair<JointConfig, double>> log_;
};

}  // namespace silp
