#include "silp/env.hpp"

#include <stdexcept>

namespace silp {

CollisionMode collision_mode_from_int(int v) {
  switch (v) {
    case 0: return CollisionMode::kTerminate;
    case 1: return CollisionMode::kDiscard;
    case 2: return CollisionMode::kKeep;
    default: throw std::invalid_argument("collision mode must be 0, 1 or 2");
  }
}

int to_int(CollisionMode m) { return static_cast<int>(m); }

Eigen::VectorXd EnvState::flatten() const {
  Eigen::VectorXd v(dim());
  flatten_into(v);
  return v;
}

void EnvState::flatten_into(Eigen::Ref<Eigen::VectorXd> out) const {
  const int n = static_cast<int>(angles.size());
  out.head(n) = angles;
  out[n] = ee.x();
  out[n + 1] = ee.y();
  out[n + 2] = obstacle.min.x();
  out[n + 3] = obstacle.min.y();
  out[n + 4] = obstacle.max.x();
  out[n + 5] = obstacle.max.y();
  out[n + 6] = goal.x();
  out[n + 7] = goal.y();
}

EnvState EnvState::unflatten(const Eigen::VectorXd& v, int n_joints) {
  if (v.size() != n_joints + 8)
    throw std::invalid_argument("EnvState::unflatten: size mismatch");
  EnvState s;
  s.angles = v.head(n_joints);
  s.ee = Vec2(v[n_joints], v[n_joints + 1]);
  s.obstacle.min = Vec2(v[n_joints + 2], v[n_joints + 3]);
  s.obstacle.max = Vec2(v[n_joints + 4], v[n_joints + 5]);
  s.goal = Vec2(v[n_joints + 6], v[n_joints + 7]);
  return s;
}

EnvModel::EnvModel(EnvConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.err <= 0.0) throw std::invalid_argument("EnvConfig: err must be > 0");
  if (cfg_.max_steps <= 0)
    throw std::invalid_argument("EnvConfig: max_steps must be > 0");
  if (!cfg_.workspace.valid() || !cfg_.obstacle_region.valid())
    throw std::invalid_argument("EnvConfig: invalid region box");
}

EnvState EnvModel::make_state(const JointConfig& q, const Aabb& obstacle,
                              const Vec2& goal) const {
  EnvState s;
  s.angles = q;
  s.ee = end_effector(cfg_.arm, q);
  s.obstacle = obstacle;
  s.goal = goal;
  return s;
}

EnvState EnvModel::step_state(const EnvState& s, const Action& a) const {
  const JointConfig q = cfg_.arm.clip(s.angles + kActionScale * a);
  return make_state(q, s.obstacle, s.goal);
}

std::pair<double, bool> EnvModel::reward(const EnvState& s,
                                         const EnvState& s_next) const {
  (void)s;
  if (state_in_collision(s_next))
    return {kCollisionReward, cfg_.collision_mode == CollisionMode::kTerminate};
  const double dist = (s_next.ee - s_next.goal).norm();
  if (dist < cfg_.err) return {kSuccessReward, true};
  return {-dist, false};
}

double EnvModel::action_reward(const EnvState& s, const Action& a) const {
  const EnvState s_next = step_state(s, a);
  if (motion_in_collision(s, s_next)) return kCollisionReward;
  const double dist = (s_next.ee - s_next.goal).norm();
  if (dist < cfg_.err) return kSuccessReward;
  return -dist;
}

bool EnvModel::state_in_collision(const EnvState& s) const {
  return config_in_collision(cfg_.arm, s.angles, s.obstacle, cfg_.inflate);
}

bool EnvModel::motion_in_collision(const EnvState& s,
                                   const EnvState& s_next) const {
  return !edge_collision_free(cfg_.arm, s.angles, s_next.angles, s.obstacle,
                              cfg_.step_size, cfg_.inflate);
}

ArmEnv::ArmEnv(EnvConfig cfg) : model_(std::move(cfg)) {}

TaskSpec ArmEnv::sample_task(Rng& rng) const {
  const EnvConfig& cfg = model_.config();
  const ArmModel& arm = cfg.arm;
  const int n = arm.n_joints();

  const auto sample_config = [&](Rng& r) {
    JointConfig q(n);
    for (int i = 0; i < n; ++i)
      q[i] = r.uniform(arm.joint_lo[i], arm.joint_hi[i]);
    return q;
  };

  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Vec2 center(
        rng.uniform(cfg.obstacle_region.min.x(), cfg.obstacle_region.max.x()),
        rng.uniform(cfg.obstacle_region.min.y(), cfg.obstacle_region.max.y()));
    const Aabb obstacle =
        Aabb::from_center(center, cfg.obstacle_width, cfg.obstacle_height);

    const JointConfig q0 = sample_config(rng);
    if (config_in_collision(arm, q0, obstacle, cfg.inflate)) continue;
    const Vec2 ee0 = end_effector(arm, q0);
    if (!cfg.workspace.contains(ee0)) continue;

    // Realizing the goal as the end effector of a sampled collision-free
    // configuration makes reachability true by construction.
    const JointConfig qg = sample_config(rng);
    if (config_in_collision(arm, qg, obstacle, cfg.inflate)) continue;
    const Vec2 goal = end_effector(arm, qg);
    if (!cfg.workspace.contains(goal)) continue;

    const double d_start_goal = (ee0 - goal).norm();
    const double d_start_obs = (ee0 - center).norm();
    const double d_obs_goal = (center - goal).norm();
    if (!(d_start_goal > d_start_obs && d_start_obs > d_obs_goal)) continue;

    return TaskSpec{q0, goal, obstacle};
  }
  throw std::runtime_error(
      "sample_task: no valid task found in 10000 attempts; "
      "check workspace/obstacle configuration");
}

EnvState ArmEnv::reset(const TaskSpec& task) {
  const EnvConfig& cfg = model_.config();
  if (task.initial.size() != cfg.arm.n_joints())
    throw std::invalid_argument("ArmEnv::reset: initial config size mismatch");
  if (!cfg.arm.within_limits(task.initial))
    throw std::invalid_argument("ArmEnv::reset: initial config out of limits");
  if (config_in_collision(cfg.arm, task.initial, task.obstacle, cfg.inflate))
    throw std::invalid_argument(
        "ArmEnv::reset: initial configuration is in collision");
  task_ = task;
  state_ = model_.make_state(task.initial, task.obstacle, task.goal);
  steps_ = 0;
  done_ = false;
  log_.clear();
  return state_;
}

StepResult ArmEnv::step(const Action& a) {
  if (done_) throw std::logic_error("ArmEnv::step called on finished episode");
  if (a.size() != state_.angles.size())
    throw std::invalid_argument("ArmEnv::step: action size mismatch");

  ++steps_;
  const EnvConfig& cfg = model_.config();
  const EnvState proposed = model_.step_state(state_, a);
  const bool collision = model_.motion_in_collision(state_, proposed);

  StepResult res;
  res.collision = collision;
  if (collision) {
    res.s_next = proposed;
    res.r = kCollisionReward;
    done_ = cfg.collision_mode == CollisionMode::kTerminate ||
            steps_ >= cfg.max_steps;
    res.done = done_;
    log_.emplace_back(proposed.angles, res.r);
    // The arm stays where it was; state_ is unchanged.
    return res;
  }

  const auto [r, reached] = model_.reward(state_, proposed);
  res.s_next = proposed;
  res.r = r;
  done_ = reached || steps_ >= cfg.max_steps;
  res.done = done_;
  log_.emplace_back(proposed.angles, r);
  state_ = proposed;
  return res;
}

}  // namespace silp
