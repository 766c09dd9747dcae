#pragma once

#include <Eigen/Core>
#include <vector>

#include "silp/geometry.hpp"

namespace silp {

using JointConfig = Eigen::VectorXd;

// Planar chain of revolute joints rooted at the origin.
struct ArmModel {
  Eigen::VectorXd link_lengths;  // meters
  Eigen::VectorXd joint_lo;      // radians
  Eigen::VectorXd joint_hi;

  // Three links (0.4, 0.3, 0.2 m), every joint limited to [-pi, pi].
  static ArmModel default_planar();

  int n_joints() const { return static_cast<int>(link_lengths.size()); }
  double reach() const { return link_lengths.sum(); }

  bool within_limits(const JointConfig& q, double tol = 1e-9) const;
  JointConfig clip(const JointConfig& q) const;
};

struct FkResult {
  Vec2 ee{0.0, 0.0};
  std::vector<Segment> links;  // one segment per link, base to tip
};

// Cumulative-angle forward kinematics. Throws std::domain_error when q has
// the wrong size or violates the joint limits.
FkResult forward_kinematics(const ArmModel& arm, const JointConfig& q);

// End-effector position only.
Vec2 end_effector(const ArmModel& arm, const JointConfig& q);

}  // namespace silp
