#include "silp/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace silp {

ArmModel ArmModel::default_planar() {
  ArmModel arm;
  arm.link_lengths = Eigen::Vector3d(0.4, 0.3, 0.2);
  arm.joint_lo = Eigen::Vector3d::Constant(-M_PI);
  arm.joint_hi = Eigen::Vector3d::Constant(M_PI);
  return arm;
}

bool ArmModel::within_limits(const JointConfig& q, double tol) const {
  if (q.size() != link_lengths.size()) return false;
  return (q.array() >= joint_lo.array() - tol).all() &&
         (q.array() <= joint_hi.array() + tol).all();
}

JointConfig ArmModel::clip(const JointConfig& q) const {
  return q.cwiseMax(joint_lo).cwiseMin(joint_hi);
}

FkResult forward_kinematics(const ArmModel& arm, const JointConfig& q) {
  if (q.size() != arm.link_lengths.size())
    throw std::domain_error("forward_kinematics: joint vector size mismatch");
  if (!arm.within_limits(q))
    throw std::domain_error("forward_kinematics: joint limits violated");

  FkResult out;
  out.links.reserve(arm.n_joints());
  Vec2 p(0.0, 0.0);
  double angle = 0.0;
  for (int i = 0; i < arm.n_joints(); ++i) {
    angle += q[i];
    const Vec2 next =
        p + arm.link_lengths[i] * Vec2(std::cos(angle), std::sin(angle));
    out.links.push_back({p, next});
    p = next;
  }
  out.ee = p;
  return out;
}

Vec2 end_effector(const ArmModel& arm, const JointConfig& q) {
  return forward_kinematics(arm, q).ee;
}

}  // namespace silp
