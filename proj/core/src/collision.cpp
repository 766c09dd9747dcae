#include "silp/collision.hpp"

#include <cmath>
#include <stdexcept>

namespace silp {

bool config_in_collision(const ArmModel& arm, const JointConfig& q,
                         const Aabb& obstacle, double inflate) {
  const FkResult fk = forward_kinematics(arm, q);
  for (const Segment& link : fk.links) {
    if (segment_intersects_aabb(link, obstacle, inflate)) return true;
  }
  return false;
}

bool edge_collision_free(const ArmModel& arm, const JointConfig& qa,
                         const JointConfig& qb, const Aabb& obstacle,
                         double step_size, double inflate) {
  if (step_size <= 0.0)
    throw std::invalid_argument("edge_collision_free: step_size must be > 0");

  const double max_delta = (qb - qa).cwiseAbs().maxCoeff();
  if (max_delta == 0.0) return !config_in_collision(arm, qa, obstacle, inflate);

  // Power-of-two segment count: the interpolants of a coarser grid are a
  // subset of every finer grid, evaluated with identical arithmetic, so
  // refinement can only add collision findings, never lose them.
  const double needed = std::ceil(max_delta / step_size);
  std::size_t n = 1;
  while (static_cast<double>(n) < needed) n *= 2;

  const JointConfig delta = qb - qa;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    const JointConfig q = qa + t * delta;
    if (config_in_collision(arm, q, obstacle, inflate)) return false;
  }
  return true;
}

}  // namespace silp
