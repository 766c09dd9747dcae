#pragma once

#include "silp/geometry.hpp"
#include "silp/kinematics.hpp"

namespace silp {

// Arm thickness: link segments are tested against the obstacle box inflated
// by this radius.
inline constexpr double kDefaultInflate = 0.02;

// Maximum per-joint increment (radians) between interpolants when sweeping a
// straight joint-space segment.
inline constexpr double kDefaultStepSize = 0.05;

// True iff any link of the arm at q touches the inflated obstacle box.
bool config_in_collision(const ArmModel& arm, const JointConfig& q,
                         const Aabb& obstacle, double inflate = kDefaultInflate);

// Checks the straight joint-space segment qa -> qb by point collision checks
// at evenly spaced interpolants (both endpoints included) whose per-joint
// spacing is at most step_size. The interpolant count is rounded up to a
// power of two, so halving step_size samples a strict superset of the
// coarser grid: a collision found at some step size is found at every finer
// one.
bool edge_collision_free(const ArmModel& arm, const JointConfig& qa,
                         const JointConfig& qb, const Aabb& obstacle,
                         double step_size = kDefaultStepSize,
                         double inflate = kDefaultInflate);

}  // namespace silp
