#pragma once

#include <utility>
#include <vector>

#include "silp/env.hpp"
#include "silp/replay.hpp"

namespace silp {

// Demonstrations live in the same transition format as regular experience;
// the buffer type is shared.
using DemoBuffer = ReplayBuffer;

inline constexpr std::size_t kDefaultDemoCapacity = 100000;

// The action that moves s to s_next in one step, (q' - q) / kActionScale,
// NOT clipped to [-1, 1]. Because kActionScale is a power of two the
// division is exact: applying the returned action to s reproduces s_next
// bit for bit whenever it is in range.
Action inverse_action(const EnvState& s, const EnvState& s_next);

inline bool action_in_range(const Action& a) {
  return (a.array().abs() <= 1.0).all();
}

// Splits an out-of-range step: halves the action until every component is
// in [-1, 1] and returns the in-range action together with the state it
// lands on from s. Handles arbitrarily long edges (repeated halving).
std::pair<EnvState, Action> insert_nodes(const EnvModel& model,
                                         const EnvState& s,
                                         const EnvState& s_next, Action a);

// Converts a planned node sequence into MDP transitions and appends them to
// `buffer`. Edges whose inverse action is out of range are subdivided with
// insert_nodes: the halved action is applied repeatedly until the remaining
// gap fits a single in-range action, which closes the segment exactly on the
// path node. Rewards and done flags are recomputed from the environment
// model. Returns the number of tuples appended. When `recheck_edges` is set,
// every emitted motion is re-verified collision-free (debugging aid).
int generate_demonstrations(const std::vector<EnvState>& path,
                            DemoBuffer& buffer, const EnvModel& model,
                            bool recheck_edges = false);

}  // namespace silp
