#include "silp/demo.hpp"

#include <stdexcept>

namespace silp {

Action inverse_action(const EnvState& s, const EnvState& s_next) {
  return (s_next.angles - s.angles) / kActionScale;
}

std::pair<EnvState, Action> insert_nodes(const EnvModel& model,
                                         const EnvState& s,
                                         const EnvState& s_next, Action a) {
  if (action_in_range(a))
    throw std::invalid_argument("insert_nodes: action already in range");
  (void)s_next;
  do {
    a /= 2.0;
  } while (!action_in_range(a));
  return {model.step_state(s, a), a};
}

int generate_demonstrations(const std::vector<EnvState>& path,
                            DemoBuffer& buffer, const EnvModel& model,
                            bool recheck_edges) {
  int count = 0;
  const auto append = [&](const EnvState& from, const Action& a,
                          const EnvState& to) {
    if (recheck_edges && model.motion_in_collision(from, to))
      throw std::logic_error("generate_demonstrations: colliding demo motion");
    const auto [r, done] = model.reward(from, to);
    buffer.push({from, a, to, r, done, false});
    ++count;
  };

  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    EnvState s = path[i];
    const EnvState& target = path[i + 1];

    Action a = inverse_action(s, target);
    if (!action_in_range(a)) {
      // Walk the edge with the halved action until one in-range step remains;
      // the final tuple ends exactly on the path node.
      auto [mid, a_half] = insert_nodes(model, s, target, a);
      while (!action_in_range(inverse_action(s, target))) {
        append(s, a_half, mid);
        s = mid;
        mid = model.step_state(s, a_half);
      }
      a = inverse_action(s, target);
    }
    append(s, a, target);
  }
  return count;
}

}  // namespace silp
