#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "silp/env.hpp"
#include "silp/rng.hpp"

namespace silp {

struct RoadmapEdge {
  int to = -1;
  double length = 0.0;  // end-effector distance between the two nodes
};

// Graph over the collision-free states visited in one episode. Symmetric
// adjacency; node order is first-visit order with exact duplicates merged.
struct Roadmap {
  std::vector<EnvState> nodes;
  std::vector<std::vector<RoadmapEdge>> adj;

  int size() const { return static_cast<int>(nodes.size()); }
  bool has_edge(int i, int j) const;
};

// Two nodes are connected iff their end effectors are within `max_distance`
// and the straight joint-space motion between them is collision free. Exact
// duplicate configurations are merged (first occurrence kept), so node order
// is first-visit order.
Roadmap build_graph(const std::vector<EnvState>& free_nodes, double max_distance,
                    const ArmModel& arm, double step_size = kDefaultStepSize,
                    double inflate = kDefaultInflate);

enum class PlanTermination { kGoal, kTimeout, kNoNeighbors };

struct PlanResult {
  std::vector<int> path;  // node indices, starts at `start`
  bool reached_goal = false;
  PlanTermination termination = PlanTermination::kNoNeighbors;
};

// Greedy best-first walk: from the current node, move to the unvisited
// neighbor minimizing  dist(current, n) + dist(n, goal)  (end-effector
// distances; ties broken by lowest node index). Nodes are never revisited.
// Expansion budget defaults to the node count.
PlanResult plan_path(const Roadmap& graph, int start, int goal,
                     int budget = -1);

enum class PairMode { kRandom, kAnchored };

PairMode pair_mode_from_string(const std::string& s);
std::string to_string(PairMode m);

// Start/goal node pairs for planning on an episode roadmap. kRandom draws
// distinct pairs uniformly without replacement; kAnchored pairs the first
// node (the episode start) with the node whose end effector is closest to
// the episode goal. Fewer than two nodes yield no pairs.
std::vector<std::pair<int, int>> select_start_goal(
    const std::vector<EnvState>& nodes, const Vec2& episode_goal, int n_pairs,
    PairMode mode, Rng& rng);

// Result of rolling one episode with collision-driven action replacement.
struct EpisodeResult {
  std::vector<Transition> transitions;  // storage per the collision mode
  std::vector<EnvState> free_nodes;     // every collision-free next-state
  int collisions = 0;                   // colliding step attempts
  int steps = 0;
  bool success = false;
};

// Draws a replacement action after a collision (exploration hook). Receives
// the configuration the arm is stuck at.
using ReplacementPolicy = std::function<Action(const JointConfig&, Rng&)>;

// Runs one episode of `env` on `task`. On collision the arm stays put and a
// replacement action is drawn - from `guided` when given, else uniformly -
// until a collision-free action is found, the episode terminates (mode 0) or
// the step budget runs out. Collision transitions are stored or dropped
// according to the environment's collision mode.
EpisodeResult collect_episode(const Policy& policy, ArmEnv& env,
                              const TaskSpec& task, Rng& rng,
                              const ReplacementPolicy* guided = nullptr);

}  // namespace silp
