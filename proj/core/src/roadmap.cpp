#include "silp/roadmap.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace silp {

bool Roadmap::has_edge(int i, int j) const {
  if (i < 0 || i >= size()) return false;
  return std::any_of(adj[i].begin(), adj[i].end(),
                     [j](const RoadmapEdge& e) { return e.to == j; });
}

Roadmap build_graph(const std::vector<EnvState>& free_nodes,
                    double max_distance, const ArmModel& arm, double step_size,
                    double inflate) {
  Roadmap g;
  // Merge exact duplicates, keeping first-visit order.
  for (const EnvState& s : free_nodes) {
    const bool seen = std::any_of(
        g.nodes.begin(), g.nodes.end(),
        [&](const EnvState& t) { return t.angles == s.angles; });
    if (!seen) g.nodes.push_back(s);
  }
  g.adj.assign(g.nodes.size(), {});

  for (int i = 0; i < g.size(); ++i) {
    for (int j = i + 1; j < g.size(); ++j) {
      const double dist = (g.nodes[i].ee - g.nodes[j].ee).norm();
      if (dist > max_distance) continue;
      if (!edge_collision_free(arm, g.nodes[i].angles, g.nodes[j].angles,
                               g.nodes[i].obstacle, step_size, inflate))
        continue;
      g.adj[i].push_back({j, dist});
      g.adj[j].push_back({i, dist});
    }
  }
  return g;
}

PlanResult plan_path(const Roadmap& graph, int start, int goal, int budget) {
  if (start < 0 || start >= graph.size() || goal < 0 || goal >= graph.size())
    throw std::out_of_range("plan_path: start/goal not in graph");
  if (budget < 0) budget = graph.size();

  PlanResult res;
  res.path.push_back(start);
  if (start == goal) {
    res.reached_goal = true;
    res.termination = PlanTermination::kGoal;
    return res;
  }

  std::vector<char> visited(graph.size(), 0);
  visited[start] = 1;
  int current = start;
  const Vec2 goal_ee = graph.nodes[goal].ee;

  for (int expansions = 0; expansions < budget; ++expansions) {
    // Best unvisited neighbor by f = h + g, h = distance from the current
    // node (the stored edge length), g = distance to the goal node. Ties go
    // to the lowest node index.
    int best = -1;
    double best_f = std::numeric_limits<double>::infinity();
    for (const RoadmapEdge& e : graph.adj[current]) {
      if (visited[e.to]) continue;
      const double f = e.length + (graph.nodes[e.to].ee - goal_ee).norm();
      if (f < best_f || (f == best_f && e.to < best)) {
        best = e.to;
        best_f = f;
      }
    }
    if (best < 0) {
      res.termination = PlanTermination::kNoNeighbors;
      return res;
    }
    res.path.push_back(best);
    visited[best] = 1;
    current = best;
    if (best == goal) {
      res.reached_goal = true;
      res.termination = PlanTermination::kGoal;
      return res;
    }
  }
  res.termination = PlanTermination::kTimeout;
  return res;
}

PairMode pair_mode_from_string(const std::string& s) {
  if (s == "random") return PairMode::kRandom;
  if (s == "anchored") return PairMode::kAnchored;
  throw std::invalid_argument("unknown pair mode: " + s);
}

std::string to_string(PairMode m) {
  switch (m) {
    case PairMode::kRandom: return "random";
    case PairMode::kAnchored: return "anchored";
  }
  throw std::logic_error("unreachable");
}

std::vector<std::pair<int, int>> select_start_goal(
    const std::vector<EnvState>& nodes, const Vec2& episode_goal, int n_pairs,
    PairMode mode, Rng& rng) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(nodes.size());
  if (n < 2 || n_pairs <= 0) return pairs;

  if (mode == PairMode::kAnchored) {
    int nearest = 0;
    double best = (nodes[0].ee - episode_goal).norm();
    for (int i = 1; i < n; ++i) {
      const double dist = (nodes[i].ee - episode_goal).norm();
      if (dist < best) {
        best = dist;
        nearest = i;
      }
    }
    // The episode start is node 0 by construction (first-visit order).
    pairs.emplace_back(0, nearest);
    return pairs;
  }

  std::set<std::pair<int, int>> seen;
  const long max_distinct = static_cast<long>(n) * (n - 1);
  int wanted = static_cast<int>(
      std::min<long>(n_pairs, max_distinct));
  int guard = 0;
  while (static_cast<int>(pairs.size()) < wanted && guard++ < 100000) {
    const int a = static_cast<int>(rng.uniform_int(n));
    const int b = static_cast<int>(rng.uniform_int(n));
    if (a == b) continue;
    if (!seen.insert({a, b}).second) continue;
    pairs.emplace_back(a, b);
  }
  return pairs;
}

EpisodeResult collect_episode(const Policy& policy, ArmEnv& env,
                              const TaskSpec& task, Rng& rng,
                              const ReplacementPolicy* guided) {
  EpisodeResult out;
  const CollisionMode mode = env.config().collision_mode;
  const int n_act = env.config().arm.n_joints();

  const auto record_collision = [&](const EnvState& s, const Action& a,
                                    const StepResult& res) {
    ++out.collisions;
    if (mode != CollisionMode::kDiscard)
      out.transitions.push_back({s, a, res.s_next, res.r, res.done, true});
  };
  const auto random_action = [&]() {
    Action a(n_act);
    for (int i = 0; i < n_act; ++i) a[i] = rng.uniform(-1.0, 1.0);
    return a;
  };

  EnvState s = env.reset(task);
  while (!env.done()) {
    Action a = policy(s);
    StepResult res = env.step(a);

    // Retry from the same state until a collision-free action is found or
    // the episode is over (terminal mode, or budget exhausted).
    while (res.collision && !env.done()) {
      record_collision(s, a, res);
      a = guided ? (*guided)(env.state().angles, rng) : random_action();
      res = env.step(a);
    }
    if (res.collision) {
      record_collision(s, a, res);
      break;
    }

    out.transitions.push_back({s, a, res.s_next, res.r, res.done, false});
    out.free_nodes.push_back(res.s_next);
    if (res.done) {
      out.success = res.r == kSuccessReward;
      break;
    }
    s = res.s_next;
  }
  out.steps = env.steps();
  return out;
}

}  // namespace silp
