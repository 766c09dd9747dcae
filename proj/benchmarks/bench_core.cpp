// Microbenchmarks for the hot paths: collision checks, kinematics, roadmap
// construction/planning, GP fits and network passes.

#include <benchmark/benchmark.h>

#include "silp/agents.hpp"
#include "silp/collision.hpp"
#include "silp/gp.hpp"
#include "silp/kinematics.hpp"
#include "silp/mlp.hpp"
#include "silp/roadmap.hpp"

namespace {

using namespace silp;

ArmModel arm() { return ArmModel::default_planar(); }

Aabb obstacle() { return Aabb::from_center({0.45, 0.1}, 0.2, 0.3); }

JointConfig random_config(Rng& rng, const ArmModel& a) {
  JointConfig q(a.n_joints());
  for (int i = 0; i < a.n_joints(); ++i)
    q[i] = rng.uniform(a.joint_lo[i], a.joint_hi[i]);
  return q;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const ArmModel a = arm();
  Rng rng(1);
  const JointConfig q = random_config(rng, a);
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(a, q));
}
BENCHMARK(BM_ForwardKinematics);

void BM_ConfigCollisionCheck(benchmark::State& state) {
  const ArmModel a = arm();
  const Aabb box = obstacle();
  Rng rng(2);
  const JointConfig q = random_config(rng, a);
  for (auto _ : state)
    benchmark::DoNotOptimize(config_in_collision(a, q, box));
}
BENCHMARK(BM_ConfigCollisionCheck);

void BM_EdgeCollisionCheck(benchmark::State& state) {
  const ArmModel a = arm();
  const Aabb box = obstacle();
  Rng rng(3);
  const JointConfig qa = random_config(rng, a);
  JointConfig qb = qa;
  for (int i = 0; i < a.n_joints(); ++i) qb[i] += rng.uniform(-0.5, 0.5);
  qb = a.clip(qb);
  for (auto _ : state)
    benchmark::DoNotOptimize(edge_collision_free(a, qa, qb, box));
}
BENCHMARK(BM_EdgeCollisionCheck);

std::vector<EnvState> random_nodes(int n, Rng& rng) {
  const ArmModel a = arm();
  const EnvModel model{EnvConfig{}};
  const Aabb box = obstacle();
  std::vector<EnvState> nodes;
  nodes.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(nodes.size()) < n) {
    const JointConfig q = random_config(rng, a);
    if (config_in_collision(a, q, box.inflated(kDefaultInflate))) continue;
    nodes.push_back(model.make_state(q, box, {-0.5, 0.4}));
  }
  return nodes;
}

void BM_BuildGraph(benchmark::State& state) {
  Rng rng(4);
  const auto nodes = random_nodes(static_cast<int>(state.range(0)), rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_graph(nodes, 0.15, arm()));
}
BENCHMARK(BM_BuildGraph)->Arg(25)->Arg(50);

void BM_PlanPath(benchmark::State& state) {
  Rng rng(5);
  const auto nodes = random_nodes(50, rng);
  const Roadmap graph = build_graph(nodes, 0.3, arm());
  for (auto _ : state)
    benchmark::DoNotOptimize(plan_path(graph, 0, graph.size() - 1));
}
BENCHMARK(BM_PlanPath);

void BM_GpFitPredict(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(6);
  const ArmModel a = arm();
  std::vector<JointConfig> xs;
  Eigen::VectorXd ys(n);
  for (int i = 0; i < n; ++i) {
    xs.push_back(random_config(rng, a));
    ys[i] = rng.uniform(-10.0, 1.0);
  }
  const JointConfig probe = random_config(rng, a);
  for (auto _ : state) {
    const GpModel gp = GpModel::fit(xs, ys, GpHyper{});
    benchmark::DoNotOptimize(gp.predict(probe));
  }
}
BENCHMARK(BM_GpFitPredict)->Arg(10)->Arg(50);

void BM_MlpForwardBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Mlp net({11, 128, 128, 6});
  Rng rng(7);
  net.init(rng);
  Eigen::MatrixXd x(11, batch);
  for (int j = 0; j < batch; ++j)
    for (int i = 0; i < 11; ++i) x(i, j) = rng.normal();
  const Eigen::MatrixXd dy = Eigen::MatrixXd::Ones(6, batch);
  for (auto _ : state) {
    Mlp::Cache cache;
    benchmark::DoNotOptimize(net.forward(x, cache));
    Mlp::Grads g = net.zero_grads();
    net.backward(cache, dy, g);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(128)->Arg(256);

void BM_SacUpdate(benchmark::State& state) {
  const EnvModel model{EnvConfig{}};
  LearnerConfig cfg;
  cfg.hidden = {128, 128};
  SacAgent agent(11, 3, cfg, model, 8);
  Rng rng(9);
  ReplayBuffer buf(100000);
  const Aabb box = obstacle();
  const ArmModel a = arm();
  while (buf.size() < 512) {
    const JointConfig q = random_config(rng, a);
    const EnvState s = model.make_state(q, box, {-0.5, 0.4});
    Action act(3);
    for (int i = 0; i < 3; ++i) act[i] = rng.uniform(-1.0, 1.0);
    const EnvState s2 = model.step_state(s, act);
    const auto [r, done] = model.reward(s, s2);
    buf.push({s, act, s2, r, done, false});
  }
  Rng sample_rng(10);
  for (auto _ : state) {
    const Batch batch =
        make_batch(buf, buf.sample_indices(128, sample_rng));
    benchmark::DoNotOptimize(agent.critic_update(batch));
    benchmark::DoNotOptimize(agent.actor_update(batch, nullptr));
    agent.soft_update_targets();
  }
}
BENCHMARK(BM_SacUpdate);

}  // namespace

BENCHMARK_MAIN();
