#include "silp/trainer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <utility>

namespace silp {

namespace {

// Sub-stream tags for deriving independent RNGs from one run seed.
enum : std::uint64_t {
  kStreamAgent = 0,
  kStreamTasks = 1,
  kStreamExplore = 2,
  kStreamSampling = 3,
  kStreamPlanning = 4,
};

TrainerConfig validated(TrainerConfig c) {
  c.validate();
  return c;
}

}  // namespace

TrainMode mode_from_string(const std::string& s) {
  if (s == "plain") return TrainMode::kPlain;
  if (s == "demon") return TrainMode::kDemon;
  if (s == "silp_plus") return TrainMode::kSilpPlus;
  throw std::invalid_argument("unknown train mode: " + s);
}

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kPlain: return "plain";
    case TrainMode::kDemon: return "demon";
    case TrainMode::kSilpPlus: return "silp_plus";
  }
  throw std::logic_error("unreachable");
}

void TrainerConfig::validate() const {
  learner.validate();
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (episodes_per_epoch <= 0)
    throw std::invalid_argument("episodes_per_epoch must be positive");
  if (updates_per_epoch < 0)
    throw std::invalid_argument("updates_per_epoch must be >= 0");
  if (plan_distance <= 0.0)
    throw std::invalid_argument("plan_distance must be positive");
  if (n_plan_pairs <= 0)
    throw std::invalid_argument("n_plan_pairs must be positive");
  if (gp_candidates <= 0)
    throw std::invalid_argument("gp_candidates must be positive");
  if (replay_capacity == 0 || demo_capacity == 0)
    throw std::invalid_argument("buffer capacities must be positive");
  if (gp.signal_var <= 0.0 || gp.lengthscale <= 0.0 || gp.noise_var <= 0.0)
    throw std::invalid_argument("GP hyperparameters must be positive");
}

Trainer::Trainer(TrainerConfig cfg, std::uint64_t seed)
    : cfg_(validated(std::move(cfg))),
      seed_(seed),
      env_(cfg_.env),
      replay_(cfg_.replay_capacity),
      demo_(cfg_.demo_capacity),
      task_rng_(derive_seed(seed, kStreamTasks)),
      explore_rng_(derive_seed(seed, kStreamExplore)),
      sample_rng_(derive_seed(seed, kStreamSampling)),
      plan_rng_(derive_seed(seed, kStreamPlanning)) {
  const int n = cfg_.env.arm.n_joints();
  agent_ = make_agent(cfg_.algo, n + 8, n, cfg_.learner, env_.model(),
                      derive_seed(seed, kStreamAgent));
}

void Trainer::run(const std::function<void(const EpochRow&)>& on_epoch) {
  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    run_epoch(epoch);
    if (on_epoch) on_epoch(rows_.back());
  }
}

void Trainer::run_epoch(int epoch) {
  EpochRow row;
  row.epoch = epoch;

  // Planner tuples go straight into the interaction buffer when they are not
  // meant for the imitation term: always in demon mode, and in silp_plus mode
  // when the filter is switched off entirely.
  const bool demos_to_replay =
      cfg_.mode == TrainMode::kDemon ||
      (cfg_.mode == TrainMode::kSilpPlus &&
       cfg_.learner.filter == FilterType::kNone);
  DemoBuffer& demo_target = demos_to_replay ? replay_ : demo_;

  // --- experience collection -----------------------------------------------
  int successes = 0;
  for (int ep = 0; ep < cfg_.episodes_per_epoch; ++ep) {
    const TaskSpec task = env_.sample_task(task_rng_);
    const Policy policy = [this](const EnvState& s) { return agent_->act(s); };

    ReplacementPolicy guided;
    const ReplacementPolicy* guided_ptr = nullptr;
    if (cfg_.gp_enabled) {
      // Refits on the episode log as it stands when a replacement is needed,
      // i.e. immediately after the triggering collision was recorded.
      guided = [this](const JointConfig& q, Rng& rng) -> Action {
        const auto& log = env_.episode_log();
        std::vector<JointConfig> xs;
        xs.reserve(log.size());
        Eigen::VectorXd ys(static_cast<Eigen::Index>(log.size()));
        for (std::size_t i = 0; i < log.size(); ++i) {
          xs.push_back(log[i].first);
          ys[static_cast<Eigen::Index>(i)] = log[i].second;
        }
        const GpModel gp = GpModel::fit(xs, ys, cfg_.gp);
        return gp_guided_action(gp, cfg_.env.arm, q, rng, cfg_.gp_candidates,
                                kActionScale);
      };
      guided_ptr = &guided;
    }

    const EpisodeResult res =
        collect_episode(policy, env_, task, explore_rng_, guided_ptr);
    for (const Transition& t : res.transitions) replay_.push(t);
    successes += res.success ? 1 : 0;
    row.collisions += res.collisions;
    row.steps += res.steps;

    // --- per-episode roadmap planning + demonstration extraction -----------
    if (cfg_.mode != TrainMode::kPlain && res.free_nodes.size() >= 2) {
      const Roadmap graph =
          build_graph(res.free_nodes, cfg_.plan_distance, cfg_.env.arm,
                      cfg_.env.step_size, cfg_.env.inflate);
      const auto pairs =
          select_start_goal(graph.nodes, task.goal, cfg_.n_plan_pairs,
                            cfg_.pair_mode, plan_rng_);
      for (const auto& [start, goal] : pairs) {
        const PlanResult plan = plan_path(graph, start, goal);
        if (plan.path.size() < 2) continue;
        std::vector<EnvState> path;
        path.reserve(plan.path.size());
        for (const int idx : plan.path)
          path.push_back(graph.nodes[static_cast<std::size_t>(idx)]);
        generate_demonstrations(path, demo_target, env_.model());
      }
    }
  }
  row.success_rate =
      static_cast<double>(successes) / cfg_.episodes_per_epoch;

  // --- gradient updates ------------------------------------------------------
  const bool bc_enabled = cfg_.mode == TrainMode::kSilpPlus &&
                          cfg_.learner.filter != FilterType::kNone;
  const auto batch_policy = static_cast<std::size_t>(cfg_.learner.batch_policy);
  const auto batch_demo = static_cast<std::size_t>(cfg_.learner.batch_demo);
  int updates_done = 0;
  for (int u = 0; u < cfg_.updates_per_epoch; ++u) {
    if (replay_.size() < batch_policy) break;
    const Batch pi_batch =
        make_batch(replay_, replay_.sample_indices(batch_policy, sample_rng_));
    Batch demo_batch;
    const bool use_demo = bc_enabled && demo_.size() >= batch_demo;
    if (use_demo)
      demo_batch =
          make_batch(demo_, demo_.sample_indices(batch_demo, sample_rng_));

    // Critics fit on interaction and demonstration experience together.
    const Batch critic_batch =
        use_demo ? concat_batches(pi_batch, demo_batch) : pi_batch;
    row.critic_loss += agent_->critic_update(critic_batch);

    const ActorUpdateStats stats =
        agent_->actor_update(pi_batch, use_demo ? &demo_batch : nullptr);
    agent_->soft_update_targets();

    row.actor_loss += stats.rl_loss;
    row.bc_loss += stats.bc_loss;
    row.filter_pass += stats.filter_pass;
    row.demo_seen += stats.demo_count;
    row.alpha = stats.alpha;
    ++updates_done;
  }
  if (updates_done > 0) {
    row.critic_loss /= updates_done;
    row.actor_loss /= updates_done;
    row.bc_loss /= updates_done;
  }

  cum_collisions_ += row.collisions;
  cum_steps_ += row.steps;
  row.cum_collisions = cum_collisions_;
  row.cum_steps = cum_steps_;
  row.replay_size = static_cast<long>(replay_.size());
  row.demo_size = static_cast<long>(demo_.size());
  rows_.push_back(row);
}

std::unique_ptr<Agent> bc_train(const DemoBuffer& demos,
                                const TrainerConfig& cfg, std::uint64_t seed,
                                int epochs, int batches_per_epoch,
                                std::vector<double>* loss_curve) {
  cfg.validate();
  if (demos.empty()) throw std::invalid_argument("bc_train: no demonstrations");
  const auto batch =
      std::min(demos.size(), static_cast<std::size_t>(cfg.learner.batch_demo));
  const EnvModel model(cfg.env);
  const int n = cfg.env.arm.n_joints();
  auto agent = make_agent(cfg.algo, n + 8, n, cfg.learner, model,
                          derive_seed(seed, kStreamAgent));
  Rng sample_rng(derive_seed(seed, kStreamSampling));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss = 0.0;
    for (int b = 0; b < batches_per_epoch; ++b) {
      const Batch demo_batch =
          make_batch(demos, demos.sample_indices(batch, sample_rng));
      loss += agent->bc_update(demo_batch);
    }
    if (loss_curve) loss_curve->push_back(loss / std::max(1, batches_per_epoch));
  }
  return agent;
}

}  // namespace silp
