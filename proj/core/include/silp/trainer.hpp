#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "silp/agents.hpp"
#include "silp/demo.hpp"
#include "silp/env.hpp"
#include "silp/gp.hpp"
#include "silp/roadmap.hpp"

namespace silp {

// How planner demonstrations reach the learner:
//   kPlain    - no planning; interaction experience only.
//   kDemon    - planner tuples are mixed into the interaction buffer.
//   kSilpPlus - planner tuples fill a separate demonstration buffer used by
//               the filtered behavior-cloning term.
enum class TrainMode { kPlain, kDemon, kSilpPlus };

TrainMode mode_from_string(const std::string& s);
std::string to_string(TrainMode m);

struct TrainerConfig {
  EnvConfig env;
  LearnerConfig learner;
  AlgoType algo = AlgoType::kSac;
  TrainMode mode = TrainMode::kSilpPlus;

  bool gp_enabled = true;
  GpHyper gp;
  int gp_candidates = 64;

  double plan_distance = 0.15;  // roadmap neighbor radius d, meters
  PairMode pair_mode = PairMode::kAnchored;
  int n_plan_pairs = 1;

  int epochs = 300;
  int episodes_per_epoch = 10;
  int updates_per_epoch = 50;
  std::size_t replay_capacity = 1000000;
  std::size_t demo_capacity = kDefaultDemoCapacity;

  void validate() const;
};

struct EpochRow {
  int epoch = 0;              // 1-based
  double success_rate = 0.0;  // over this epoch's training episodes
  long collisions = 0;        // colliding step attempts this epoch
  long cum_collisions = 0;
  long steps = 0;
  long cum_steps = 0;
  long filter_pass = 0;       // filter-accepted demo tuples this epoch
  long demo_seen = 0;         // demo tuples offered to the filter
  double critic_loss = 0.0;   // means over this epoch's updates
  double actor_loss = 0.0;
  double bc_loss = 0.0;
  double alpha = 0.0;
  long replay_size = 0;
  long demo_size = 0;
};

// One seeded training run: per epoch, roll episodes (with collision-driven
// replacement actions and optional GP guidance), plan demonstrations on each
// episode's roadmap, then run gradient updates.
class Trainer {
 public:
  Trainer(TrainerConfig cfg, std::uint64_t seed);

  void run(const std::function<void(const EpochRow&)>& on_epoch = {});

  const std::vector<EpochRow>& rows() const { return rows_; }
  Agent& agent() { return *agent_; }
  const Agent& agent() const { return *agent_; }
  ArmEnv& env() { return env_; }
  const TrainerConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const ReplayBuffer& replay() const { return replay_; }
  const DemoBuffer& demos() const { return demo_; }

 private:
  void run_epoch(int epoch);

  TrainerConfig cfg_;
  std::uint64_t seed_;
  ArmEnv env_;
  std::unique_ptr<Agent> agent_;
  ReplayBuffer replay_;
  DemoBuffer demo_;
  Rng task_rng_, explore_rng_, sample_rng_, plan_rng_;
  std::vector<EpochRow> rows_;
  long cum_collisions_ = 0;
  long cum_steps_ = 0;
};

// Standalone supervised imitation: regress the policy's deterministic action
// onto demonstration actions with every filter mask forced on. Returns the
// trained agent; per-epoch mean losses go to `loss_curve` when given.
std::unique_ptr<Agent> bc_train(const DemoBuffer& demos,
                                const TrainerConfig& cfg, std::uint64_t seed,
                                int epochs, int batches_per_epoch,
                                std::vector<double>* loss_curve = nullptr);

}  // namespace silp
