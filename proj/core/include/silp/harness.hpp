#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "silp/config.hpp"

namespace silp {

// --- evaluation --------------------------------------------------------------

// Draws fresh tasks (from `tasks` when given, else env.sample_task) and rolls
// the policy greedily. An episode counts as success iff it reaches the goal
// without a single collision. n_episodes == 0 warns and returns 0.
using TaskSource = std::function<TaskSpec(Rng&)>;
double evaluate_policy(const Policy& policy, ArmEnv& env, int n_episodes,
                       Rng& rng, const TaskSource& tasks = {});

// --- metrics persistence -----------------------------------------------------

// Per-epoch metric rows as CSV, round-trip exact (shortest-exact doubles).
void write_metrics_csv(const std::vector<EpochRow>& rows, std::ostream& out);
std::vector<EpochRow> read_metrics_csv(std::istream& in);

// One transition per row: joint angles, end effector, goal, action, reward,
// flags. For inspecting single episodes.
void write_episode_trace(const std::vector<Transition>& transitions,
                         std::ostream& out);

nlohmann::json roadmap_to_json(const Roadmap& graph);
nlohmann::json plan_to_json(const PlanResult& plan, const Roadmap& graph);

// --- experiment runner -------------------------------------------------------

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpochRow> rows;
  double final_success = 0.0;  // evaluation success rate after training
  long cum_collisions = 0;
  long cum_steps = 0;
  double wall_seconds = 0.0;
};

struct RunRecord {
  std::vector<SeedResult> per_seed;
  double success_mean = 0.0;
  double success_std = 0.0;  // sample std over seeds (0 for a single seed)
  long total_collisions = 0;
  double wall_seconds = 0.0;
};

nlohmann::json summary_json(const RunRecord& rec);

// Trains and evaluates every seed of the experiment. With `persist`, writes
// under <out_dir>/<name>/: the canonical config, per-seed metrics CSVs and
// checkpoints, a summary JSON and a manifest listing every artifact. Repeated
// runs of the same config produce byte-identical CSVs (wall times live in the
// summary only). Per-epoch progress goes to `log` when given.
RunRecord run_experiment(const ExperimentConfig& cfg, bool persist = true,
                         std::ostream* log = nullptr);

// Mean over epochs >= epoch_lo of the across-seed variance of the per-epoch
// filter-pass count. The filter-ablation comparison metric.
double filter_pass_variance(const RunRecord& rec, int epoch_lo);

// --- ablation suites ---------------------------------------------------------

enum class AblationSuite { kCollisionTypes, kGp, kFilters, kDistanceSweep };

AblationSuite suite_from_string(const std::string& s);
std::string to_string(AblationSuite s);

// Plain string table; the comparison-CSV exchange format of the ablations.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void write_csv(std::ostream& out) const;
};

// Runs the suite's variant grid off the base config (shared seeds) and
// returns the comparison table; with `persist` each variant run is written
// under the base out_dir and the table itself as <suite>.csv.
Table ablation_suite(AblationSuite which, const ExperimentConfig& base,
                     bool persist = true, std::ostream* log = nullptr);

// --- planning-only distance sweep ---------------------------------------------

// Episodes recorded once with a uniform-random policy; the sweep re-plans the
// same corpus under different neighbor radii.
struct PlanningCorpus {
  EnvConfig env;
  std::vector<std::vector<EnvState>> free_nodes;  // per episode
  std::vector<Vec2> goals;

  int size() const { return static_cast<int>(goals.size()); }
};

PlanningCorpus record_corpus(const EnvConfig& cfg, int n_episodes,
                             std::uint64_t seed);

struct DistanceRow {
  double d = 0.0;
  double planning_sr = 0.0;  // plans reaching the goal node / corpus size
  double mean_steps = 0.0;   // mean path edges over successful plans
  double plan_seconds = 0.0; // wall time of the whole pass over the corpus
};

std::vector<DistanceRow> distance_sweep(const PlanningCorpus& corpus,
                                        const std::vector<double>& grid);

// Appendix grid {0.10 ... 0.40} in 0.05 steps.
std::vector<double> default_distance_grid();

}  // namespace silp
