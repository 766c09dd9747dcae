#include "silp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace silp {

namespace {

using nlohmann::json;

// Evaluation draws its tasks from a stream never touched during training.
constexpr std::uint64_t kStreamEval = 1000;
constexpr std::uint64_t kStreamCorpusTasks = 1;
constexpr std::uint64_t kStreamCorpusExplore = 2;
constexpr std::uint64_t kStreamCorpusPolicy = 7;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Shortest decimal form that parses back to the same double; keeps the CSVs
// lossless and byte-stable.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad CSV field for ") + what +
                                ": '" + s + "'");
  }
}

long parse_long(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad CSV field for ") + what +
                                ": '" + s + "'");
  }
}

const char* const kMetricsHeader =
    "epoch,success_rate,collisions,cum_collisions,steps,cum_steps,"
    "filter_pass,demo_seen,critic_loss,actor_loss,bc_loss,alpha,"
    "replay_size,demo_size";

std::string termination_name(PlanTermination t) {
  switch (t) {
    case PlanTermination::kGoal: return "goal";
    case PlanTermination::kTimeout: return "timeout";
    case PlanTermination::kNoNeighbors: return "no_neighbors";
  }
  throw std::logic_error("unreachable");
}

}  // namespace

// --- evaluation --------------------------------------------------------------

double evaluate_policy(const Policy& policy, ArmEnv& env, int n_episodes,
                       Rng& rng, const TaskSource& tasks) {
  if (n_episodes < 0)
    throw std::invalid_argument("evaluate_policy: negative episode count");
  if (n_episodes == 0) {
    std::cerr << "evaluate_policy: n_episodes == 0, success rate defined as 0\n";
    return 0.0;
  }
  int successes = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    const TaskSpec task = tasks ? tasks(rng) : env.sample_task(rng);
    env.reset(task);
    bool collided = false;
    double last_r = 0.0;
    while (!env.done()) {
      const StepResult res = env.step(policy(env.state()));
      if (res.collision) {  // any collision fails the episode, in every mode
        collided = true;
        break;
      }
      last_r = res.r;
    }
    if (!collided && last_r == kSuccessReward) ++successes;
  }
  return static_cast<double>(successes) / n_episodes;
}

// --- metrics persistence -----------------------------------------------------

void write_metrics_csv(const std::vector<EpochRow>& rows, std::ostream& out) {
  out << kMetricsHeader << "\n";
  for (const EpochRow& r : rows) {
    out << r.epoch << ',' << fmt(r.success_rate) << ',' << r.collisions << ','
        << r.cum_collisions << ',' << r.steps << ',' << r.cum_steps << ','
        << r.filter_pass << ',' << r.demo_seen << ',' << fmt(r.critic_loss)
        << ',' << fmt(r.actor_loss) << ',' << fmt(r.bc_loss) << ','
        << fmt(r.alpha) << ',' << r.replay_size << ',' << r.demo_size << "\n";
  }
}

std::vector<EpochRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw std::invalid_argument("metrics CSV: missing or unexpected header");
  std::vector<EpochRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 14)
      throw std::invalid_argument("metrics CSV: expected 14 fields, got " +
                                  std::to_string(f.size()));
    EpochRow r;
    r.epoch = static_cast<int>(parse_long(f[0], "epoch"));
    r.success_rate = parse_double(f[1], "success_rate");
    r.collisions = parse_long(f[2], "collisions");
    r.cum_collisions = parse_long(f[3], "cum_collisions");
    r.steps = parse_long(f[4], "steps");
    r.cum_steps = parse_long(f[5], "cum_steps");
    r.filter_pass = parse_long(f[6], "filter_pass");
    r.demo_seen = parse_long(f[7], "demo_seen");
    r.critic_loss = parse_double(f[8], "critic_loss");
    r.actor_loss = parse_double(f[9], "actor_loss");
    r.bc_loss = parse_double(f[10], "bc_loss");
    r.alpha = parse_double(f[11], "alpha");
    r.replay_size = parse_long(f[12], "replay_size");
    r.demo_size = parse_long(f[13], "demo_size");
    rows.push_back(r);
  }
  return rows;
}

void write_episode_trace(const std::vector<Transition>& transitions,
                         std::ostream& out) {
  if (transitions.empty()) {
    out << "step\n";
    return;
  }
  const auto n = transitions.front().s.angles.size();
  out << "step";
  for (Eigen::Index i = 0; i < n; ++i) out << ",q" << i;
  out << ",ee_x,ee_y,goal_x,goal_y";
  for (Eigen::Index i = 0; i < n; ++i) out << ",a" << i;
  out << ",r,done,collision\n";
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    const Transition& t = transitions[k];
    out << k;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt(t.s.angles[i]);
    out << ',' << fmt(t.s.ee.x()) << ',' << fmt(t.s.ee.y()) << ','
        << fmt(t.s.goal.x()) << ',' << fmt(t.s.goal.y());
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt(t.a[i]);
    out << ',' << fmt(t.r) << ',' << int(t.done) << ',' << int(t.collision)
        << "\n";
  }
}

nlohmann::json roadmap_to_json(const Roadmap& graph) {
  json nodes = json::array();
  for (const EnvState& s : graph.nodes) {
    nodes.push_back(
        {{"q", std::vector<double>(s.angles.data(),
                                   s.angles.data() + s.angles.size())},
         {"ee", {s.ee.x(), s.ee.y()}}});
  }
  json edges = json::array();
  for (int i = 0; i < graph.size(); ++i)
    for (const RoadmapEdge& e : graph.adj[static_cast<std::size_t>(i)])
      if (e.to > i) edges.push_back({i, e.to, e.length});
  return json{{"nodes", nodes}, {"edges", edges}};
}

nlohmann::json plan_to_json(const PlanResult& plan, const Roadmap& graph) {
  json ee_path = json::array();
  for (const int idx : plan.path) {
    const EnvState& s = graph.nodes[static_cast<std::size_t>(idx)];
    ee_path.push_back({s.ee.x(), s.ee.y()});
  }
  return json{{"path", plan.path},
              {"reached_goal", plan.reached_goal},
              {"termination", termination_name(plan.termination)},
              {"ee_path", ee_path}};
}

// --- experiment runner -------------------------------------------------------

nlohmann::json summary_json(const RunRecord& rec) {
  json seeds = json::array();
  for (const SeedResult& s : rec.per_seed) {
    seeds.push_back({{"seed", s.seed},
                     {"final_success", s.final_success},
                     {"cum_collisions", s.cum_collisions},
                     {"cum_steps", s.cum_steps},
                     {"wall_seconds", s.wall_seconds},
                     {"epochs", s.rows.size()}});
  }
  return json{{"success_mean", rec.success_mean},
              {"success_std", rec.success_std},
              {"total_collisions", rec.total_collisions},
              {"wall_seconds", rec.wall_seconds},
              {"per_seed", seeds}};
}

RunRecord run_experiment(const ExperimentConfig& cfg, bool persist,
                         std::ostream* log) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.out_dir) / cfg.name;
  if (persist) fs::create_directories(dir);

  RunRecord rec;
  const auto t0 = std::chrono::steady_clock::now();
  json manifest_metrics = json::object();
  json manifest_checkpoints = json::object();

  for (const std::uint64_t seed : cfg.seeds) {
    const auto s0 = std::chrono::steady_clock::now();
    Trainer trainer(cfg.trainer, seed);
    if (log) {
      Trainer* tp = &trainer;
      trainer.run([log, seed, tp](const EpochRow& row) {
        *log << "[" << "seed " << seed << "] epoch " << row.epoch << "/"
             << tp->config().epochs << " sr=" << row.success_rate
             << " collisions=" << row.cum_collisions
             << " critic=" << row.critic_loss << " bc=" << row.bc_loss
             << " pass=" << row.filter_pass << "/" << row.demo_seen
             << std::endl;
      });
    } else {
      trainer.run();
    }

    ArmEnv eval_env(cfg.trainer.env);
    Rng eval_rng(derive_seed(seed, kStreamEval));
    const Policy greedy = [&trainer](const EnvState& s) {
      return trainer.agent().act_greedy(s);
    };
    const double sr =
        evaluate_policy(greedy, eval_env, cfg.eval_episodes, eval_rng);

    SeedResult sres;
    sres.seed = seed;
    sres.rows = trainer.rows();
    sres.final_success = sr;
    if (!sres.rows.empty()) {
      sres.cum_collisions = sres.rows.back().cum_collisions;
      sres.cum_steps = sres.rows.back().cum_steps;
    }
    sres.wall_seconds = seconds_since(s0);

    if (persist) {
      const std::string mname = "metrics_seed" + std::to_string(seed) + ".csv";
      const std::string cname =
          "checkpoint_seed" + std::to_string(seed) + ".json";
      std::ofstream mcsv(dir / mname);
      write_metrics_csv(sres.rows, mcsv);
      std::ofstream ck(dir / cname);
      ck << trainer.agent().checkpoint().dump() << "\n";
      manifest_metrics[std::to_string(seed)] = mname;
      manifest_checkpoints[std::to_string(seed)] = cname;
    }
    if (log)
      *log << "[seed " << seed << "] eval success " << sr << " ("
           << cfg.eval_episodes << " episodes, " << sres.wall_seconds << " s)"
           << std::endl;
    rec.per_seed.push_back(std::move(sres));
  }

  const auto n = static_cast<double>(rec.per_seed.size());
  for (const SeedResult& s : rec.per_seed) {
    rec.success_mean += s.final_success;
    rec.total_collisions += s.cum_collisions;
  }
  rec.success_mean /= n;
  if (rec.per_seed.size() > 1) {
    double ss = 0.0;
    for (const SeedResult& s : rec.per_seed) {
      const double d = s.final_success - rec.success_mean;
      ss += d * d;
    }
    rec.success_std = std::sqrt(ss / (n - 1.0));
  }
  rec.wall_seconds = seconds_since(t0);

  if (persist) {
    std::ofstream cj(dir / "config.json");
    cj << to_json(cfg).dump(2) << "\n";
    std::ofstream sj(dir / "summary.json");
    sj << summary_json(rec).dump(2) << "\n";
    json manifest{{"name", cfg.name},
                  {"config", "config.json"},
                  {"summary", "summary.json"},
                  {"metrics", manifest_metrics},
                  {"checkpoints", manifest_checkpoints}};
    std::ofstream mj(dir / "manifest.json");
    mj << manifest.dump(2) << "\n";
  }
  return rec;
}

double filter_pass_variance(const RunRecord& rec, int epoch_lo) {
  if (rec.per_seed.empty()) return 0.0;
  std::size_t epochs = rec.per_seed.front().rows.size();
  for (const SeedResult& s : rec.per_seed)
    epochs = std::min(epochs, s.rows.size());
  double total = 0.0;
  int counted = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    if (rec.per_seed.front().rows[e].epoch < epoch_lo) continue;
    double mean = 0.0;
    for (const SeedResult& s : rec.per_seed)
      mean += static_cast<double>(s.rows[e].filter_pass);
    mean /= static_cast<double>(rec.per_seed.size());
    double var = 0.0;
    for (const SeedResult& s : rec.per_seed) {
      const double d = static_cast<double>(s.rows[e].filter_pass) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rec.per_seed.size());
    total += var;
    ++counted;
  }
  return counted > 0 ? total / counted : 0.0;
}

// --- ablation suites ---------------------------------------------------------

AblationSuite suite_from_string(const std::string& s) {
  if (s == "collision_types") return AblationSuite::kCollisionTypes;
  if (s == "gp") return AblationSuite::kGp;
  if (s == "filters") return AblationSuite::kFilters;
  if (s == "distance_sweep") return AblationSuite::kDistanceSweep;
  throw std::invalid_argument("unknown ablation suite: " + s);
}

std::string to_string(AblationSuite s) {
  switch (s) {
    case AblationSuite::kCollisionTypes: return "collision_types";
    case AblationSuite::kGp: return "gp";
    case AblationSuite::kFilters: return "filters";
    case AblationSuite::kDistanceSweep: return "distance_sweep";
  }
  throw std::logic_error("unreachable");
}

void Table::write_csv(std::ostream& out) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "");
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
}

Table ablation_suite(AblationSuite which, const ExperimentConfig& base,
                     bool persist, std::ostream* log) {
  base.validate();
  Table table;
  switch (which) {
    case AblationSuite::kCollisionTypes: {
      table.header = {"variant",      "mode",        "collision_type",
                      "success_mean", "success_std", "cum_collisions",
                      "wall_seconds"};
      for (const TrainMode mode : {TrainMode::kPlain, TrainMode::kSilpPlus}) {
        for (const int ct : {0, 1, 2}) {
          ExperimentConfig v = base;
          v.trainer.mode = mode;
          v.trainer.env.collision_mode = collision_mode_from_int(ct);
          v.name = base.name + "_" + to_string(mode) + "_type" +
                   std::to_string(ct);
          const RunRecord r = run_experiment(v, persist, log);
          table.rows.push_back({v.name, to_string(mode), std::to_string(ct),
                                fmt(r.success_mean), fmt(r.success_std),
                                std::to_string(r.total_collisions),
                                fmt(r.wall_seconds)});
        }
      }
      break;
    }
    case AblationSuite::kGp: {
      table.header = {"variant", "gp_enabled",     "success_mean",
                      "success_std", "cum_collisions", "wall_seconds"};
      for (const bool gp : {true, false}) {
        ExperimentConfig v = base;
        v.trainer.gp_enabled = gp;
        v.name = base.name + (gp ? "_gp_on" : "_gp_off");
        const RunRecord r = run_experiment(v, persist, log);
        table.rows.push_back({v.name, gp ? "1" : "0", fmt(r.success_mean),
                              fmt(r.success_std),
                              std::to_string(r.total_collisions),
                              fmt(r.wall_seconds)});
      }
      break;
    }
    case AblationSuite::kFilters: {
      table.header = {"variant",     "filter",
                      "success_mean", "success_std",
                      "filter_pass_variance", "wall_seconds"};
      for (const FilterType f : {FilterType::kReward, FilterType::kQ}) {
        ExperimentConfig v = base;
        v.trainer.learner.filter = f;
        v.name = base.name + "_filter_" + to_string(f);
        const RunRecord r = run_experiment(v, persist, log);
        table.rows.push_back({v.name, to_string(f), fmt(r.success_mean),
                              fmt(r.success_std),
                              fmt(filter_pass_variance(r, 50)),
                              fmt(r.wall_seconds)});
      }
      break;
    }
    case AblationSuite::kDistanceSweep: {
      table.header = {"d", "planning_sr", "mean_steps", "plan_seconds"};
      const PlanningCorpus corpus =
          record_corpus(base.trainer.env, 500, base.seeds.front());
      for (const DistanceRow& row :
           distance_sweep(corpus, default_distance_grid())) {
        table.rows.push_back({fmt(row.d), fmt(row.planning_sr),
                              fmt(row.mean_steps), fmt(row.plan_seconds)});
      }
      break;
    }
  }
  if (persist) {
    namespace fs = std::filesystem;
    fs::create_directories(base.out_dir);
    std::ofstream out(fs::path(base.out_dir) /
                      (base.name + "_" + to_string(which) + ".csv"));
    table.write_csv(out);
  }
  return table;
}

// --- planning-only distance sweep ---------------------------------------------

PlanningCorpus record_corpus(const EnvConfig& cfg, int n_episodes,
                             std::uint64_t seed) {
  if (n_episodes <= 0)
    throw std::invalid_argument("record_corpus: episode count must be positive");
  PlanningCorpus corpus;
  corpus.env = cfg;
  ArmEnv env(cfg);
  Rng task_rng(derive_seed(seed, kStreamCorpusTasks));
  Rng explore_rng(derive_seed(seed, kStreamCorpusExplore));
  Rng policy_rng(derive_seed(seed, kStreamCorpusPolicy));
  const int n = cfg.arm.n_joints();
  const Policy random_policy = [&policy_rng, n](const EnvState&) {
    Action a(n);
    for (int i = 0; i < n; ++i) a[i] = policy_rng.uniform(-1.0, 1.0);
    return a;
  };
  for (int ep = 0; ep < n_episodes; ++ep) {
    const TaskSpec task = env.sample_task(task_rng);
    EpisodeResult res = collect_episode(random_policy, env, task, explore_rng);
    corpus.free_nodes.push_back(std::move(res.free_nodes));
    corpus.goals.push_back(task.goal);
  }
  return corpus;
}

std::vector<DistanceRow> distance_sweep(const PlanningCorpus& corpus,
                                        const std::vector<double>& grid) {
  if (corpus.size() == 0)
    throw std::invalid_argument("distance_sweep: empty corpus");
  std::vector<DistanceRow> rows;
  Rng pair_rng(0);  // anchored selection ignores it
  for (const double d : grid) {
    const auto t0 = std::chrono::steady_clock::now();
    int successes = 0;
    long steps = 0;
    for (int i = 0; i < corpus.size(); ++i) {
      const auto& nodes = corpus.free_nodes[static_cast<std::size_t>(i)];
      if (nodes.size() < 2) continue;  // unplannable episode: counted a failure
      const Roadmap graph = build_graph(nodes, d, corpus.env.arm,
                                        corpus.env.step_size,
                                        corpus.env.inflate);
      const auto pairs =
          select_start_goal(graph.nodes, corpus.goals[static_cast<std::size_t>(i)],
                            1, PairMode::kAnchored, pair_rng);
      if (pairs.empty()) continue;
      const PlanResult plan =
          plan_path(graph, pairs.front().first, pairs.front().second);
      if (plan.reached_goal) {
        ++successes;
        steps += static_cast<long>(plan.path.size()) - 1;
      }
    }
    DistanceRow row;
    row.d = d;
    row.planning_sr = static_cast<double>(successes) / corpus.size();
    row.mean_steps =
        successes > 0 ? static_cast<double>(steps) / successes : 0.0;
    row.plan_seconds = seconds_since(t0);
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> default_distance_grid() {
  return {0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40};
}

}  // namespace silp
