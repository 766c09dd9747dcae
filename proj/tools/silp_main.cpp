// Command-line front end: training runs, checkpoint evaluation, ablation
// suites, collision-model utilities and standalone behavior cloning.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "silp/collision_model.hpp"
#include "silp/config.hpp"
#include "silp/harness.hpp"

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void write_json_file(const std::string& path, const json& j, int indent = -1) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(indent) << "\n";
}

// Greedy rollout on a fresh task, recording the transitions.
std::vector<silp::Transition> trace_episode(silp::ArmEnv& env,
                                            const silp::Policy& policy,
                                            silp::Rng& rng) {
  std::vector<silp::Transition> trace;
  env.reset(env.sample_task(rng));
  while (!env.done()) {
    const silp::EnvState s = env.state();
    const silp::Action a = policy(s);
    const silp::StepResult res = env.step(a);
    trace.push_back({s, a, res.s_next, res.r, res.done, res.collision});
    if (res.collision && !res.done) break;  // stop the trace at first contact
  }
  return trace;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SILP+ planar-arm trainer and experiment harness"};
  app.require_subcommand(1);

  // --- train -----------------------------------------------------------------
  std::string train_config;
  std::string opt_variant, opt_mode, opt_gp, opt_filter, opt_name, opt_out;
  int opt_collision_type = -1, opt_epochs = -1, opt_eval_episodes = -1;
  std::vector<std::uint64_t> opt_seeds;
  bool opt_quiet = false, opt_no_env = false;

  CLI::App* train = app.add_subcommand("train", "Train per an experiment config");
  train->add_option("--config", train_config, "Experiment config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--variant", opt_variant, "Algorithm")
      ->check(CLI::IsMember({"ddpg", "sac"}));
  train->add_option("--mode", opt_mode, "Demonstration wiring")
      ->check(CLI::IsMember({"plain", "demon", "silp_plus"}));
  train->add_option("--collision-type", opt_collision_type,
                    "0 terminate, 1 discard, 2 keep")
      ->check(CLI::Range(0, 2));
  train->add_option("--gp", opt_gp, "GP-guided exploration")
      ->check(CLI::IsMember({"on", "off"}));
  train->add_option("--filter", opt_filter, "Demonstration filter")
      ->check(CLI::IsMember({"reward", "q", "none"}));
  train->add_option("--seed", opt_seeds, "Replace the config's seed list");
  train->add_option("--name", opt_name, "Override the run name");
  train->add_option("--out", opt_out, "Override the output directory");
  train->add_option("--epochs", opt_epochs, "Override the epoch count");
  train->add_option("--eval-episodes", opt_eval_episodes,
                    "Override the evaluation episode count");
  train->add_flag("--quiet", opt_quiet, "No per-epoch progress lines");
  train->add_flag("--no-env-overrides", opt_no_env,
                  "Ignore SILP_* environment variables");
  train->callback([&] {
    silp::ExperimentConfig cfg =
        silp::load_experiment(train_config, !opt_no_env);
    if (!opt_variant.empty())
      cfg.trainer.algo = silp::algo_from_string(opt_variant);
    if (!opt_mode.empty()) cfg.trainer.mode = silp::mode_from_string(opt_mode);
    if (opt_collision_type >= 0)
      cfg.trainer.env.collision_mode =
          silp::collision_mode_from_int(opt_collision_type);
    if (!opt_gp.empty()) cfg.trainer.gp_enabled = (opt_gp == "on");
    if (!opt_filter.empty())
      cfg.trainer.learner.filter = silp::filter_from_string(opt_filter);
    if (!opt_seeds.empty()) cfg.seeds = opt_seeds;
    if (!opt_name.empty()) cfg.name = opt_name;
    if (!opt_out.empty()) cfg.out_dir = opt_out;
    if (opt_epochs >= 0) cfg.trainer.epochs = opt_epochs;
    if (opt_eval_episodes >= 0) cfg.eval_episodes = opt_eval_episodes;
    cfg.validate();
    const silp::RunRecord rec =
        silp::run_experiment(cfg, true, opt_quiet ? nullptr : &std::cout);
    std::cout << silp::summary_json(rec).dump(2) << "\n";
  });

  // --- eval ------------------------------------------------------------------
  std::string eval_checkpoint, eval_config, eval_trace;
  int eval_episodes = 200, eval_collision_type = -1;
  std::uint64_t eval_seed = 12345;

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint, "Agent checkpoint JSON")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--episodes", eval_episodes, "Evaluation episode count");
  eval->add_option("--config", eval_config,
                   "Experiment config supplying the environment")
      ->check(CLI::ExistingFile);
  eval->add_option("--collision-type", eval_collision_type,
                   "Override the environment collision mode")
      ->check(CLI::Range(0, 2));
  eval->add_option("--seed", eval_seed, "Task-sampling seed");
  eval->add_option("--trace-csv", eval_trace,
                   "Write one greedy episode trace to this CSV");
  eval->callback([&] {
    silp::EnvConfig env_cfg;
    if (!eval_config.empty())
      env_cfg = silp::load_experiment(eval_config).trainer.env;
    if (eval_collision_type >= 0)
      env_cfg.collision_mode =
          silp::collision_mode_from_int(eval_collision_type);
    const auto agent = silp::agent_from_checkpoint(
        read_json_file(eval_checkpoint), silp::EnvModel(env_cfg), eval_seed);
    const silp::Policy greedy = [&agent](const silp::EnvState& s) {
      return agent->act_greedy(s);
    };
    silp::ArmEnv env(env_cfg);
    silp::Rng rng(eval_seed);
    const double sr = silp::evaluate_policy(greedy, env, eval_episodes, rng);
    if (!eval_trace.empty()) {
      std::ofstream out(eval_trace);
      if (!out) throw std::runtime_error("cannot write " + eval_trace);
      silp::write_episode_trace(trace_episode(env, greedy, rng), out);
    }
    std::cout << json{{"success_rate", sr}, {"episodes", eval_episodes}}.dump(2)
              << "\n";
  });

  // --- ablate ----------------------------------------------------------------
  std::string abl_config, abl_suite;
  bool abl_quiet = false;

  CLI::App* ablate = app.add_subcommand("ablate", "Run an ablation suite");
  ablate->add_option("--config", abl_config, "Base experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--suite", abl_suite, "Which grid to run")
      ->required()
      ->check(CLI::IsMember(
          {"collision_types", "gp", "filters", "distance_sweep"}));
  ablate->add_flag("--quiet", abl_quiet, "No per-epoch progress lines");
  ablate->callback([&] {
    const silp::ExperimentConfig cfg = silp::load_experiment(abl_config);
    const silp::Table table =
        silp::ablation_suite(silp::suite_from_string(abl_suite), cfg, true,
                             abl_quiet ? nullptr : &std::cout);
    table.write_csv(std::cout);
  });

  // --- collision-model ---------------------------------------------------------
  CLI::App* cm = app.add_subcommand("collision-model",
                                    "Learned collision-checker utilities");
  cm->require_subcommand(1);

  std::string cm_gen_out, cm_gen_config;
  int cm_gen_samples = 20000;
  std::uint64_t cm_gen_seed = 1;
  CLI::App* cm_gen = cm->add_subcommand("gen", "Generate a labeled dataset");
  cm_gen->add_option("--out", cm_gen_out, "Dataset CSV path")->required();
  cm_gen->add_option("--samples", cm_gen_samples, "Sample count")
      ->check(CLI::PositiveNumber);
  cm_gen->add_option("--seed", cm_gen_seed, "Sampling seed");
  cm_gen->add_option("--config", cm_gen_config,
                     "Experiment config supplying the environment")
      ->check(CLI::ExistingFile);
  cm_gen->callback([&] {
    silp::EnvConfig env_cfg;
    if (!cm_gen_config.empty())
      env_cfg = silp::load_experiment(cm_gen_config).trainer.env;
    silp::Rng rng(cm_gen_seed);
    const auto data =
        silp::generate_collision_dataset(cm_gen_samples, env_cfg, rng);
    std::ofstream out(cm_gen_out);
    if (!out) throw std::runtime_error("cannot write " + cm_gen_out);
    silp::dump_dataset_csv(data, out);
    long pos = 0;
    for (const auto& s : data) pos += s.label ? 1 : 0;
    std::cout << json{{"samples", data.size()}, {"positives", pos}}.dump(2)
              << "\n";
  });

  std::string cm_train_data, cm_train_out;
  double cm_train_test_fraction = 0.2;
  int cm_train_epochs = 60;
  std::uint64_t cm_train_seed = 1;
  CLI::App* cm_train = cm->add_subcommand("train", "Train the classifier");
  cm_train->add_option("--data", cm_train_data, "Dataset CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cm_train->add_option("--out", cm_train_out, "Model JSON path")->required();
  cm_train->add_option("--test-fraction", cm_train_test_fraction,
                       "Held-out tail fraction")
      ->check(CLI::Range(0.0, 0.9));
  cm_train->add_option("--epochs", cm_train_epochs, "Max training epochs")
      ->check(CLI::PositiveNumber);
  cm_train->add_option("--seed", cm_train_seed, "Init/shuffle seed");
  cm_train->callback([&] {
    std::ifstream in(cm_train_data);
    if (!in) throw std::runtime_error("cannot open " + cm_train_data);
    const auto data = silp::load_dataset_csv(in, 3);
    const auto [train_set, test_set] =
        silp::split_dataset(data, cm_train_test_fraction);
    silp::CollisionModelConfig mcfg;
    mcfg.max_epochs = cm_train_epochs;
    silp::Rng rng(cm_train_seed);
    silp::CollisionTrainReport report;
    const silp::CollisionClassifier model =
        silp::train_collision_model(train_set, mcfg, rng, &report);
    write_json_file(cm_train_out, model.to_json());
    json out{{"train_samples", train_set.size()},
             {"epochs", report.epochs},
             {"final_train_loss",
              report.train_loss.empty() ? 0.0 : report.train_loss.back()}};
    if (!test_set.empty()) {
      const auto m = silp::evaluate_collision_model(model, test_set);
      out["held_out"] = {{"accuracy", m.accuracy},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"specificity", m.specificity},
                         {"auc", m.auc}};
    }
    std::cout << out.dump(2) << "\n";
  });

  std::string cm_eval_model, cm_eval_data;
  double cm_eval_threshold = 0.5;
  CLI::App* cm_eval = cm->add_subcommand("eval", "Evaluate a trained model");
  cm_eval->add_option("--model", cm_eval_model, "Model JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cm_eval->add_option("--data", cm_eval_data, "Dataset CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cm_eval->add_option("--threshold", cm_eval_threshold,
                      "Decision threshold")
      ->check(CLI::Range(0.0, 1.0));
  cm_eval->callback([&] {
    const auto model =
        silp::CollisionClassifier::from_json(read_json_file(cm_eval_model));
    std::ifstream in(cm_eval_data);
    if (!in) throw std::runtime_error("cannot open " + cm_eval_data);
    const auto data = silp::load_dataset_csv(in, 3);
    const auto m = silp::evaluate_collision_model(model, data, cm_eval_threshold);
    std::cout << json{{"accuracy", m.accuracy},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"specificity", m.specificity},
                      {"auc", m.auc},
                      {"tp", m.tp},
                      {"tn", m.tn},
                      {"fp", m.fp},
                      {"fn", m.fn}}
                     .dump(2)
              << "\n";
  });

  // --- bc-train ----------------------------------------------------------------
  std::string bc_demos, bc_config, bc_out;
  int bc_epochs = 50, bc_batches = 50, bc_eval_episodes = 0;
  std::uint64_t bc_seed = 1;
  CLI::App* bc = app.add_subcommand(
      "bc-train", "Supervised behavior cloning from a demonstration CSV");
  bc->add_option("--demos", bc_demos, "Demonstration CSV (replay dump format)")
      ->required()
      ->check(CLI::ExistingFile);
  bc->add_option("--config", bc_config, "Experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  bc->add_option("--out", bc_out, "Checkpoint JSON path")->required();
  bc->add_option("--epochs", bc_epochs, "Training epochs")
      ->check(CLI::PositiveNumber);
  bc->add_option("--batches", bc_batches, "Gradient steps per epoch")
      ->check(CLI::PositiveNumber);
  bc->add_option("--seed", bc_seed, "Init/sampling seed");
  bc->add_option("--eval-episodes", bc_eval_episodes,
                 "Evaluate the cloned policy on this many fresh tasks");
  bc->callback([&] {
    const silp::ExperimentConfig cfg = silp::load_experiment(bc_config);
    std::ifstream in(bc_demos);
    if (!in) throw std::runtime_error("cannot open " + bc_demos);
    const silp::DemoBuffer demos = silp::ReplayBuffer::load_csv(
        in, cfg.trainer.env.arm.n_joints(), cfg.trainer.demo_capacity);
    std::vector<double> curve;
    const auto agent = silp::bc_train(demos, cfg.trainer, bc_seed, bc_epochs,
                                      bc_batches, &curve);
    write_json_file(bc_out, agent->checkpoint());
    json out{{"demos", demos.size()},
             {"final_loss", curve.empty() ? 0.0 : curve.back()}};
    if (bc_eval_episodes > 0) {
      silp::ArmEnv env(cfg.trainer.env);
      silp::Rng rng(silp::derive_seed(bc_seed, 1000));
      const silp::Policy greedy = [&agent](const silp::EnvState& s) {
        return agent->act_greedy(s);
      };
      out["success_rate"] =
          silp::evaluate_policy(greedy, env, bc_eval_episodes, rng);
    }
    std::cout << out.dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
