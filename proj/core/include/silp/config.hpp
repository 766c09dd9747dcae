#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "silp/trainer.hpp"

namespace silp {

// One named experiment: a trainer configuration run over several seeds, each
// followed by a seeded evaluation pass.
struct ExperimentConfig {
  std::string name = "experiment";
  TrainerConfig trainer;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int eval_episodes = 200;
  std::string out_dir = "runs";

  void validate() const;
};

// JSON (de)serialization. Parsing accepts partial documents - absent keys
// keep their defaults - and rejects unknown keys, wrong types and invalid
// enum strings with std::invalid_argument. to_json always emits the complete
// canonical document, so parse(to_json(c)) is the identity.
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainerConfig& c);
TrainerConfig trainer_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LearnerConfig& c);
LearnerConfig learner_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EnvConfig& c);
EnvConfig env_from_json(const nlohmann::json& j);

// Applies environment-variable overrides to a parsed JSON document. Variables
// named  <prefix><path>  where <path> is a key path with "__" separating the
// segments override the value at that path; the value is parsed as JSON when
// possible and taken as a string otherwise. Examples:
//   SILP_eval_episodes=50
//   SILP_trainer__learner__gamma=0.95
//   SILP_trainer__algo=ddpg
// Unknown paths throw std::invalid_argument (misspelled overrides must not
// pass silently). Returns the number of overrides applied.
int apply_env_overrides(nlohmann::json& doc,
                        const std::string& prefix = "SILP_");

// Reads, overrides (unless disabled), parses and validates a config file.
ExperimentConfig load_experiment(const std::string& path,
                                 bool with_env_overrides = true);

}  // namespace silp
