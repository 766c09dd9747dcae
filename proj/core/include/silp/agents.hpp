#pragma once

#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "silp/env.hpp"
#include "silp/mlp.hpp"
#include "silp/replay.hpp"
#include "silp/rng.hpp"

namespace silp {

enum class AlgoType { kDdpg, kSac };
enum class FilterType { kReward, kQ, kNone };

AlgoType algo_from_string(const std::string& s);
FilterType filter_from_string(const std::string& s);
std::string to_string(AlgoType a);
std::string to_string(FilterType f);

struct LearnerConfig {
  std::vector<int> hidden = {256, 256};
  double gamma = 0.99;
  double tau = 0.005;  // soft target mixing factor
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double init_alpha = 0.2;
  bool auto_alpha = true;    // tune the temperature toward -n_joints entropy
  double ddpg_noise = 0.1;   // exploration noise std (deterministic policy)
  double lambda1 = 1.0;      // weight of the RL gradient
  double lambda2 = 1.0;      // weight of the imitation gradient
  int batch_policy = 128;
  int batch_demo = 128;
  // Lookahead depth of the model-based return used by the reward filter.
  // The general k-step form  R = sum_j gamma^j f_r(...)  is documented, but
  // only k = 1 is implemented and validated.
  int k_return = 1;
  FilterType filter = FilterType::kReward;
  bool bc_sum = true;               // sum imitation errors (vs. batch mean)
  bool truncate_lookahead = false;  // stop the model return at done
  void validate() const;
};

// Column-major minibatch view: one transition per column. `src` keeps the
// originating tuples alive for model-based bookkeeping (filters need full
// states, not just features).
struct Batch {
  Eigen::MatrixXd s;
  Eigen::MatrixXd a;
  Eigen::MatrixXd s_next;
  Eigen::VectorXd r;
  Eigen::VectorXd done;
  std::vector<const Transition*> src;

  int size() const { return static_cast<int>(src.size()); }
};

Batch make_batch(const ReplayBuffer& buf, const std::vector<std::size_t>& idx);
Batch concat_batches(const Batch& a, const Batch& b);

// Deterministic (mean) actions for a batch of states, one per column.
using BatchPolicy = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// --- Model-based one-step returns and demonstration filters ---------------

// R(s_i, a_i) for a stored demo tuple: the stored reward plus the discounted
// model reward of the policy's action at the stored next state,
// r_i + gamma * f_r(s_{i+1}, pi(s_{i+1})).
double demo_one_step_return(const EnvModel& model, const Transition& t,
                            const Policy& mean_policy, double gamma,
                            bool truncate_done);

// R(s_i, pi(s_i)): the same return with both steps priced by the model,
// f_r(s_i, pi(s_i)) + gamma * f_r(s', pi(s')) with s' = f_s(s_i, pi(s_i)).
double policy_one_step_return(const EnvModel& model, const EnvState& s,
                              const Policy& mean_policy, double gamma,
                              bool truncate_done);

// mask on the demo column, 1 iff  R(s_i, a_i) > R(s_i, pi(s_i))  strictly.
std::vector<std::uint8_t> reward_filter(const Batch& demo,
                                        const EnvModel& model,
                                        const BatchPolicy& mean_policy,
                                        double gamma, bool truncate_done);

// Behaviour-cloning alternative: 1 iff Q(s_i, a_i) > Q(s_i, pi(s_i)).
using BatchCritic = std::function<Eigen::VectorXd(const Eigen::MatrixXd& s,
                                                  const Eigen::MatrixXd& a)>;
std::vector<std::uint8_t> q_filter(const Batch& demo,
                                   const BatchPolicy& mean_policy,
                                   const BatchCritic& critic);

// Masked squared-error imitation loss between deterministic policy actions
// and demo actions (columns). sum_form sums over the batch; otherwise the
// mean over all columns (masked ones contribute zero) is taken.
double bc_loss(const Eigen::MatrixXd& policy_actions,
               const Eigen::MatrixXd& demo_actions,
               const std::vector<std::uint8_t>& mask, bool sum_form);

// --- Agents ----------------------------------------------------------------

struct ActorUpdateStats {
  double rl_loss = 0.0;   // policy-gradient surrogate on the policy batch
  double bc_loss = 0.0;   // masked imitation loss (0 without demos)
  int filter_pass = 0;    // demo tuples whose mask is 1
  int demo_count = 0;
  double alpha = 0.0;     // entropy temperature after the update (SAC)
};

// Off-policy actor-critic with an optional filtered imitation term. The
// actor gradient combines the RL surrogate and the imitation loss as
// lambda1 * grad(RL) + lambda2 * grad(BC), with BC restricted to demo tuples
// that pass the configured filter.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual AlgoType algo() const = 0;
  const LearnerConfig& config() const { return cfg_; }
  const EnvModel& env_model() const { return model_; }

  // Exploration action (consumes the agent's rng).
  virtual Action act(const EnvState& s) = 0;
  // Deterministic action for evaluation.
  virtual Action act_greedy(const EnvState& s) const = 0;
  virtual Eigen::MatrixXd mean_actions(const Eigen::MatrixXd& states) const = 0;

  // One gradient step on the critic(s); returns the critic loss.
  virtual double critic_update(const Batch& batch) = 0;
  // One gradient step on the actor (and the temperature, for SAC).
  virtual ActorUpdateStats actor_update(const Batch& pi_batch,
                                        const Batch* demo_batch) = 0;
  // Pure supervised step: the imitation gradient with every mask bit set and
  // the RL term switched off (neither critics nor temperature move). Returns
  // the imitation loss. Equivalent to actor_update with lambda1 = 0 and an
  // all-ones filter mask.
  virtual double bc_update(const Batch& demo) = 0;
  // Polyak-average every target network toward its online twin.
  virtual void soft_update_targets() = 0;

  virtual nlohmann::json checkpoint() const = 0;
  virtual void restore(const nlohmann::json& j) = 0;

  std::vector<std::uint8_t> filter_demos(const Batch& demo) const;

 protected:
  Agent(LearnerConfig cfg, EnvModel model, std::uint64_t seed);
  virtual BatchCritic filter_critic() const = 0;

  LearnerConfig cfg_;
  EnvModel model_;
  Rng rng_;
};

std::unique_ptr<Agent> make_agent(AlgoType algo, int state_dim, int action_dim,
                                  const LearnerConfig& cfg,
                                  const EnvModel& model, std::uint64_t seed);
std::unique_ptr<Agent> agent_from_checkpoint(const nlohmann::json& j,
                                             const EnvModel& model,
                                             std::uint64_t seed);

// Squashed-Gaussian policy with twin critics and entropy regularization.
class SacAgent : public Agent {
 public:
  SacAgent(int state_dim, int action_dim, LearnerConfig cfg, EnvModel model,
           std::uint64_t seed);

  AlgoType algo() const override { return AlgoType::kSac; }
  Action act(const EnvState& s) override;
  Action act_greedy(const EnvState& s) const override;
  Eigen::MatrixXd mean_actions(const Eigen::MatrixXd& states) const override;
  double critic_update(const Batch& batch) override;
  ActorUpdateStats actor_update(const Batch& pi_batch,
                                const Batch* demo_batch) override;
  double bc_update(const Batch& demo) override;
  void soft_update_targets() override;
  nlohmann::json checkpoint() const override;
  void restore(const nlohmann::json& j) override;

  // Bootstrap targets r + gamma (1-done) (min target Q - alpha log pi);
  // consumes the agent rng for the next-state action sample.
  Eigen::VectorXd critic_targets(const Batch& batch);
  // Twin MSE against fixed targets; gradients accumulate when requested.
  double critic_loss(const Batch& batch, const Eigen::VectorXd& targets,
                     Mlp::Grads* g1, Mlp::Grads* g2) const;
  // Combined actor objective with externally fixed exploration noise
  // (action_dim x batch standard normals), for updates and gradient checks.
  double actor_loss(const Batch& pi_batch, const Batch* demo_batch,
                    const std::vector<std::uint8_t>* mask,
                    const Eigen::MatrixXd& eps, Mlp::Grads* grads,
                    double* rl_part = nullptr, double* bc_part = nullptr,
                    double* mean_logpi = nullptr) const;

  Mlp& actor() { return actor_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  double alpha() const { return std::exp(log_alpha_); }

 protected:
  BatchCritic filter_critic() const override;

 private:
  struct PolicySample;
  PolicySample sample_policy(const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& eps) const;

  Mlp actor_, q1_, q2_, q1_target_, q2_target_;
  Adam actor_opt_, q1_opt_, q2_opt_;
  double log_alpha_ = 0.0;
  AdamScalar alpha_opt_;
  double target_entropy_ = 0.0;
};

// Deterministic-policy counterpart with a single critic and target nets for
// both actor and critic.
class DdpgAgent : public Agent {
 public:
  DdpgAgent(int state_dim, int action_dim, LearnerConfig cfg, EnvModel model,
            std::uint64_t seed);

  AlgoType algo() const override { return AlgoType::kDdpg; }
  Action act(const EnvState& s) override;
  Action act_greedy(const EnvState& s) const override;
  Eigen::MatrixXd mean_actions(const Eigen::MatrixXd& states) const override;
  double critic_update(const Batch& batch) override;
  ActorUpdateStats actor_update(const Batch& pi_batch,
                                const Batch* demo_batch) override;
  double bc_update(const Batch& demo) override;
  void soft_update_targets() override;
  nlohmann::json checkpoint() const override;
  void restore(const nlohmann::json& j) override;

  Eigen::VectorXd critic_targets(const Batch& batch) const;
  double critic_loss(const Batch& batch, const Eigen::VectorXd& targets,
                     Mlp::Grads* g) const;
  double actor_loss(const Batch& pi_batch, const Batch* demo_batch,
                    const std::vector<std::uint8_t>* mask, Mlp::Grads* grads,
                    double* rl_part = nullptr, double* bc_part = nullptr) const;

  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }

 protected:
  BatchCritic filter_critic() const override;

 private:
  Mlp actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;
};

// theta_target <- (1 - tau) theta_target + tau theta, layer by layer.
void polyak_update(Mlp& target, const Mlp& online, double tau);

}  // namespace silp
