#include "silp/agents.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace silp {

namespace {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kSquashEps = 1e-6;  // keeps log(1 - tanh^2) finite
constexpr double kLog2Pi = 1.8378770664093453;

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("training error: non-finite ") +
                             what + " (" + std::to_string(v) + ")");
}

Eigen::MatrixXd concat_state_action(const Eigen::MatrixXd& s,
                                    const Eigen::MatrixXd& a) {
  Eigen::MatrixXd x(s.rows() + a.rows(), s.cols());
  x.topRows(s.rows()) = s;
  x.bottomRows(a.rows()) = a;
  return x;
}

// One model step priced like the live environment: reward of executing a
// from s, plus whether that step would have ended the episode.
struct ModelStep {
  EnvState s_next;
  double r = 0.0;
  bool done = false;
};

ModelStep model_step_reward(const EnvModel& model, const EnvState& s,
                            const Action& a) {
  ModelStep out;
  out.s_next = model.step_state(s, a);
  if (model.motion_in_collision(s, out.s_next)) {
    out.r = kCollisionReward;
    out.done =
        model.config().collision_mode == CollisionMode::kTerminate;
    return out;
  }
  const auto [r, done] = model.reward(s, out.s_next);
  out.r = r;
  out.done = done;
  return out;
}

}  // namespace

AlgoType algo_from_string(const std::string& s) {
  if (s == "ddpg") return AlgoType::kDdpg;
  if (s == "sac") return AlgoType::kSac;
  throw std::invalid_argument("unknown algorithm: " + s);
}

FilterType filter_from_string(const std::string& s) {
  if (s == "reward") return FilterType::kReward;
  if (s == "q") return FilterType::kQ;
  if (s == "none") return FilterType::kNone;
  throw std::invalid_argument("unknown filter: " + s);
}

std::string to_string(AlgoType a) {
  return a == AlgoType::kDdpg ? "ddpg" : "sac";
}

std::string to_string(FilterType f) {
  switch (f) {
    case FilterType::kReward: return "reward";
    case FilterType::kQ: return "q";
    default: return "none";
  }
}

void LearnerConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("LearnerConfig: gamma must be in [0,1]");
  if (lambda1 < 0.0 || lambda2 < 0.0)
    throw std::invalid_argument("LearnerConfig: lambda weights must be >= 0");
  if (k_return != 1)
    throw std::invalid_argument(
        "LearnerConfig: only the one-step return (k = 1) is supported");
  if (batch_policy <= 0 || batch_demo <= 0)
    throw std::invalid_argument("LearnerConfig: batch sizes must be positive");
  if (hidden.empty())
    throw std::invalid_argument("LearnerConfig: need at least one hidden layer");
  if (tau <= 0.0 || tau > 1.0)
    throw std::invalid_argument("LearnerConfig: tau must be in (0,1]");
}

Batch make_batch(const ReplayBuffer& buf, const std::vector<std::size_t>& idx) {
  Batch b;
  if (idx.empty()) return b;
  const int state_dim = buf[idx[0]].s.dim();
  const int act_dim = static_cast<int>(buf[idx[0]].a.size());
  const int n = static_cast<int>(idx.size());
  b.s.resize(state_dim, n);
  b.a.resize(act_dim, n);
  b.s_next.resize(state_dim, n);
  b.r.resize(n);
  b.done.resize(n);
  b.src.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = buf[idx[i]];
    t.s.flatten_into(b.s.col(i));
    b.a.col(i) = t.a;
    t.s_next.flatten_into(b.s_next.col(i));
    b.r[i] = t.r;
    b.done[i] = t.done ? 1.0 : 0.0;
    b.src[i] = &t;
  }
  return b;
}

Batch concat_batches(const Batch& a, const Batch& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  Batch out;
  const int n = a.size() + b.size();
  out.s.resize(a.s.rows(), n);
  out.s << a.s, b.s;
  out.a.resize(a.a.rows(), n);
  out.a << a.a, b.a;
  out.s_next.resize(a.s_next.rows(), n);
  out.s_next << a.s_next, b.s_next;
  out.r.resize(n);
  out.r << a.r, b.r;
  out.done.resize(n);
  out.done << a.done, b.done;
  out.src = a.src;
  out.src.insert(out.src.end(), b.src.begin(), b.src.end());
  return out;
}

double demo_one_step_return(const EnvModel& model, const Transition& t,
                            const Policy& mean_policy, double gamma,
                            bool truncate_done) {
  if (truncate_done && t.done) return t.r;
  const Action a_next = mean_policy(t.s_next);
  return t.r + gamma * model.action_reward(t.s_next, a_next);
}

double policy_one_step_return(const EnvModel& model, const EnvState& s,
                              const Policy& mean_policy, double gamma,
                              bool truncate_done) {
  const Action a0 = mean_policy(s);
  const ModelStep first = model_step_reward(model, s, a0);
  if (truncate_done && first.done) return first.r;
  const Action a1 = mean_policy(first.s_next);
  return first.r + gamma * model.action_reward(first.s_next, a1);
}

std::vector<std::uint8_t> reward_filter(const Batch& demo,
                                        const EnvModel& model,
                                        const BatchPolicy& mean_policy,
                                        double gamma, bool truncate_done) {
  const int n = demo.size();
  std::vector<std::uint8_t> mask(n, 0);
  if (n == 0) return mask;

  // Three batched policy evaluations: pi(s_i), pi(s_{i+1}) and pi(s'_hat)
  // where s'_hat is the model's landing state of pi(s_i).
  const Eigen::MatrixXd pi_s = mean_policy(demo.s);
  const Eigen::MatrixXd pi_next = mean_policy(demo.s_next);

  std::vector<ModelStep> first(n);
  Eigen::MatrixXd shat(demo.s.rows(), n);
  for (int i = 0; i < n; ++i) {
    first[i] = model_step_reward(model, demo.src[i]->s, pi_s.col(i));
    first[i].s_next.flatten_into(shat.col(i));
  }
  const Eigen::MatrixXd pi_shat = mean_policy(shat);

  for (int i = 0; i < n; ++i) {
    const Transition& t = *demo.src[i];
    double r_demo = t.r;
    if (!(truncate_done && t.done))
      r_demo += gamma * model.action_reward(t.s_next, pi_next.col(i));

    double r_policy = first[i].r;
    if (!(truncate_done && first[i].done))
      r_policy +=
          gamma * model.action_reward(first[i].s_next, pi_shat.col(i));

    mask[i] = r_demo > r_policy ? 1 : 0;
  }
  return mask;
}

std::vector<std::uint8_t> q_filter(const Batch& demo,
                                   const BatchPolicy& mean_policy,
                                   const BatchCritic& critic) {
  const int n = demo.size();
  std::vector<std::uint8_t> mask(n, 0);
  if (n == 0) return mask;
  const Eigen::VectorXd q_demo = critic(demo.s, demo.a);
  const Eigen::VectorXd q_policy = critic(demo.s, mean_policy(demo.s));
  for (int i = 0; i < n; ++i) mask[i] = q_demo[i] > q_policy[i] ? 1 : 0;
  return mask;
}

double bc_loss(const Eigen::MatrixXd& policy_actions,
               const Eigen::MatrixXd& demo_actions,
               const std::vector<std::uint8_t>& mask, bool sum_form) {
  const int n = static_cast<int>(policy_actions.cols());
  if (demo_actions.cols() != n ||
      static_cast<int>(mask.size()) != n)
    throw std::invalid_argument("bc_loss: batch size mismatch");
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    loss += (policy_actions.col(i) - demo_actions.col(i)).squaredNorm();
  }
  if (!sum_form && n > 0) loss /= n;
  return loss;
}

// --- Agent base -------------------------------------------------------------

Agent::Agent(LearnerConfig cfg, EnvModel model, std::uint64_t seed)
    : cfg_(std::move(cfg)), model_(std::move(model)), rng_(seed) {
  cfg_.validate();
}

std::vector<std::uint8_t> Agent::filter_demos(const Batch& demo) const {
  switch (cfg_.filter) {
    case FilterType::kReward:
      return reward_filter(
          demo, model_,
          [this](const Eigen::MatrixXd& s) { return mean_actions(s); },
          cfg_.gamma, cfg_.truncate_lookahead);
    case FilterType::kQ:
      return q_filter(
          demo,
          [this](const Eigen::MatrixXd& s) { return mean_actions(s); },
          filter_critic());
    case FilterType::kNone:
    default:
      // "none" means demonstrations are not cloned at all (they reach the
      // learner through the replay buffer instead).
      return std::vector<std::uint8_t>(demo.size(), 0);
  }
}

// --- SAC --------------------------------------------------------------------

struct SacAgent::PolicySample {
  Mlp::Cache cache;
  Eigen::MatrixXd mean, log_std, std, a;
  Eigen::RowVectorXd logp;
  Eigen::ArrayXXd clamp_pass;  // 1 where log_std was not clamped
};

SacAgent::SacAgent(int state_dim, int action_dim, LearnerConfig cfg,
                   EnvModel model, std::uint64_t seed)
    : Agent(std::move(cfg), std::move(model), derive_seed(seed, 0)) {
  std::vector<int> actor_sizes{state_dim};
  actor_sizes.insert(actor_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  actor_sizes.push_back(2 * action_dim);
  std::vector<int> critic_sizes{state_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), cfg_.hidden.begin(),
                      cfg_.hidden.end());
  critic_sizes.push_back(1);

  actor_ = Mlp(actor_sizes);
  q1_ = Mlp(critic_sizes);
  q2_ = Mlp(critic_sizes);
  Rng init(derive_seed(seed, 1));
  actor_.init(init);
  q1_.init(init);
  q2_.init(init);
  q1_target_ = q1_;
  q2_target_ = q2_;

  actor_opt_ = Adam(actor_, cfg_.actor_lr);
  q1_opt_ = Adam(q1_, cfg_.critic_lr);
  q2_opt_ = Adam(q2_, cfg_.critic_lr);
  log_alpha_ = std::log(cfg_.init_alpha);
  alpha_opt_ = AdamScalar(cfg_.alpha_lr);
  target_entropy_ = -static_cast<double>(action_dim);
}

SacAgent::PolicySample SacAgent::sample_policy(
    const Eigen::MatrixXd& states, const Eigen::MatrixXd& eps) const {
  PolicySample ps;
  const Eigen::MatrixXd out = actor_.forward(states, ps.cache);
  const int act_dim = static_cast<int>(out.rows()) / 2;
  ps.mean = out.topRows(act_dim);
  const Eigen::MatrixXd raw = out.bottomRows(act_dim);
  ps.clamp_pass =
      ((raw.array() > kLogStdMin) && (raw.array() < kLogStdMax)).cast<double>();
  ps.log_std = raw.array().max(kLogStdMin).min(kLogStdMax).matrix();
  ps.std = ps.log_std.array().exp().matrix();
  const Eigen::MatrixXd u = ps.mean + ps.std.cwiseProduct(eps);
  ps.a = u.array().tanh().matrix();

  // log pi(a|s) of the squashed Gaussian, summed over action dims.
  const Eigen::ArrayXXd gauss =
      -0.5 * eps.array().square() - ps.log_std.array() - 0.5 * kLog2Pi;
  const Eigen::ArrayXXd squash =
      (1.0 - ps.a.array().square() + kSquashEps).log();
  ps.logp = (gauss - squash).colwise().sum().matrix();
  return ps;
}

Action SacAgent::act(const EnvState& s) {
  const int act_dim = actor_.out_dim() / 2;
  Eigen::MatrixXd eps(act_dim, 1);
  for (int i = 0; i < act_dim; ++i) eps(i, 0) = rng_.normal();
  const PolicySample ps = sample_policy(s.flatten(), eps);
  return ps.a.col(0);
}

Action SacAgent::act_greedy(const EnvState& s) const {
  return mean_actions(s.flatten()).col(0);
}

Eigen::MatrixXd SacAgent::mean_actions(const Eigen::MatrixXd& states) const {
  const Eigen::MatrixXd out = actor_.forward(states);
  const int act_dim = static_cast<int>(out.rows()) / 2;
  return out.topRows(act_dim).array().tanh().matrix();
}

Eigen::VectorXd SacAgent::critic_targets(const Batch& batch) {
  const int n = batch.size();
  const int act_dim = actor_.out_dim() / 2;
  Eigen::MatrixXd eps(act_dim, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < act_dim; ++i) eps(i, j) = rng_.normal();

  const PolicySample ps = sample_policy(batch.s_next, eps);
  const Eigen::MatrixXd in = concat_state_action(batch.s_next, ps.a);
  const Eigen::RowVectorXd qt1 = q1_target_.forward(in);
  const Eigen::RowVectorXd qt2 = q2_target_.forward(in);
  const Eigen::ArrayXd qmin = qt1.cwiseMin(qt2).transpose().array() -
                              alpha() * ps.logp.transpose().array();
  return (batch.r.array() + cfg_.gamma * (1.0 - batch.done.array()) * qmin)
      .matrix();
}

double SacAgent::critic_loss(const Batch& batch, const Eigen::VectorXd& targets,
                             Mlp::Grads* g1, Mlp::Grads* g2) const {
  const int n = batch.size();
  const Eigen::MatrixXd in = concat_state_action(batch.s, batch.a);
  Mlp::Cache c1, c2;
  const Eigen::RowVectorXd o1 = q1_.forward(in, c1);
  const Eigen::RowVectorXd o2 = q2_.forward(in, c2);
  const Eigen::RowVectorXd d1 = o1 - targets.transpose();
  const Eigen::RowVectorXd d2 = o2 - targets.transpose();
  const double loss =
      (d1.squaredNorm() + d2.squaredNorm()) / static_cast<double>(n);
  if (g1) q1_.backward(c1, 2.0 / n * d1, *g1);
  if (g2) q2_.backward(c2, 2.0 / n * d2, *g2);
  return loss;
}

double SacAgent::critic_update(const Batch& batch) {
  if (batch.size() == 0)
    throw std::invalid_argument("critic_update: empty batch");
  const Eigen::VectorXd y = critic_targets(batch);
  Mlp::Grads g1 = q1_.zero_grads();
  Mlp::Grads g2 = q2_.zero_grads();
  const double loss = critic_loss(batch, y, &g1, &g2);
  check_finite(loss, "critic loss");
  q1_opt_.step(q1_, g1);
  q2_opt_.step(q2_, g2);
  return loss;
}

double SacAgent::actor_loss(const Batch& pi_batch, const Batch* demo_batch,
                            const std::vector<std::uint8_t>* mask,
                            const Eigen::MatrixXd& eps, Mlp::Grads* grads,
                            double* rl_part, double* bc_part,
                            double* mean_logpi) const {
  const int n = pi_batch.size();
  const int act_dim = actor_.out_dim() / 2;

  const PolicySample ps = sample_policy(pi_batch.s, eps);
  const Eigen::MatrixXd in = concat_state_action(pi_batch.s, ps.a);
  Mlp::Cache c1, c2;
  const Eigen::RowVectorXd o1 = q1_.forward(in, c1);
  const Eigen::RowVectorXd o2 = q2_.forward(in, c2);
  const Eigen::RowVectorXd qmin = o1.cwiseMin(o2);

  const double a_coef = alpha();
  const double rl =
      (a_coef * ps.logp.array() - qmin.array()).mean();
  if (rl_part) *rl_part = rl;
  if (mean_logpi) *mean_logpi = ps.logp.mean();

  double bc = 0.0;
  Eigen::MatrixXd demo_pi;
  Mlp::Cache demo_cache;
  if (demo_batch && demo_batch->size() > 0) {
    if (!mask || static_cast<int>(mask->size()) != demo_batch->size())
      throw std::invalid_argument("actor_loss: mask/demo size mismatch");
    const Eigen::MatrixXd out = actor_.forward(demo_batch->s, demo_cache);
    demo_pi = out.topRows(act_dim).array().tanh().matrix();
    bc = silp::bc_loss(demo_pi, demo_batch->a, *mask, cfg_.bc_sum);
  }
  if (bc_part) *bc_part = bc;

  const double total = cfg_.lambda1 * rl + cfg_.lambda2 * bc;
  if (!grads) return total;

  // --- RL term gradients ---
  // Q path: output grad -lambda1/n on the per-sample minimum critic.
  Eigen::RowVectorXd dy1(n), dy2(n);
  for (int i = 0; i < n; ++i) {
    const bool first = o1[i] <= o2[i];
    dy1[i] = first ? -cfg_.lambda1 / n : 0.0;
    dy2[i] = first ? 0.0 : -cfg_.lambda1 / n;
  }
  Mlp::Grads scratch1 = q1_.zero_grads();  // critic params not updated here
  Mlp::Grads scratch2 = q2_.zero_grads();
  Eigen::MatrixXd dx1, dx2;
  q1_.backward(c1, dy1, scratch1, &dx1);
  q2_.backward(c2, dy2, scratch2, &dx2);
  const Eigen::ArrayXXd da_q =
      dx1.bottomRows(act_dim).array() + dx2.bottomRows(act_dim).array();

  // Entropy path: d logpi / du through the squash correction.
  const Eigen::ArrayXXd one_m_a2 = 1.0 - ps.a.array().square();
  const double c = cfg_.lambda1 * a_coef / n;
  const Eigen::ArrayXXd dlogp_du =
      2.0 * ps.a.array() * one_m_a2 / (one_m_a2 + kSquashEps);
  const Eigen::ArrayXXd g_u = c * dlogp_du + da_q * one_m_a2;

  Eigen::MatrixXd dy_actor(2 * act_dim, n);
  dy_actor.topRows(act_dim) = g_u.matrix();
  dy_actor.bottomRows(act_dim) =
      ((g_u * ps.std.array() * eps.array() - c) * ps.clamp_pass).matrix();
  actor_.backward(ps.cache, dy_actor, *grads);

  // --- BC term gradients ---
  if (demo_batch && demo_batch->size() > 0) {
    const int m = demo_batch->size();
    const double scale = cfg_.lambda2 * (cfg_.bc_sum ? 1.0 : 1.0 / m);
    Eigen::MatrixXd dy_demo =
        Eigen::MatrixXd::Zero(2 * act_dim, m);
    for (int i = 0; i < m; ++i) {
      if (!(*mask)[i]) continue;
      const Eigen::ArrayXd diff =
          demo_pi.col(i).array() - demo_batch->a.col(i).array();
      dy_demo.col(i).head(act_dim) =
          (scale * 2.0 * diff * (1.0 - demo_pi.col(i).array().square()))
              .matrix();
    }
    actor_.backward(demo_cache, dy_demo, *grads);
  }
  return total;
}

ActorUpdateStats SacAgent::actor_update(const Batch& pi_batch,
                                        const Batch* demo_batch) {
  if (pi_batch.size() == 0)
    throw std::invalid_argument("actor_update: empty policy batch");
  ActorUpdateStats stats;
  std::vector<std::uint8_t> mask;
  if (demo_batch && demo_batch->size() > 0) {
    mask = filter_demos(*demo_batch);
    stats.demo_count = demo_batch->size();
    for (const auto m : mask) stats.filter_pass += m;
  }

  const int act_dim = actor_.out_dim() / 2;
  Eigen::MatrixXd eps(act_dim, pi_batch.size());
  for (int j = 0; j < pi_batch.size(); ++j)
    for (int i = 0; i < act_dim; ++i) eps(i, j) = rng_.normal();

  Mlp::Grads grads = actor_.zero_grads();
  double mean_logpi = 0.0;
  const double loss =
      actor_loss(pi_batch, demo_batch, &mask, eps, &grads, &stats.rl_loss,
                 &stats.bc_loss, &mean_logpi);
  check_finite(loss, "actor loss");
  actor_opt_.step(actor_, grads);

  if (cfg_.auto_alpha) {
    // d/d(log alpha) of  -alpha * (logpi + target_entropy).
    const double grad = -alpha() * (mean_logpi + target_entropy_);
    alpha_opt_.step(log_alpha_, grad);
  }
  stats.alpha = alpha();
  return stats;
}

double SacAgent::bc_update(const Batch& demo) {
  if (demo.size() == 0) throw std::invalid_argument("bc_update: empty batch");
  const double saved_lambda1 = cfg_.lambda1;
  cfg_.lambda1 = 0.0;  // restored below; kills the RL term exactly
  const std::vector<std::uint8_t> mask(demo.size(), 1);
  const int act_dim = actor_.out_dim() / 2;
  const Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(act_dim, demo.size());
  Mlp::Grads grads = actor_.zero_grads();
  double bc_part = 0.0;
  actor_loss(demo, &demo, &mask, eps, &grads, nullptr, &bc_part, nullptr);
  cfg_.lambda1 = saved_lambda1;
  check_finite(bc_part, "bc loss");
  actor_opt_.step(actor_, grads);
  return bc_part;
}

void SacAgent::soft_update_targets() {
  polyak_update(q1_target_, q1_, cfg_.tau);
  polyak_update(q2_target_, q2_, cfg_.tau);
}

BatchCritic SacAgent::filter_critic() const {
  return [this](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd in = concat_state_action(s, a);
    const Eigen::RowVectorXd o1 = q1_.forward(in);
    const Eigen::RowVectorXd o2 = q2_.forward(in);
    return Eigen::VectorXd(o1.cwiseMin(o2).transpose());
  };
}

// --- DDPG -------------------------------------------------------------------

DdpgAgent::DdpgAgent(int state_dim, int action_dim, LearnerConfig cfg,
                     EnvModel model, std::uint64_t seed)
    : Agent(std::move(cfg), std::move(model), derive_seed(seed, 0)) {
  std::vector<int> actor_sizes{state_dim};
  actor_sizes.insert(actor_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  actor_sizes.push_back(action_dim);
  std::vector<int> critic_sizes{state_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), cfg_.hidden.begin(),
                      cfg_.hidden.end());
  critic_sizes.push_back(1);

  actor_ = Mlp(actor_sizes);
  critic_ = Mlp(critic_sizes);
  Rng init(derive_seed(seed, 1));
  actor_.init(init);
  critic_.init(init);
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_opt_ = Adam(actor_, cfg_.actor_lr);
  critic_opt_ = Adam(critic_, cfg_.critic_lr);
}

Action DdpgAgent::act(const EnvState& s) {
  Action a = act_greedy(s);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a[i] = std::clamp(a[i] + rng_.normal(0.0, cfg_.ddpg_noise), -1.0, 1.0);
  return a;
}

Action DdpgAgent::act_greedy(const EnvState& s) const {
  return mean_actions(s.flatten()).col(0);
}

Eigen::MatrixXd DdpgAgent::mean_actions(const Eigen::MatrixXd& states) const {
  return actor_.forward(states).array().tanh().matrix();
}

Eigen::VectorXd DdpgAgent::critic_targets(const Batch& batch) const {
  const Eigen::MatrixXd a_next =
      actor_target_.forward(batch.s_next).array().tanh().matrix();
  const Eigen::RowVectorXd q_next =
      critic_target_.forward(concat_state_action(batch.s_next, a_next));
  return (batch.r.array() + cfg_.gamma * (1.0 - batch.done.array()) *
                                q_next.transpose().array())
      .matrix();
}

double DdpgAgent::critic_loss(const Batch& batch,
                              const Eigen::VectorXd& targets,
                              Mlp::Grads* g) const {
  const int n = batch.size();
  Mlp::Cache cache;
  const Eigen::RowVectorXd out =
      critic_.forward(concat_state_action(batch.s, batch.a), cache);
  const Eigen::RowVectorXd diff = out - targets.transpose();
  const double loss = diff.squaredNorm() / static_cast<double>(n);
  if (g) critic_.backward(cache, 2.0 / n * diff, *g);
  return loss;
}

double DdpgAgent::critic_update(const Batch& batch) {
  if (batch.size() == 0)
    throw std::invalid_argument("critic_update: empty batch");
  const Eigen::VectorXd y = critic_targets(batch);
  Mlp::Grads g = critic_.zero_grads();
  const double loss = critic_loss(batch, y, &g);
  check_finite(loss, "critic loss");
  critic_opt_.step(critic_, g);
  return loss;
}

double DdpgAgent::actor_loss(const Batch& pi_batch, const Batch* demo_batch,
                             const std::vector<std::uint8_t>* mask,
                             Mlp::Grads* grads, double* rl_part,
                             double* bc_part) const {
  const int n = pi_batch.size();
  const int act_dim = actor_.out_dim();

  Mlp::Cache actor_cache;
  const Eigen::MatrixXd raw = actor_.forward(pi_batch.s, actor_cache);
  const Eigen::MatrixXd a = raw.array().tanh().matrix();
  Mlp::Cache critic_cache;
  const Eigen::RowVectorXd q =
      critic_.forward(concat_state_action(pi_batch.s, a), critic_cache);

  const double rl = -q.mean();
  if (rl_part) *rl_part = rl;

  double bc = 0.0;
  Eigen::MatrixXd demo_pi;
  Mlp::Cache demo_cache;
  if (demo_batch && demo_batch->size() > 0) {
    if (!mask || static_cast<int>(mask->size()) != demo_batch->size())
      throw std::invalid_argument("actor_loss: mask/demo size mismatch");
    demo_pi = actor_.forward(demo_batch->s, demo_cache).array().tanh().matrix();
    bc = silp::bc_loss(demo_pi, demo_batch->a, *mask, cfg_.bc_sum);
  }
  if (bc_part) *bc_part = bc;

  const double total = cfg_.lambda1 * rl + cfg_.lambda2 * bc;
  if (!grads) return total;

  Mlp::Grads scratch = critic_.zero_grads();
  Eigen::MatrixXd dx;
  const Eigen::RowVectorXd dyq =
      Eigen::RowVectorXd::Constant(n, -cfg_.lambda1 / n);
  critic_.backward(critic_cache, dyq, scratch, &dx);
  const Eigen::MatrixXd dy_actor =
      (dx.bottomRows(act_dim).array() * (1.0 - a.array().square())).matrix();
  actor_.backward(actor_cache, dy_actor, *grads);

  if (demo_batch && demo_batch->size() > 0) {
    const int m = demo_batch->size();
    const double scale = cfg_.lambda2 * (cfg_.bc_sum ? 1.0 : 1.0 / m);
    Eigen::MatrixXd dy_demo = Eigen::MatrixXd::Zero(act_dim, m);
    for (int i = 0; i < m; ++i) {
      if (!(*mask)[i]) continue;
      const Eigen::ArrayXd diff =
          demo_pi.col(i).array() - demo_batch->a.col(i).array();
      dy_demo.col(i) =
          (scale * 2.0 * diff * (1.0 - demo_pi.col(i).array().square()))
              .matrix();
    }
    actor_.backward(demo_cache, dy_demo, *grads);
  }
  return total;
}

ActorUpdateStats DdpgAgent::actor_update(const Batch& pi_batch,
                                         const Batch* demo_batch) {
  if (pi_batch.size() == 0)
    throw std::invalid_argument("actor_update: empty policy batch");
  ActorUpdateStats stats;
  std::vector<std::uint8_t> mask;
  if (demo_batch && demo_batch->size() > 0) {
    mask = filter_demos(*demo_batch);
    stats.demo_count = demo_batch->size();
    for (const auto m : mask) stats.filter_pass += m;
  }
  Mlp::Grads grads = actor_.zero_grads();
  const double loss = actor_loss(pi_batch, demo_batch, &mask, &grads,
                                 &stats.rl_loss, &stats.bc_loss);
  check_finite(loss, "actor loss");
  actor_opt_.step(actor_, grads);
  return stats;
}

double DdpgAgent::bc_update(const Batch& demo) {
  if (demo.size() == 0) throw std::invalid_argument("bc_update: empty batch");
  const double saved_lambda1 = cfg_.lambda1;
  cfg_.lambda1 = 0.0;  // restored below; kills the RL term exactly
  const std::vector<std::uint8_t> mask(demo.size(), 1);
  Mlp::Grads grads = actor_.zero_grads();
  double bc_part = 0.0;
  actor_loss(demo, &demo, &mask, &grads, nullptr, &bc_part);
  cfg_.lambda1 = saved_lambda1;
  check_finite(bc_part, "bc loss");
  actor_opt_.step(actor_, grads);
  return bc_part;
}

void DdpgAgent::soft_update_targets() {
  polyak_update(actor_target_, actor_, cfg_.tau);
  polyak_update(critic_target_, critic_, cfg_.tau);
}

BatchCritic DdpgAgent::filter_critic() const {
  return [this](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
    return Eigen::VectorXd(
        critic_.forward(concat_state_action(s, a)).transpose());
  };
}

// --- serialization & factory ------------------------------------------------

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  auto& tw = target.weights();
  auto& tb = target.biases();
  const auto& ow = online.weights();
  const auto& ob = online.biases();
  for (std::size_t l = 0; l < tw.size(); ++l) {
    tw[l] = (1.0 - tau) * tw[l] + tau * ow[l];
    tb[l] = (1.0 - tau) * tb[l] + tau * ob[l];
  }
}

namespace {

nlohmann::json learner_to_json(const LearnerConfig& c) {
  return nlohmann::json{{"hidden", c.hidden},
                        {"gamma", c.gamma},
                        {"tau", c.tau},
                        {"actor_lr", c.actor_lr},
                        {"critic_lr", c.critic_lr},
                        {"alpha_lr", c.alpha_lr},
                        {"init_alpha", c.init_alpha},
                        {"auto_alpha", c.auto_alpha},
                        {"ddpg_noise", c.ddpg_noise},
                        {"lambda1", c.lambda1},
                        {"lambda2", c.lambda2},
                        {"batch_policy", c.batch_policy},
                        {"batch_demo", c.batch_demo},
                        {"k_return", c.k_return},
                        {"filter", to_string(c.filter)},
                        {"bc_sum", c.bc_sum},
                        {"truncate_lookahead", c.truncate_lookahead}};
}

LearnerConfig learner_from_json(const nlohmann::json& j) {
  LearnerConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.gamma = j.value("gamma", c.gamma);
  c.tau = j.value("tau", c.tau);
  c.actor_lr = j.value("actor_lr", c.actor_lr);
  c.critic_lr = j.value("critic_lr", c.critic_lr);
  c.alpha_lr = j.value("alpha_lr", c.alpha_lr);
  c.init_alpha = j.value("init_alpha", c.init_alpha);
  c.auto_alpha = j.value("auto_alpha", c.auto_alpha);
  c.ddpg_noise = j.value("ddpg_noise", c.ddpg_noise);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.batch_policy = j.value("batch_policy", c.batch_policy);
  c.batch_demo = j.value("batch_demo", c.batch_demo);
  c.k_return = j.value("k_return", c.k_return);
  c.filter = filter_from_string(j.value("filter", to_string(c.filter)));
  c.bc_sum = j.value("bc_sum", c.bc_sum);
  c.truncate_lookahead = j.value("truncate_lookahead", c.truncate_lookahead);
  c.validate();
  return c;
}

}  // namespace

nlohmann::json SacAgent::checkpoint() const {
  return nlohmann::json{{"format", 1},
                        {"algo", "sac"},
                        {"learner", learner_to_json(cfg_)},
                        {"actor", actor_.to_json()},
                        {"q1", q1_.to_json()},
                        {"q2", q2_.to_json()},
                        {"q1_target", q1_target_.to_json()},
                        {"q2_target", q2_target_.to_json()},
                        {"log_alpha", log_alpha_}};
}

void SacAgent::restore(const nlohmann::json& j) {
  if (j.at("algo").get<std::string>() != "sac")
    throw std::runtime_error("checkpoint algo mismatch (expected sac)");
  actor_ = Mlp::from_json(j.at("actor"));
  q1_ = Mlp::from_json(j.at("q1"));
  q2_ = Mlp::from_json(j.at("q2"));
  q1_target_ = Mlp::from_json(j.at("q1_target"));
  q2_target_ = Mlp::from_json(j.at("q2_target"));
  log_alpha_ = j.at("log_alpha").get<double>();
  actor_opt_ = Adam(actor_, cfg_.actor_lr);
  q1_opt_ = Adam(q1_, cfg_.critic_lr);
  q2_opt_ = Adam(q2_, cfg_.critic_lr);
}

nlohmann::json DdpgAgent::checkpoint() const {
  return nlohmann::json{{"format", 1},
                        {"algo", "ddpg"},
                        {"learner", learner_to_json(cfg_)},
                        {"actor", actor_.to_json()},
                        {"critic", critic_.to_json()},
                        {"actor_target", actor_target_.to_json()},
                        {"critic_target", critic_target_.to_json()}};
}

void DdpgAgent::restore(const nlohmann::json& j) {
  if (j.at("algo").get<std::string>() != "ddpg")
    throw std::runtime_error("checkpoint algo mismatch (expected ddpg)");
  actor_ = Mlp::from_json(j.at("actor"));
  critic_ = Mlp::from_json(j.at("critic"));
  actor_target_ = Mlp::from_json(j.at("actor_target"));
  critic_target_ = Mlp::from_json(j.at("critic_target"));
  actor_opt_ = Adam(actor_, cfg_.actor_lr);
  critic_opt_ = Adam(critic_, cfg_.critic_lr);
}

std::unique_ptr<Agent> make_agent(AlgoType algo, int state_dim, int action_dim,
                                  const LearnerConfig& cfg,
                                  const EnvModel& model, std::uint64_t seed) {
  if (algo == AlgoType::kSac)
    return std::make_unique<SacAgent>(state_dim, action_dim, cfg, model, seed);
  return std::make_unique<DdpgAgent>(state_dim, action_dim, cfg, model, seed);
}

std::unique_ptr<Agent> agent_from_checkpoint(const nlohmann::json& j,
                                             const EnvModel& model,
                                             std::uint64_t seed) {
  const AlgoType algo = algo_from_string(j.at("algo").get<std::string>());
  const LearnerConfig cfg = learner_from_json(j.at("learner"));
  const auto actor_sizes = j.at("actor").at("sizes").get<std::vector<int>>();
  const int state_dim = actor_sizes.front();
  const int action_dim = algo == AlgoType::kSac ? actor_sizes.back() / 2
                                                : actor_sizes.back();
  auto agent = make_agent(algo, state_dim, action_dim, cfg, model, seed);
  agent->restore(j);
  return agent;
}

}  // namespace silp
