#include "silp/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace silp {

double matern52(double r, const GpHyper& hyper) {
  const double s = std::sqrt(5.0) * r / hyper.lengthscale;
  return hyper.signal_var * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

GpModel GpModel::fit(const std::vector<JointConfig>& inputs,
                     const Eigen::VectorXd& targets, const GpHyper& hyper) {
  const int n = static_cast<int>(inputs.size());
  if (n == 0) throw std::invalid_argument("GpModel::fit: no training points");
  if (targets.size() != n)
    throw std::invalid_argument("GpModel::fit: inputs/targets size mismatch");
  if (hyper.lengthscale <= 0.0 || hyper.signal_var <= 0.0 ||
      hyper.noise_var < 0.0)
    throw std::invalid_argument("GpModel::fit: invalid hyperparameters");

  GpModel model;
  model.hyper_ = hyper;
  const int dim = static_cast<int>(inputs[0].size());
  model.x_.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    if (inputs[i].size() != dim)
      throw std::invalid_argument("GpModel::fit: inconsistent input dims");
    model.x_.row(i) = inputs[i].transpose();
  }

  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    gram(i, i) = hyper.signal_var + hyper.noise_var;
    for (int j = i + 1; j < n; ++j) {
      const double k =
          matern52((model.x_.row(i) - model.x_.row(j)).norm(), hyper);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }

  // Cholesky with jitter escalation for near-singular Gram matrices
  // (duplicate inputs with tiny noise).
  double jitter = 0.0;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        gram + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      model.chol_l_ = llt.matrixL();
      model.alpha_ = llt.solve(targets);
      return model;
    }
    jitter = jitter == 0.0 ? 1e-12 : jitter * 100.0;
    if (jitter > 1e-6)
      throw std::runtime_error(
          "GpModel::fit: Gram matrix not positive definite after jitter "
          "escalation");
  }
}

std::pair<double, double> GpModel::predict(const JointConfig& x) const {
  const int n = static_cast<int>(x_.rows());
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i)
    k[i] = matern52((x_.row(i).transpose() - x).norm(), hyper_);

  const double mean = k.dot(alpha_);
  const Eigen::VectorXd v =
      chol_l_.triangularView<Eigen::Lower>().solve(k);
  const double var = hyper_.signal_var - v.squaredNorm();
  return {mean, std::max(var, 0.0)};
}

Eigen::VectorXd gp_selection_probs(
    const GpModel& model, const std::vector<JointConfig>& candidates) {
  const int n = static_cast<int>(candidates.size());
  if (n == 0) throw std::invalid_argument("gp_selection_probs: no candidates");

  Eigen::VectorXd means(n);
  for (int i = 0; i < n; ++i) means[i] = model.predict(candidates[i]).first;

  const double lo = means.minCoeff();
  const double hi = means.maxCoeff();
  if (hi - lo < 1e-12)
    return Eigen::VectorXd::Constant(n, 1.0 / n);

  const Eigen::VectorXd w = ((means.array() - lo) / (hi - lo)).matrix();
  return w / w.sum();
}

Eigen::VectorXd gp_guided_action(const GpModel& model, const ArmModel& arm,
                                 const JointConfig& q, Rng& rng,
                                 int n_candidates, double action_scale) {
  if (n_candidates <= 0)
    throw std::invalid_argument("gp_guided_action: need candidates");
  const int dim = arm.n_joints();

  std::vector<Eigen::VectorXd> actions(n_candidates);
  std::vector<JointConfig> configs(n_candidates);
  for (int i = 0; i < n_candidates; ++i) {
    Eigen::VectorXd u(dim);
    for (int d = 0; d < dim; ++d) u[d] = rng.uniform(-1.0, 1.0);
    actions[i] = u;
    configs[i] = arm.clip(q + action_scale * u);
  }

  const Eigen::VectorXd probs = gp_selection_probs(model, configs);

  // Inverse-CDF draw; the final index absorbs rounding.
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int i = 0; i < n_candidates; ++i) {
    acc += probs[i];
    if (u < acc) return actions[i];
  }
  return actions[n_candidates - 1];
}

}  // namespace silp
