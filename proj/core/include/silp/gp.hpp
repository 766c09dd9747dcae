#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "silp/kinematics.hpp"
#include "silp/rng.hpp"

namespace silp {

struct GpHyper {
  double signal_var = 1.0;   // kernel variance sigma^2
  double lengthscale = 0.5;  // radians
  double noise_var = 1e-2;   // observation noise sigma_no^2
};

// Matern 5/2 covariance as a function of the input distance r.
double matern52(double r, const GpHyper& hyper);

// Zero-mean Gaussian-process posterior over joint configurations, fitted to
// the (configuration, reward) pairs of the running episode. Exact inference
// via Cholesky; refitting from scratch is cheap at episode sizes.
class GpModel {
 public:
  // Throws std::invalid_argument on empty/mismatched data and
  // std::runtime_error when the Gram matrix stays indefinite after jitter
  // escalation (up to 1e-6).
  static GpModel fit(const std::vector<JointConfig>& inputs,
                     const Eigen::VectorXd& targets, const GpHyper& hyper);

  // Posterior mean and variance at x; the variance is clamped at zero.
  std::pair<double, double> predict(const JointConfig& x) const;

  int n() const { return static_cast<int>(x_.rows()); }
  const GpHyper& hyper() const { return hyper_; }

 private:
  Eigen::MatrixXd x_;      // n x dim training inputs
  Eigen::MatrixXd chol_l_; // lower Cholesky factor of K + sigma_no^2 I
  Eigen::VectorXd alpha_;  // (K + sigma_no^2 I)^-1 y
  GpHyper hyper_;
};

// Selection probabilities over candidate configurations: posterior means,
// min-max normalized and rescaled to sum to one. When all means coincide the
// distribution is uniform.
Eigen::VectorXd gp_selection_probs(const GpModel& model,
                                   const std::vector<JointConfig>& candidates);

// Draws a replacement action by scoring one-step-reachable configurations
// q + action_scale * u (u uniform in [-1,1]^n, clipped to joint limits) with
// the posterior mean and sampling proportionally to the normalized scores.
Eigen::VectorXd gp_guided_action(const GpModel& model, const ArmModel& arm,
                                 const JointConfig& q, Rng& rng,
                                 int n_candidates, double action_scale);

}  // namespace silp
