#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "silp/rng.hpp"

namespace silp {

enum class Activation { kTanh, kRelu };

// Fully connected network: affine layers with the chosen activation between
// them and a linear output. Double precision throughout; forward/backward
// operate on column-major batches (one sample per column).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden = Activation::kTanh);

  // Xavier-uniform weights, zero biases.
  void init(Rng& rng);

  int in_dim() const { return sizes_.empty() ? 0 : sizes_.front(); }
  int out_dim() const { return sizes_.empty() ? 0 : sizes_.back(); }
  int n_layers() const { return static_cast<int>(w_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  // Forward pass retaining post-activation values for backprop.
  // cache.h[0] is the input; cache.h[L] the (linear) output.
  struct Cache {
    std::vector<Eigen::MatrixXd> h;
  };
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;

  struct Grads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    void set_zero();
    void add(const Grads& other, double scale = 1.0);
  };
  Grads zero_grads() const;

  // Backprop of dLoss/d(output) through the cached forward pass. Gradients
  // are ACCUMULATED into `grads`; pass a freshly zeroed struct for plain
  // gradients. When dx is non-null the input gradient is written there.
  void backward(const Cache& cache, const Eigen::MatrixXd& dy, Grads& grads,
                Eigen::MatrixXd* dx = nullptr) const;

  // Sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const;
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& p);
  Eigen::VectorXd grads_flat(const Grads& g) const;

  std::vector<Eigen::MatrixXd>& weights() { return w_; }
  std::vector<Eigen::VectorXd>& biases() { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<int> sizes_;
  Activation act_ = Activation::kTanh;
  std::vector<Eigen::MatrixXd> w_;  // w_[l]: sizes_[l+1] x sizes_[l]
  std::vector<Eigen::VectorXd> b_;
};

// Adam optimizer bound to one Mlp's shape.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(Mlp& net, const Mlp::Grads& grads);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Mlp::Grads m_, v_;
};

// Adam on a single scalar (used for the entropy temperature).
class AdamScalar {
 public:
  explicit AdamScalar(double lr = 1e-3) : lr_(lr) {}
  void step(double& param, double grad);

 private:
  double lr_, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  double m_ = 0.0, v_ = 0.0;
  long t_ = 0;
};

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace silp
