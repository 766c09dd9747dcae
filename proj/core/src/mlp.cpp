#include "silp/mlp.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace silp {

Mlp::Mlp(std::vector<int> sizes, Activation hidden)
    : sizes_(std::move(sizes)), act_(hidden) {
  if (sizes_.size() < 2)
    throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("Mlp: layer sizes must be > 0");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_.emplace_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    b_.emplace_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

void Mlp::init(Rng& rng) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const double bound = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    for (Eigen::Index j = 0; j < w_[l].cols(); ++j)
      for (Eigen::Index i = 0; i < w_[l].rows(); ++i)
        w_[l](i, j) = rng.uniform(-bound, bound);
    b_[l].setZero();
  }
}

namespace {

inline void apply_activation(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kTanh)
    z = z.array().tanh().matrix();
  else
    z = z.cwiseMax(0.0);
}

// Derivative expressed through the post-activation value h.
inline Eigen::ArrayXXd activation_grad(const Eigen::MatrixXd& h,
                                       Activation act) {
  if (act == Activation::kTanh) return 1.0 - h.array().square();
  return (h.array() > 0.0).cast<double>();
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != in_dim())
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = (w_[l] * h).colwise() + b_[l];
    if (l + 1 < w_.size()) apply_activation(z, act_);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const {
  if (x.rows() != in_dim())
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  cache.h.clear();
  cache.h.reserve(w_.size() + 1);
  cache.h.push_back(x);
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = (w_[l] * cache.h.back()).colwise() + b_[l];
    if (l + 1 < w_.size()) apply_activation(z, act_);
    cache.h.push_back(std::move(z));
  }
  return cache.h.back();
}

void Mlp::Grads::set_zero() {
  for (auto& g : w) g.setZero();
  for (auto& g : b) g.setZero();
}

void Mlp::Grads::add(const Grads& other, double scale) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l] += scale * other.w[l];
    b[l] += scale * other.b[l];
  }
}

Mlp::Grads Mlp::zero_grads() const {
  Grads g;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    g.w.emplace_back(Eigen::MatrixXd::Zero(w_[l].rows(), w_[l].cols()));
    g.b.emplace_back(Eigen::VectorXd::Zero(b_[l].size()));
  }
  return g;
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dy, Grads& grads,
                   Eigen::MatrixXd* dx) const {
  if (cache.h.size() != w_.size() + 1)
    throw std::logic_error("Mlp::backward: cache does not match forward pass");

  Eigen::MatrixXd delta = dy;
  for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
    grads.w[l].noalias() += delta * cache.h[l].transpose();
    grads.b[l] += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd dh = w_[l].transpose() * delta;
      delta = (dh.array() * activation_grad(cache.h[l], act_)).matrix();
    } else if (dx) {
      dx->noalias() = w_[0].transpose() * delta;
    }
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    n += static_cast<std::size_t>(sizes_[l] + 1) * sizes_[l + 1];
  return n;
}

Eigen::VectorXd Mlp::params_flat() const {
  Eigen::VectorXd p(param_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    p.segment(at, w_[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(w_[l].data(), w_[l].size());
    at += w_[l].size();
    p.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return p;
}

void Mlp::set_params_flat(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != param_count())
    throw std::invalid_argument("Mlp::set_params_flat: size mismatch");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(w_[l].data(), w_[l].size()) =
        p.segment(at, w_[l].size());
    at += w_[l].size();
    b_[l] = p.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

Eigen::VectorXd Mlp::grads_flat(const Grads& g) const {
  Eigen::VectorXd out(param_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    out.segment(at, g.w[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(g.w[l].data(), g.w[l].size());
    at += g.w[l].size();
    out.segment(at, g.b[l].size()) = g.b[l];
    at += g.b[l].size();
  }
  return out;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["sizes"] = sizes_;
  j["activation"] = to_string(act_);
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < w_.size(); ++l) {
    weights.push_back(std::vector<double>(w_[l].data(), w_[l].data() + w_[l].size()));
    biases.push_back(std::vector<double>(b_[l].data(), b_[l].data() + b_[l].size()));
  }
  j["w"] = std::move(weights);
  j["b"] = std::move(biases);
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>(),
          activation_from_string(j.at("activation").get<std::string>()));
  const auto& weights = j.at("w");
  const auto& biases = j.at("b");
  if (weights.size() != net.w_.size() || biases.size() != net.b_.size())
    throw std::runtime_error("Mlp::from_json: layer count mismatch");
  for (std::size_t l = 0; l < net.w_.size(); ++l) {
    const auto wv = weights[l].get<std::vector<double>>();
    const auto bv = biases[l].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(wv.size()) != net.w_[l].size() ||
        static_cast<Eigen::Index>(bv.size()) != net.b_[l].size())
      throw std::runtime_error("Mlp::from_json: layer size mismatch");
    net.w_[l] = Eigen::Map<const Eigen::MatrixXd>(wv.data(), net.w_[l].rows(),
                                                  net.w_[l].cols());
    net.b_[l] = Eigen::Map<const Eigen::VectorXd>(bv.data(), net.b_[l].size());
  }
  return net;
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_grads()),
      v_(net.zero_grads()) {}

void Adam::step(Mlp& net, const Mlp::Grads& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& w = net.weights();
  auto& b = net.biases();
  for (std::size_t l = 0; l < w.size(); ++l) {
    m_.w[l] = beta1_ * m_.w[l] + (1.0 - beta1_) * grads.w[l];
    v_.w[l] = (beta2_ * v_.w[l].array() +
               (1.0 - beta2_) * grads.w[l].array().square())
                  .matrix();
    w[l].array() -= lr_ * (m_.w[l].array() / bc1) /
                    ((v_.w[l].array() / bc2).sqrt() + eps_);

    m_.b[l] = beta1_ * m_.b[l] + (1.0 - beta1_) * grads.b[l];
    v_.b[l] = (beta2_ * v_.b[l].array() +
               (1.0 - beta2_) * grads.b[l].array().square())
                  .matrix();
    b[l].array() -= lr_ * (m_.b[l].array() / bc1) /
                    ((v_.b[l].array() / bc2).sqrt() + eps_);
  }
}

void AdamScalar::step(double& param, double grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad * grad;
  const double mhat = m_ / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const double vhat = v_ / (1.0 - std::pow(beta2_, static_cast<double>(t_)));
  param -= lr_ * mhat / (std::sqrt(vhat) + eps_);
}

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation: " + s);
}

}  // namespace silp
