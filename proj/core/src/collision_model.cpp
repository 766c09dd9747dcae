#include "silp/collision_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "silp/collision.hpp"

namespace silp {

std::vector<CollisionSample> generate_collision_dataset(int n,
                                                        const EnvConfig& cfg,
                                                        Rng& rng) {
  std::vector<CollisionSample> data;
  data.reserve(n);
  const ArmModel& arm = cfg.arm;
  for (int i = 0; i < n; ++i) {
    CollisionSample s;
    s.q.resize(arm.n_joints());
    for (int d = 0; d < arm.n_joints(); ++d)
      s.q[d] = rng.uniform(arm.joint_lo[d], arm.joint_hi[d]);
    const Vec2 center(
        rng.uniform(cfg.obstacle_region.min.x(), cfg.obstacle_region.max.x()),
        rng.uniform(cfg.obstacle_region.min.y(), cfg.obstacle_region.max.y()));
    s.obstacle = Aabb::from_center(center, cfg.obstacle_width,
                                   cfg.obstacle_height);
    s.label = config_in_collision(arm, s.q, s.obstacle, cfg.inflate);
    data.push_back(std::move(s));
  }
  return data;
}

std::pair<std::vector<CollisionSample>, std::vector<CollisionSample>>
split_dataset(const std::vector<CollisionSample>& data, double test_fraction) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("split_dataset: bad test fraction");
  const std::size_t n_test =
      static_cast<std::size_t>(data.size() * test_fraction);
  const std::size_t n_train = data.size() - n_test;
  return {std::vector<CollisionSample>(data.begin(), data.begin() + n_train),
          std::vector<CollisionSample>(data.begin() + n_train, data.end())};
}

void dump_dataset_csv(const std::vector<CollisionSample>& data,
                      std::ostream& out) {
  if (data.empty()) {
    out << "empty\n";
    return;
  }
  const int n = static_cast<int>(data.front().q.size());
  for (int i = 0; i < n; ++i) out << 'q' << i << ',';
  out << "ox_min,oy_min,ox_max,oy_max,label\n";
  out.precision(17);
  for (const CollisionSample& s : data) {
    for (int i = 0; i < n; ++i) out << s.q[i] << ',';
    out << s.obstacle.min.x() << ',' << s.obstacle.min.y() << ','
        << s.obstacle.max.x() << ',' << s.obstacle.max.y() << ','
        << (s.label ? 1 : 0) << '\n';
  }
}

std::vector<CollisionSample> load_dataset_csv(std::istream& in, int n_joints) {
  std::vector<CollisionSample> data;
  std::string line;
  if (!std::getline(in, line)) return data;
  if (line == "empty") return data;
  const int n_fields = n_joints + 5;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    vals.reserve(n_fields);
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (static_cast<int>(vals.size()) != n_fields)
      throw std::runtime_error("load_dataset_csv: bad column count");
    CollisionSample s;
    s.q.resize(n_joints);
    for (int i = 0; i < n_joints; ++i) s.q[i] = vals[i];
    s.obstacle.min = Vec2(vals[n_joints], vals[n_joints + 1]);
    s.obstacle.max = Vec2(vals[n_joints + 2], vals[n_joints + 3]);
    s.label = vals[n_joints + 4] != 0.0;
    data.push_back(std::move(s));
  }
  return data;
}

Eigen::VectorXd CollisionClassifier::features(const JointConfig& q,
                                              const Aabb& obstacle) {
  Eigen::VectorXd f(q.size() + 4);
  f.head(q.size()) = q;
  f[q.size()] = obstacle.min.x();
  f[q.size() + 1] = obstacle.min.y();
  f[q.size() + 2] = obstacle.max.x();
  f[q.size() + 3] = obstacle.max.y();
  return f;
}

double CollisionClassifier::predict(const JointConfig& q,
                                    const Aabb& obstacle) const {
  return predict_batch(features(q, obstacle))[0];
}

Eigen::VectorXd CollisionClassifier::predict_batch(
    const Eigen::MatrixXd& feats) const {
  Eigen::MatrixXd x = feats;
  x.colwise() -= feat_mean_;
  x.array().colwise() /= feat_std_.array();
  const Eigen::RowVectorXd logits = net_.forward(x);
  return (1.0 / (1.0 + (-logits.transpose().array()).exp())).matrix();
}

double CollisionClassifier::predict_edge(const JointConfig& qa,
                                         const JointConfig& qb,
                                         const Aabb& obstacle,
                                         double step_size) const {
  const double max_delta = (qb - qa).cwiseAbs().maxCoeff();
  std::size_t n = 1;
  if (max_delta > 0.0) {
    const double needed = std::ceil(max_delta / step_size);
    while (static_cast<double>(n) < needed) n *= 2;
  }
  Eigen::MatrixXd feats(qa.size() + 4, n + 1);
  const JointConfig delta = qb - qa;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    feats.col(k) = features(qa + t * delta, obstacle);
  }
  return predict_batch(feats).maxCoeff();
}

nlohmann::json CollisionClassifier::to_json() const {
  return nlohmann::json{
      {"format", 1},
      {"net", net_.to_json()},
      {"feat_mean",
       std::vector<double>(feat_mean_.data(), feat_mean_.data() + feat_mean_.size())},
      {"feat_std",
       std::vector<double>(feat_std_.data(), feat_std_.data() + feat_std_.size())}};
}

CollisionClassifier CollisionClassifier::from_json(const nlohmann::json& j) {
  CollisionClassifier m;
  m.net_ = Mlp::from_json(j.at("net"));
  const auto mean = j.at("feat_mean").get<std::vector<double>>();
  const auto std = j.at("feat_std").get<std::vector<double>>();
  m.feat_mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  m.feat_std_ = Eigen::Map<const Eigen::VectorXd>(std.data(), std.size());
  return m;
}

namespace {

// Mean binary cross-entropy from logits; numerically stable softplus form.
// loss = mean( softplus(z) - y*z ),  dL/dz = (sigmoid(z) - y)/n.
double bce_and_grad(const Eigen::RowVectorXd& logits,
                    const Eigen::RowVectorXd& labels,
                    Eigen::RowVectorXd* dlogits) {
  const int n = static_cast<int>(logits.size());
  double loss = 0.0;
  if (dlogits) dlogits->resize(n);
  for (int i = 0; i < n; ++i) {
    const double z = logits[i];
    const double softplus = z > 30.0 ? z : std::log1p(std::exp(std::min(z, 30.0)));
    loss += softplus - labels[i] * z;
    if (dlogits) (*dlogits)[i] = (1.0 / (1.0 + std::exp(-z)) - labels[i]) / n;
  }
  return loss / n;
}

}  // namespace

CollisionClassifier train_collision_model(
    const std::vector<CollisionSample>& train, const CollisionModelConfig& cfg,
    Rng& rng, CollisionTrainReport* report) {
  if (train.empty())
    throw std::invalid_argument("train_collision_model: empty dataset");

  const int feat_dim =
      static_cast<int>(CollisionClassifier::features(train[0].q,
                                                     train[0].obstacle).size());
  // Tail slice held out for plateau detection.
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(train.size() * cfg.val_fraction));
  const std::size_t n_fit = train.size() - n_val;
  if (n_fit == 0)
    throw std::invalid_argument("train_collision_model: dataset too small");

  Eigen::MatrixXd x(feat_dim, n_fit);
  Eigen::RowVectorXd y(n_fit);
  for (std::size_t i = 0; i < n_fit; ++i) {
    x.col(i) = CollisionClassifier::features(train[i].q, train[i].obstacle);
    y[i] = train[i].label ? 1.0 : 0.0;
  }
  Eigen::MatrixXd xv(feat_dim, n_val);
  Eigen::RowVectorXd yv(n_val);
  for (std::size_t i = 0; i < n_val; ++i) {
    xv.col(i) = CollisionClassifier::features(train[n_fit + i].q,
                                              train[n_fit + i].obstacle);
    yv[i] = train[n_fit + i].label ? 1.0 : 0.0;
  }

  CollisionClassifier model;
  model.feat_mean_ = x.rowwise().mean();
  model.feat_std_ =
      ((x.colwise() - model.feat_mean_).array().square().rowwise().mean() +
       1e-12)
          .sqrt()
          .matrix();
  x.colwise() -= model.feat_mean_;
  x.array().colwise() /= model.feat_std_.array();
  xv.colwise() -= model.feat_mean_;
  xv.array().colwise() /= model.feat_std_.array();

  std::vector<int> sizes{feat_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  model.net_ = Mlp(sizes);
  model.net_.init(rng);
  Adam opt(model.net_, cfg.lr);

  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;
  std::vector<std::size_t> order(n_fit);
  for (std::size_t i = 0; i < n_fit; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates reshuffle each epoch.
    for (std::size_t i = n_fit - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);

    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t at = 0; at < n_fit; at += cfg.batch) {
      const std::size_t b = std::min<std::size_t>(cfg.batch, n_fit - at);
      Eigen::MatrixXd xb(feat_dim, b);
      Eigen::RowVectorXd yb(b);
      for (std::size_t i = 0; i < b; ++i) {
        xb.col(i) = x.col(order[at + i]);
        yb[i] = y[order[at + i]];
      }
      Mlp::Cache cache;
      const Eigen::RowVectorXd logits = model.net_.forward(xb, cache);
      Eigen::RowVectorXd dlogits;
      const double loss = bce_and_grad(logits, yb, &dlogits);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_collision_model: non-finite loss");
      Mlp::Grads grads = model.net_.zero_grads();
      model.net_.backward(cache, dlogits, grads);
      opt.step(model.net_, grads);
      epoch_loss += loss;
      ++n_batches;
    }
    epoch_loss /= static_cast<double>(n_batches);

    const Eigen::RowVectorXd val_logits = model.net_.forward(xv);
    const double val_loss = bce_and_grad(val_logits, yv, nullptr);
    if (report) {
      report->train_loss.push_back(epoch_loss);
      report->val_loss.push_back(val_loss);
      report->epochs = epoch + 1;
    }

    if (val_loss < best_val - cfg.min_delta) {
      best_val = val_loss;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      break;
    }
  }
  return model;
}

ClassifierMetrics evaluate_collision_model(
    const CollisionClassifier& model, const std::vector<CollisionSample>& test,
    double threshold, int roc_points) {
  if (test.empty())
    throw std::invalid_argument("evaluate_collision_model: empty test set");

  const int feat_dim = static_cast<int>(
      CollisionClassifier::features(test[0].q, test[0].obstacle).size());
  Eigen::MatrixXd x(feat_dim, test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    x.col(i) = CollisionClassifier::features(test[i].q, test[i].obstacle);
  const Eigen::VectorXd probs = model.predict_batch(x);

  ClassifierMetrics m;
  const auto confusion = [&](double thr, long& tp, long& tn, long& fp,
                             long& fn) {
    tp = tn = fp = fn = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const bool pred = probs[i] >= thr;
      if (pred && test[i].label) ++tp;
      else if (pred && !test[i].label) ++fp;
      else if (!pred && test[i].label) ++fn;
      else ++tn;
    }
  };

  confusion(threshold, m.tp, m.tn, m.fp, m.fn);
  const double total = static_cast<double>(test.size());
  m.accuracy = (m.tp + m.tn) / total;
  m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.specificity =
      m.tn + m.fp > 0 ? static_cast<double>(m.tn) / (m.tn + m.fp) : 0.0;

  // ROC over a uniform threshold sweep (inclusive of 0 and 1), AUC by
  // trapezoid rule over the FPR axis.
  m.roc.reserve(roc_points);
  for (int i = 0; i < roc_points; ++i) {
    const double thr = static_cast<double>(i) / (roc_points - 1);
    long tp, tn, fp, fn;
    confusion(thr, tp, tn, fp, fn);
    const double tpr = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double fpr = fp + tn > 0 ? static_cast<double>(fp) / (fp + tn) : 0.0;
    m.roc.emplace_back(fpr, tpr);
  }
  std::sort(m.roc.begin(), m.roc.end());
  double auc = 0.0;
  for (std::size_t i = 1; i < m.roc.size(); ++i) {
    const auto& [x0, y0] = m.roc[i - 1];
    const auto& [x1, y1] = m.roc[i];
    auc += (x1 - x0) * 0.5 * (y0 + y1);
  }
  // Extend to the (0,0) and (1,1) corners if the sweep did not reach them.
  const auto& lo = m.roc.front();
  const auto& hi = m.roc.back();
  auc += lo.first * 0.5 * lo.second;              // from (0,0) to first point
  auc += (1.0 - hi.first) * 0.5 * (1.0 + hi.second);  // last point to (1,1)
  m.auc = auc;
  return m;
}

}  // namespace silp
