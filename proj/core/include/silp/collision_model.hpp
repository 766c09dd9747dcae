#pragma once

#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <utility>
#include <vector>

#include "silp/env.hpp"
#include "silp/mlp.hpp"
#include "silp/rng.hpp"

namespace silp {

// One labeled example for the learned collision checker.
struct CollisionSample {
  JointConfig q;
  Aabb obstacle;
  bool label = false;  // true = in collision
};

// Uniformly random configurations and obstacle placements, labeled by the
// geometric checker.
std::vector<CollisionSample> generate_collision_dataset(int n,
                                                        const EnvConfig& cfg,
                                                        Rng& rng);

// Deterministic head/tail split (the dataset is i.i.d. by construction).
std::pair<std::vector<CollisionSample>, std::vector<CollisionSample>>
split_dataset(const std::vector<CollisionSample>& data, double test_fraction);

void dump_dataset_csv(const std::vector<CollisionSample>& data,
                      std::ostream& out);
std::vector<CollisionSample> load_dataset_csv(std::istream& in, int n_joints);

struct CollisionModelConfig {
  std::vector<int> hidden = {512, 256, 64};
  double lr = 1e-3;
  int batch = 256;
  int max_epochs = 60;
  // Validation-plateau stopping: no improvement greater than min_delta for
  // `patience` consecutive epochs ends training.
  double val_fraction = 0.05;
  double min_delta = 1e-4;
  int patience = 5;
};

struct CollisionTrainReport {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  int epochs = 0;
};

// Sigmoid classifier over (q, obstacle corners) features, standardized per
// feature with training-set statistics.
class CollisionClassifier {
 public:
  CollisionClassifier() = default;

  static Eigen::VectorXd features(const JointConfig& q, const Aabb& obstacle);

  // Collision probability in (0, 1).
  double predict(const JointConfig& q, const Aabb& obstacle) const;
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& features) const;

  // Learned edge check: maximum collision probability over the same
  // power-of-two interpolation grid the geometric checker uses.
  double predict_edge(const JointConfig& qa, const JointConfig& qb,
                      const Aabb& obstacle,
                      double step_size = kDefaultStepSize) const;

  const Mlp& net() const { return net_; }

  nlohmann::json to_json() const;
  static CollisionClassifier from_json(const nlohmann::json& j);

  friend CollisionClassifier train_collision_model(
      const std::vector<CollisionSample>& train,
      const CollisionModelConfig& cfg, Rng& rng, CollisionTrainReport* report);

 private:
  Mlp net_;
  Eigen::VectorXd feat_mean_, feat_std_;
};

// Cross-entropy training with Adam until the validation loss plateaus (or
// max_epochs). Throws on non-finite loss.
CollisionClassifier train_collision_model(
    const std::vector<CollisionSample>& train, const CollisionModelConfig& cfg,
    Rng& rng, CollisionTrainReport* report = nullptr);

struct ClassifierMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double auc = 0.0;
  long tp = 0, tn = 0, fp = 0, fn = 0;
  // (false-positive rate, true-positive rate) per threshold, for plotting.
  std::vector<std::pair<double, double>> roc;
};

// Confusion counts at `threshold` (predict collision iff p >= threshold)
// plus a trapezoid-rule ROC/AUC over a uniform threshold sweep.
ClassifierMetrics evaluate_collision_model(
    const CollisionClassifier& model, const std::vector<CollisionSample>& test,
    double threshold = 0.5, int roc_points = 101);

}  // namespace silp
