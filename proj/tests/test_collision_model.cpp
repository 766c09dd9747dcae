#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "silp/collision.hpp"
#include "silp/collision_model.hpp"

using namespace silp;

namespace {

JointConfig make_q(double a, double b, double c) {
  JointConfig q(3);
  q << a, b, c;
  return q;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Classifier with identity standardization around a hand-chosen network, so
// every probability is known in closed form.
CollisionClassifier hand_model(const Mlp& net,
                               const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& std) {
  nlohmann::json j{
      {"format", 1},
      {"net", net.to_json()},
      {"feat_mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
      {"feat_std", std::vector<double>(std.data(), std.data() + std.size())}};
  return CollisionClassifier::from_json(j);
}

// Linear net reading only q0: logit = q0. Flat layout is column-major
// weights then biases, layer by layer.
CollisionClassifier q0_model() {
  Mlp net({7, 1});
  Eigen::VectorXd p = Eigen::VectorXd::Zero(8);
  p[0] = 1.0;  // weight on q0; bias stays 0
  net.set_params_flat(p);
  return hand_model(net, Eigen::VectorXd::Zero(7), Eigen::VectorXd::Ones(7));
}

CollisionSample sample_at(double q0, bool label) {
  CollisionSample s;
  s.q = make_q(q0, 0.0, 0.0);
  s.obstacle = Aabb::from_center({5.0, 5.0}, 0.2, 0.3);
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("feature vector is the configuration plus the obstacle corners") {
  const JointConfig q = make_q(0.1, -0.2, 0.3);
  Aabb box;
  box.min = Vec2(0.4, -0.5);
  box.max = Vec2(0.6, 0.7);
  const Eigen::VectorXd f = CollisionClassifier::features(q, box);
  REQUIRE(f.size() == 7);
  CHECK(f[0] == 0.1);
  CHECK(f[1] == -0.2);
  CHECK(f[2] == 0.3);
  CHECK(f[3] == 0.4);
  CHECK(f[4] == -0.5);
  CHECK(f[5] == 0.6);
  CHECK(f[6] == 0.7);
}

TEST_CASE("dataset generation samples the configured ranges and labels") {
  const EnvConfig cfg;
  Rng rng(17);
  const auto data = generate_collision_dataset(500, cfg, rng);
  REQUIRE(data.size() == 500);
  int positives = 0;
  for (const CollisionSample& s : data) {
    CHECK(cfg.arm.within_limits(s.q));
    const Vec2 center = 0.5 * (s.obstacle.min + s.obstacle.max);
    CHECK(center.x() >= cfg.obstacle_region.min.x());
    CHECK(center.x() <= cfg.obstacle_region.max.x());
    CHECK(center.y() >= cfg.obstacle_region.min.y());
    CHECK(center.y() <= cfg.obstacle_region.max.y());
    CHECK(s.obstacle.max.x() - s.obstacle.min.x() ==
          doctest::Approx(cfg.obstacle_width));
    CHECK(s.obstacle.max.y() - s.obstacle.min.y() ==
          doctest::Approx(cfg.obstacle_height));
    CHECK(s.label == config_in_collision(cfg.arm, s.q, s.obstacle,
                                         cfg.inflate));
    positives += s.label ? 1 : 0;
  }
  // both classes occur in force (the task geometry is not degenerate)
  CHECK(positives > 50);
  CHECK(positives < 450);

  Rng rng2(17);
  const auto again = generate_collision_dataset(500, cfg, rng2);
  for (int i = 0; i < 500; ++i) {
    CHECK((again[i].q - data[i].q).norm() == 0.0);
    CHECK(again[i].label == data[i].label);
  }
}

TEST_CASE("head/tail split") {
  const EnvConfig cfg;
  Rng rng(3);
  const auto data = generate_collision_dataset(10, cfg, rng);
  const auto [train, test] = split_dataset(data, 0.2);
  REQUIRE(train.size() == 8);
  REQUIRE(test.size() == 2);
  CHECK((train[0].q - data[0].q).norm() == 0.0);
  CHECK((test[0].q - data[8].q).norm() == 0.0);
  CHECK((test[1].q - data[9].q).norm() == 0.0);
  CHECK(split_dataset(data, 0.0).second.empty());
  CHECK_THROWS_AS(split_dataset(data, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(data, 1.0), std::invalid_argument);
}

TEST_CASE("dataset csv round trip") {
  const EnvConfig cfg;
  Rng rng(29);
  const auto data = generate_collision_dataset(50, cfg, rng);
  std::stringstream ss;
  dump_dataset_csv(data, ss);
  const auto back = load_dataset_csv(ss, 3);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK((back[i].q - data[i].q).norm() == 0.0);
    CHECK((back[i].obstacle.min - data[i].obstacle.min).norm() == 0.0);
    CHECK((back[i].obstacle.max - data[i].obstacle.max).norm() == 0.0);
    CHECK(back[i].label == data[i].label);
  }

  SUBCASE("empty dataset writes and reads a sentinel") {
    std::stringstream es;
    dump_dataset_csv({}, es);
    CHECK(load_dataset_csv(es, 3).empty());
  }
  SUBCASE("malformed rows are rejected") {
    std::stringstream bad("q0,q1,q2,ox_min,oy_min,ox_max,oy_max,label\n"
                          "0.1,0.2,0.3,0.4\n");
    CHECK_THROWS_AS(load_dataset_csv(bad, 3), std::runtime_error);
  }
}

TEST_CASE("prediction pipeline applies standardization then the sigmoid") {
  // mean 1, scale 2 on q0: p = sigmoid((q0 - 1) / 2)
  Mlp net({7, 1});
  Eigen::VectorXd p = Eigen::VectorXd::Zero(8);
  p[0] = 1.0;
  net.set_params_flat(p);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(7);
  Eigen::VectorXd std = Eigen::VectorXd::Ones(7);
  mean[0] = 1.0;
  std[0] = 2.0;
  const CollisionClassifier model = hand_model(net, mean, std);
  const Aabb far = Aabb::from_center({5.0, 5.0}, 0.2, 0.3);
  CHECK(model.predict(make_q(3.0, 0, 0), far) ==
        doctest::Approx(sigmoid(1.0)).epsilon(1e-12));
  CHECK(model.predict(make_q(1.0, 0, 0), far) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(model.predict(make_q(-1.0, 0, 0), far) ==
        doctest::Approx(sigmoid(-1.0)).epsilon(1e-12));

  SUBCASE("batch prediction matches single prediction per column") {
    Eigen::MatrixXd feats(7, 3);
    feats.col(0) = CollisionClassifier::features(make_q(3, 0, 0), far);
    feats.col(1) = CollisionClassifier::features(make_q(1, 0, 0), far);
    feats.col(2) = CollisionClassifier::features(make_q(-1, 0, 0), far);
    const Eigen::VectorXd probs = model.predict_batch(feats);
    CHECK(probs[0] == doctest::Approx(sigmoid(1.0)).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(probs[2] == doctest::Approx(sigmoid(-1.0)).epsilon(1e-12));
    CHECK((probs.array() > 0.0).all());
    CHECK((probs.array() < 1.0).all());
  }
}

TEST_CASE("learned edge check maximizes over the interpolation grid") {
  const Aabb far = Aabb::from_center({5.0, 5.0}, 0.2, 0.3);

  SUBCASE("monotone model peaks at an endpoint") {
    const CollisionClassifier model = q0_model();
    const JointConfig qa = make_q(-1.0, 0, 0);
    const JointConfig qb = make_q(1.5, 0, 0);
    CHECK(model.predict_edge(qa, qb, far) ==
          doctest::Approx(model.predict(qb, far)).epsilon(1e-12));
    CHECK(model.predict_edge(qa, qa, far) ==
          doctest::Approx(model.predict(qa, far)).epsilon(1e-12));
  }

  SUBCASE("bump model peaks strictly inside the edge") {
    // logit(q0) = tanh(q0 + 1) - tanh(q0 - 1): maximal at q0 = 0, which the
    // power-of-two grid hits exactly on the edge -2 -> 2.
    Mlp net({7, 2, 1});
    Eigen::VectorXd p = Eigen::VectorXd::Zero(net.param_count());
    p[0] = 1.0;   // W1(0,0)
    p[1] = 1.0;   // W1(1,0)
    p[14] = 1.0;  // b1[0]
    p[15] = -1.0; // b1[1]
    p[16] = 1.0;  // W2(0,0)
    p[17] = -1.0; // W2(0,1)
    net.set_params_flat(p);
    const CollisionClassifier model =
        hand_model(net, Eigen::VectorXd::Zero(7), Eigen::VectorXd::Ones(7));

    const JointConfig qa = make_q(-2.0, 0, 0);
    const JointConfig qb = make_q(2.0, 0, 0);
    const double peak = sigmoid(2.0 * std::tanh(1.0));
    CHECK(model.predict_edge(qa, qb, far) ==
          doctest::Approx(peak).epsilon(1e-12));
    CHECK(model.predict_edge(qa, qb, far) > model.predict(qa, far) + 0.2);
    CHECK(model.predict_edge(qa, qb, far) > model.predict(qb, far) + 0.2);
    // a coarse step that stops subdividing misses the interior peak
    CHECK(model.predict_edge(qa, qb, far, 4.0) < peak);
  }
}

TEST_CASE("classifier metrics against hand-computed probabilities") {
  const CollisionClassifier model = q0_model();

  SUBCASE("confusion counts and rank statistics on a mixed set") {
    // probabilities 0.1, 0.4, 0.6, 0.9 with labels 0, 1, 0, 1:
    // at threshold 0.5 every count is 1; the rank AUC is 3/4.
    const std::vector<CollisionSample> test = {
        sample_at(logit(0.1), false), sample_at(logit(0.4), true),
        sample_at(logit(0.6), false), sample_at(logit(0.9), true)};
    const ClassifierMetrics m = evaluate_collision_model(model, test);
    CHECK(m.tp == 1);
    CHECK(m.tn == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.accuracy == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.specificity == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.auc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.roc.size() == 101);
  }

  SUBCASE("perfect separation scores AUC 1") {
    const std::vector<CollisionSample> test = {
        sample_at(-2.0, false), sample_at(-1.5, false), sample_at(2.0, true),
        sample_at(1.5, true)};
    const ClassifierMetrics m = evaluate_collision_model(model, test);
    CHECK(m.auc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.specificity == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("inverted separation scores AUC 0") {
    const std::vector<CollisionSample> test = {
        sample_at(-2.0, true), sample_at(2.0, false)};
    const ClassifierMetrics m = evaluate_collision_model(model, test);
    CHECK(m.auc == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("uninformative constant predictor scores AUC one half") {
    Mlp net({7, 1});
    net.set_params_flat(Eigen::VectorXd::Zero(8));  // p = 0.5 everywhere
    const CollisionClassifier coin =
        hand_model(net, Eigen::VectorXd::Zero(7), Eigen::VectorXd::Ones(7));
    const std::vector<CollisionSample> test = {
        sample_at(0.3, true), sample_at(-0.7, true), sample_at(0.2, false),
        sample_at(1.1, false), sample_at(-0.4, true)};
    const ClassifierMetrics m = evaluate_collision_model(coin, test);
    CHECK(m.auc == doctest::Approx(0.5).epsilon(1e-12));
    // p >= threshold everywhere: predicts collision for all five
    CHECK(m.tp == 3);
    CHECK(m.fp == 2);
    CHECK(m.recall == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.specificity == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("empty test set is rejected") {
    CHECK_THROWS_AS(evaluate_collision_model(model, {}), std::invalid_argument);
  }
}

TEST_CASE("training fits a separable synthetic rule") {
  // labels depend only on the sign of q0: a tiny net must learn this to
  // near-perfect held-out accuracy within a few epochs.
  Rng rng(47);
  std::vector<CollisionSample> data;
  for (int i = 0; i < 1200; ++i) {
    const double q0 = rng.uniform(-2.0, 2.0);
    CollisionSample s = sample_at(q0, q0 > 0.0);
    s.q[1] = rng.uniform(-1.0, 1.0);  // irrelevant features present
    s.q[2] = rng.uniform(-1.0, 1.0);
    data.push_back(s);
  }
  const auto [train, test] = split_dataset(data, 0.25);

  CollisionModelConfig cfg;
  cfg.hidden = {16};
  cfg.max_epochs = 30;
  cfg.batch = 64;
  Rng trng(7);
  CollisionTrainReport report;
  const CollisionClassifier model =
      train_collision_model(train, cfg, trng, &report);

  REQUIRE(report.epochs > 0);
  CHECK(report.epochs <= cfg.max_epochs);
  CHECK(static_cast<int>(report.train_loss.size()) == report.epochs);
  CHECK(static_cast<int>(report.val_loss.size()) == report.epochs);
  CHECK(report.train_loss.back() < report.train_loss.front());
  CHECK(report.train_loss.back() < 0.35);  // well below ln 2 = chance level

  const ClassifierMetrics m = evaluate_collision_model(model, test);
  CHECK(m.accuracy > 0.97);
  CHECK(m.auc > 0.99);

  SUBCASE("json round trip reproduces predictions exactly") {
    const nlohmann::json j = model.to_json();
    CHECK(j.at("format") == 1);
    CHECK(j.at("feat_mean").size() == 7);
    const CollisionClassifier back = CollisionClassifier::from_json(j);
    CHECK(back.to_json() == j);
    for (int i = 0; i < 20; ++i) {
      const CollisionSample& s = test[i];
      CHECK(back.predict(s.q, s.obstacle) == model.predict(s.q, s.obstacle));
    }
  }
}

TEST_CASE("training on real geometry beats the majority class") {
  const EnvConfig env_cfg;
  Rng drng(101);
  const auto data = generate_collision_dataset(12000, env_cfg, drng);
  const auto [train, test] = split_dataset(data, 1.0 / 6.0);

  CollisionModelConfig cfg;
  cfg.hidden = {128, 64};
  cfg.max_epochs = 40;
  cfg.batch = 128;
  Rng trng(5);
  CollisionTrainReport report;
  const CollisionClassifier model =
      train_collision_model(train, cfg, trng, &report);
  const ClassifierMetrics m = evaluate_collision_model(model, test);

  int positives = 0;
  for (const CollisionSample& s : test) positives += s.label ? 1 : 0;
  const double majority =
      std::max(positives, static_cast<int>(test.size()) - positives) /
      static_cast<double>(test.size());
  CHECK(m.accuracy > majority + 0.05);
  CHECK(m.accuracy > 0.85);
  CHECK(m.auc > 0.9);
  CHECK(report.train_loss.back() < report.train_loss.front());
}

TEST_CASE("training input validation and early stopping") {
  CollisionModelConfig cfg;
  cfg.hidden = {8};
  Rng rng(1);
  CHECK_THROWS_AS(train_collision_model({}, cfg, rng), std::invalid_argument);

  SUBCASE("an impossible improvement bar stops after patience epochs") {
    std::vector<CollisionSample> data;
    Rng drng(2);
    for (int i = 0; i < 200; ++i)
      data.push_back(sample_at(drng.uniform(-2.0, 2.0), drng.uniform01() > 0.5));
    CollisionModelConfig stop_cfg;
    stop_cfg.hidden = {8};
    stop_cfg.max_epochs = 50;
    stop_cfg.min_delta = 1e9;  // nothing ever counts as an improvement
    stop_cfg.patience = 2;
    CollisionTrainReport report;
    Rng trng(3);
    train_collision_model(data, stop_cfg, trng, &report);
    // epoch 0 beats the infinite initial best; then two stalled epochs
    CHECK(report.epochs == 3);
  }
}
