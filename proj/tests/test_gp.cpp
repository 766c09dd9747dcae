#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "silp/env.hpp"  // kActionScale
#include "silp/gp.hpp"

using namespace silp;

namespace {

JointConfig make_q(double a, double b, double c) {
  JointConfig q(3);
  q << a, b, c;
  return q;
}

}  // namespace

TEST_CASE("covariance function shape") {
  const GpHyper hyper;  // sigma^2 = 1, l = 0.5, noise 1e-2
  CHECK(matern52(0.0, hyper) == hyper.signal_var);
  // strictly decreasing and positive
  double prev = matern52(0.0, hyper);
  for (double r = 0.1; r < 5.0; r += 0.1) {
    const double k = matern52(r, hyper);
    CHECK(k > 0.0);
    CHECK(k < prev);
    prev = k;
  }
  // r and lengthscale only enter through their ratio
  GpHyper wide = hyper;
  wide.lengthscale = 1.0;
  CHECK(matern52(0.3, hyper) == doctest::Approx(matern52(0.6, wide)));
  // signal variance scales the whole curve
  GpHyper loud = hyper;
  loud.signal_var = 3.5;
  CHECK(matern52(0.7, loud) == doctest::Approx(3.5 * matern52(0.7, hyper)));
  // vanishes far away
  CHECK(matern52(50.0, hyper) < 1e-12);
}

TEST_CASE("single-point posterior matches the closed form") {
  const GpHyper hyper;  // sigma^2 = 1, noise 1e-2
  const JointConfig x0 = make_q(0.3, -0.2, 1.0);
  const double y0 = -10.0;
  Eigen::VectorXd y(1);
  y << y0;
  const GpModel model = GpModel::fit({x0}, y, hyper);

  const auto [mean, var] = model.predict(x0);
  // mean = y * s2 / (s2 + noise), var = s2 * noise / (s2 + noise)
  CHECK(mean == doctest::Approx(y0 / 1.01).epsilon(1e-12));
  CHECK(var == doctest::Approx(0.01 / 1.01).epsilon(1e-9));

  SUBCASE("prior recovered far from the data") {
    const auto [m_far, v_far] = model.predict(make_q(0.3, -0.2, 1.0 + 40.0));
    CHECK(std::abs(m_far) < 1e-12);
    CHECK(v_far == doctest::Approx(hyper.signal_var).epsilon(1e-12));
  }
  SUBCASE("posterior mean shrinks toward zero with distance") {
    double prev_abs = std::abs(mean);
    for (double d = 0.25; d < 2.0; d += 0.25) {
      const double m = model.predict(make_q(0.3 + d, -0.2, 1.0)).first;
      CHECK(std::abs(m) < prev_abs);
      prev_abs = std::abs(m);
    }
  }
}

TEST_CASE("posterior agrees with a dense linear solve") {
  const GpHyper hyper{1.7, 0.4, 5e-3};
  Rng rng(2024);
  const int n = 20;
  std::vector<JointConfig> xs;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    xs.push_back(make_q(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                        rng.uniform(-3.0, 3.0)));
    y[i] = rng.uniform(-10.0, 1.0);
  }
  const GpModel model = GpModel::fit(xs, y, hyper);

  // reference: explicit Gram assembly and full-pivot LU inversion
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram(i, j) = matern52((xs[i] - xs[j]).norm(), hyper) +
                   (i == j ? hyper.noise_var : 0.0);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);

  Rng probe(7);
  for (int t = 0; t < 50; ++t) {
    const JointConfig q = make_q(probe.uniform(-3.5, 3.5),
                                 probe.uniform(-3.5, 3.5),
                                 probe.uniform(-3.5, 3.5));
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i) k[i] = matern52((xs[i] - q).norm(), hyper);
    const double want_mean = k.dot(lu.solve(y));
    const double want_var =
        std::max(0.0, hyper.signal_var - k.dot(lu.solve(k)));

    const auto [mean, var] = model.predict(q);
    CHECK(mean == doctest::Approx(want_mean).epsilon(1e-8));
    CHECK(var == doctest::Approx(want_var).epsilon(1e-7).scale(1.0));
  }

  SUBCASE("variance never exceeds the prior and shrinks at the data") {
    for (int i = 0; i < n; ++i) {
      const double var = model.predict(xs[i]).second;
      CHECK(var >= 0.0);
      CHECK(var <= hyper.signal_var);
      // at an observed point the posterior variance is at most the noise
      CHECK(var < hyper.noise_var + 1e-6);
    }
  }
}

TEST_CASE("noise-free fits interpolate the targets") {
  GpHyper hyper;
  hyper.noise_var = 0.0;
  std::vector<JointConfig> xs = {make_q(0, 0, 0), make_q(1, 0, 0),
                                 make_q(0, 1, 0), make_q(0.5, 0.5, -0.5)};
  Eigen::VectorXd y(4);
  y << -10.0, 1.0, -0.3, -2.0;
  const GpModel model = GpModel::fit(xs, y, hyper);
  for (int i = 0; i < 4; ++i) {
    const auto [mean, var] = model.predict(xs[i]);
    CHECK(mean == doctest::Approx(y[i]).epsilon(1e-6));
    CHECK(var <= 1e-8);
  }
}

TEST_CASE("duplicate inputs survive via jitter escalation") {
  GpHyper hyper;
  hyper.noise_var = 0.0;  // exact duplicates make the Gram matrix singular
  std::vector<JointConfig> xs(5, make_q(0.2, 0.2, 0.2));
  Eigen::VectorXd y = Eigen::VectorXd::Constant(5, -10.0);
  const GpModel model = GpModel::fit(xs, y, hyper);
  const auto [mean, var] = model.predict(xs[0]);
  CHECK(std::isfinite(mean));
  CHECK(std::isfinite(var));
  CHECK(mean == doctest::Approx(-10.0).epsilon(1e-3));
}

TEST_CASE("kernel matrices are positive semidefinite") {
  const GpHyper hyper;
  Rng rng(99);
  const int n = 30;
  Eigen::MatrixXd gram(n, n);
  std::vector<JointConfig> xs;
  for (int i = 0; i < n; ++i)
    xs.push_back(make_q(rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI),
                        rng.uniform(-M_PI, M_PI)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram(i, j) = matern52((xs[i] - xs[j]).norm(), hyper);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  CHECK(eig.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("fit input validation") {
  const GpHyper hyper;
  Eigen::VectorXd y1(1);
  y1 << 0.5;
  CHECK_THROWS_AS(GpModel::fit({}, Eigen::VectorXd(), hyper),
                  std::invalid_argument);
  CHECK_THROWS_AS(GpModel::fit({make_q(0, 0, 0), make_q(1, 0, 0)}, y1, hyper),
                  std::invalid_argument);
  GpHyper bad = hyper;
  bad.lengthscale = 0.0;
  CHECK_THROWS_AS(GpModel::fit({make_q(0, 0, 0)}, y1, bad),
                  std::invalid_argument);
  bad = hyper;
  bad.signal_var = -1.0;
  CHECK_THROWS_AS(GpModel::fit({make_q(0, 0, 0)}, y1, bad),
                  std::invalid_argument);
  bad = hyper;
  bad.noise_var = -1e-9;
  CHECK_THROWS_AS(GpModel::fit({make_q(0, 0, 0)}, y1, bad),
                  std::invalid_argument);
}

TEST_CASE("selection probabilities form a min-max normalized distribution") {
  const GpHyper hyper;
  std::vector<JointConfig> xs = {make_q(0.5, 0, 0), make_q(-0.5, 0, 0)};
  Eigen::VectorXd y(2);
  y << 1.0, -10.0;  // good on +x, catastrophic on -x
  const GpModel model = GpModel::fit(xs, y, hyper);

  const std::vector<JointConfig> cands = {make_q(0.5, 0, 0), make_q(0, 0, 0),
                                          make_q(-0.5, 0, 0)};
  const Eigen::VectorXd p = gp_selection_probs(model, cands);
  REQUIRE(p.size() == 3);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p[0] > p[1]);  // ordering follows the posterior mean
  CHECK(p[1] > p[2]);
  CHECK(p[2] == 0.0);  // min-max normalization zeroes the worst candidate

  SUBCASE("identical candidates fall back to uniform") {
    const std::vector<JointConfig> same(7, make_q(0.1, 0.2, 0.3));
    const Eigen::VectorXd u = gp_selection_probs(model, same);
    for (int i = 0; i < 7; ++i) CHECK(u[i] == 1.0 / 7.0);
  }
  SUBCASE("no candidates is an error") {
    CHECK_THROWS_AS(gp_selection_probs(model, {}), std::invalid_argument);
  }
}

TEST_CASE("guided replacement steers away from observed collisions") {
  // Collisions (reward -10) were logged on the +x side of the stuck
  // configuration, mild rewards on the -x side; guided draws should rarely
  // step deep into the collision basin.
  const GpHyper hyper;
  const ArmModel arm = ArmModel::default_planar();
  const JointConfig stuck = make_q(0.0, 0.0, 0.0);
  std::vector<JointConfig> xs = {make_q(0.125, 0, 0), make_q(0.25, 0, 0),
                                 make_q(-0.125, 0, 0), make_q(-0.25, 0, 0)};
  Eigen::VectorXd y(4);
  y << -10.0, -10.0, -0.1, -0.1;
  const GpModel model = GpModel::fit(xs, y, hyper);

  Rng rng(31337);
  int into_basin = 0, away = 0;
  const int draws = 3000;
  for (int t = 0; t < draws; ++t) {
    const Eigen::VectorXd u =
        gp_guided_action(model, arm, stuck, rng, 64, kActionScale);
    REQUIRE(u.size() == 3);
    CHECK((u.array().abs() <= 1.0).all());  // raw actions, not clipped
    if (u[0] > 0.5) ++into_basin;
    if (u[0] < -0.5) ++away;
  }
  // uniform sampling would land in each tail with frequency 0.25
  CHECK(static_cast<double>(into_basin) / draws < 0.1);
  CHECK(away > into_basin * 2);

  SUBCASE("draws are reproducible") {
    Rng r1(5), r2(5);
    const Eigen::VectorXd a =
        gp_guided_action(model, arm, stuck, r1, 16, kActionScale);
    const Eigen::VectorXd b =
        gp_guided_action(model, arm, stuck, r2, 16, kActionScale);
    CHECK((a - b).norm() == 0.0);
  }
  SUBCASE("candidate count must be positive") {
    Rng r(1);
    CHECK_THROWS_AS(gp_guided_action(model, arm, stuck, r, 0, kActionScale),
                    std::invalid_argument);
  }
}
