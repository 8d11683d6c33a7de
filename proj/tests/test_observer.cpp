#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "pmfal/observer.hpp"

using namespace pmfal;

namespace {

TrainingSet tiny_set(unsigned seed, int count) {
  const MechanismParams p = reference_params();
  const ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 1);
  TrainingRanges ranges;
  ranges.xy = 0.05;
  ranges.theta = 0.1;
  ranges.tip = 0.02;
  return generate_training_set(p, basis, ranges, count, seed);
}

}  // namespace

TEST_CASE("training set rows are consistent with forward geometry") {
  const TrainingSet set = tiny_set(3, 64);
  REQUIRE(set.count() == 64);
  REQUIRE(set.inputs.cols() == 6);
  REQUIRE(set.targets.cols() == 3);
  // Targets stay inside the sampling box.
  CHECK(set.targets.col(0).cwiseAbs().maxCoeff() <= 0.05 + 1e-12);
  CHECK(set.targets.col(1).cwiseAbs().maxCoeff() <= 0.05 + 1e-12);
  CHECK(set.targets.col(2).cwiseAbs().maxCoeff() <= 0.1 + 1e-12);
  CHECK(set.inputs.rightCols(3).cwiseAbs().maxCoeff() <= 0.02 + 1e-12);
  // Joint angles must reproduce under IK of the stored pose.
  const MechanismParams p = reference_params();
  const ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 1);
  for (int r = 0; r < 5; ++r) {
    PlatformPose pose{set.targets(r, 0), set.targets(r, 1), set.targets(r, 2)};
    Eigen::VectorXd q_f(3);
    for (int i = 0; i < 3; ++i) q_f[i] = set.inputs(r, 3 + i) / basis.phi_tip(1);
    const IkSolution sol = inverse_kinematics(p, basis, pose, q_f);
    for (int i = 0; i < 3; ++i) {
      CHECK(sol.q_a[i] == doctest::Approx(set.inputs(r, i)).epsilon(1e-9));
    }
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  ObserverNet net = ObserverNet::init(11);
  const TrainingSet set = tiny_set(5, 16);
  net.set_normalization(set);

  Eigen::MatrixXd Xn(6, set.count()), Yn(3, set.count());
  for (int r = 0; r < set.count(); ++r) {
    Xn.col(r) = net.normalize_in(set.inputs.row(r).transpose());
    Yn.col(r) = (set.targets.row(r).transpose() - net.out_mean)
                    .cwiseQuotient(net.out_scale);
  }

  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
  const double L0 = loss_and_gradient(net, Xn, Yn, dW, db);
  CHECK(L0 > 0.0);

  const double h = 1e-6;
  std::vector<Eigen::MatrixXd> dW2;
  std::vector<Eigen::VectorXd> db2;
  int checked = 0;
  for (size_t l = 0; l < net.W.size(); ++l) {
    for (int idx : {0, static_cast<int>(net.W[l].size()) - 1}) {
      const int i = idx % net.W[l].rows(), j = idx / net.W[l].rows();
      const double keep = net.W[l](i, j);
      net.W[l](i, j) = keep + h;
      const double Lp = loss_and_gradient(net, Xn, Yn, dW2, db2);
      net.W[l](i, j) = keep - h;
      const double Lm = loss_and_gradient(net, Xn, Yn, dW2, db2);
      net.W[l](i, j) = keep;
      const double fd = (Lp - Lm) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(dW[l](i, j)), 1e-8});
      CHECK(std::abs(fd - dW[l](i, j)) / denom < 1e-5);
      ++checked;
    }
    const double keep = net.b[l][0];
    net.b[l][0] = keep + h;
    const double Lp = loss_and_gradient(net, Xn, Yn, dW2, db2);
    net.b[l][0] = keep - h;
    const double Lm = loss_and_gradient(net, Xn, Yn, dW2, db2);
    net.b[l][0] = keep;
    const double fd = (Lp - Lm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(db[l][0]), 1e-8});
    CHECK(std::abs(fd - db[l][0]) / denom < 1e-5);
  }
  CHECK(checked >= 8);
}

TEST_CASE("short training run reduces the loss") {
  const TrainingSet train_data = tiny_set(7, 512);
  const TrainingSet test_data = tiny_set(8, 128);
  ObserverNet net = ObserverNet::init(1);
  net.set_normalization(train_data);
  const double before = normalized_mse(net, test_data);

  TrainOptions opts;
  opts.epochs = 150;
  opts.batch = 128;
  const TrainReport report = train(net, train_data, test_data, opts);
  CHECK(report.final_test_mse < 0.25 * before);
  CHECK(report.final_test_mse == doctest::Approx(normalized_mse(net, test_data))
                                     .epsilon(1e-9));
}

TEST_CASE("save and load round-trips predictions exactly") {
  const TrainingSet set = tiny_set(9, 64);
  ObserverNet net = ObserverNet::init(4);
  net.set_normalization(set);
  const std::string path = "/tmp/pmfal_obs_roundtrip.bin";
  net.save(path);
  const ObserverNet back = ObserverNet::load(path);
  std::remove(path.c_str());

  for (int r = 0; r < 10; ++r) {
    const Eigen::Vector3d a = net.predict(set.inputs.row(r).transpose());
    const Eigen::Vector3d b = back.predict(set.inputs.row(r).transpose());
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("deterministic training for a fixed seed") {
  const TrainingSet train_data = tiny_set(7, 128);
  const TrainingSet test_data = tiny_set(8, 64);
  TrainOptions opts;
  opts.epochs = 20;
  opts.batch = 64;

  ObserverNet a = ObserverNet::init(2);
  a.set_normalization(train_data);
  const TrainReport ra = train(a, train_data, test_data, opts);
  ObserverNet b = ObserverNet::init(2);
  b.set_normalization(train_data);
  const TrainReport rb = train(b, train_data, test_data, opts);
  CHECK(ra.final_test_mse == rb.final_test_mse);
}

TEST_CASE("rate estimator tracks a linear ramp") {
  const double dt = 1e-3;
  RateEstimator est(dt, 0.0);  // cutoff 0 disables the low-pass
  const Vec3 slope(0.3, -0.2, 0.5);
  Vec3 rate = Vec3::Zero();
  for (int k = 0; k <= 50; ++k) {
    const Vec3 v = slope * (k * dt);
    rate = est.update({v[0], v[1], v[2]});
  }
  CHECK((rate - slope).cwiseAbs().maxCoeff() < 1e-9);

  // First sample yields zero (no history yet).
  est.reset();
  rate = est.update({1.0, 2.0, 3.0});
  CHECK(rate.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rate estimator low-pass converges on a ramp") {
  const double dt = 1e-3;
  RateEstimator est(dt, 20.0);
  const Vec3 slope(0.3, -0.2, 0.5);
  Vec3 rate = Vec3::Zero();
  for (int k = 0; k <= 2000; ++k) {
    const Vec3 v = slope * (k * dt);
    rate = est.update({v[0], v[1], v[2]});
  }
  CHECK((rate - slope).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("training csv round trip") {
  const TrainingSet set = tiny_set(12, 32);
  const std::string path = "/tmp/pmfal_train_roundtrip.csv";
  write_training_csv(path, set);
  const TrainingSet back = read_training_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.count() == set.count());
  CHECK((back.inputs - set.inputs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.targets - set.targets).cwiseAbs().maxCoeff() < 1e-12);
}
