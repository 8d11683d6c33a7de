#pragma once

#include <string>
#include <vector>

#include "pmfal/kinematics.hpp"

namespace pmfal {

/// Sampling ranges for observer training data (half-widths, SI units).
struct TrainingRanges {
  double xy = 0.15;     // platform x, y
  double theta = 0.2;   // platform rotation
  double tip = 0.06;    // tip deflection per link
};

struct TrainingSet {
  Eigen::MatrixXd inputs;   // rows of (q_a1..3, w1|l1, w2|l1, w3|l1)
  Eigen::MatrixXd targets;  // rows of (x, y, theta)

  int count() const { return static_cast<int>(inputs.rows()); }
};

/// Uniform pose/deflection samples pushed through IK; rows where IK fails
/// are resampled. Tip deflections map to first-mode amplitudes
/// (tip-normalized basis), higher modes zero.
TrainingSet generate_training_set(const MechanismParams& p,
                                  const ModalBasis& basis,
                                  const TrainingRanges& ranges, int count,
                                  unsigned seed);

void write_training_csv(const std::string& path, const TrainingSet& set);
TrainingSet read_training_csv(const std::string& path);

/// Fully-connected 6-30-30-30-3 network, tanh hidden layers, linear output,
/// with per-feature affine normalization folded into prediction.
class ObserverNet {
 public:
  std::vector<Eigen::MatrixXd> W;  // W[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> b;
  Eigen::VectorXd in_mean, in_scale, out_mean, out_scale;

  static const std::vector<int>& layer_sizes();
  static ObserverNet init(unsigned seed);

  /// Fit the normalization constants to a data set.
  void set_normalization(const TrainingSet& data);

  /// Raw-unit prediction for one input row.
  Eigen::Vector3d predict(const Eigen::VectorXd& input) const;
  PlatformPose predict_pose(const Eigen::VectorXd& input) const;

  /// Raw-unit batch prediction, one row per sample.
  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const;

  /// Normalized-space forward pass on columns; used by training.
  Eigen::MatrixXd forward_normalized(const Eigen::MatrixXd& Xn) const;

  Eigen::VectorXd normalize_in(const Eigen::VectorXd& raw) const;

  void save(const std::string& path) const;
  static ObserverNet load(const std::string& path);
};

/// Mean squared error in normalized target units.
double normalized_mse(const ObserverNet& net, const TrainingSet& data);

struct TrainOptions {
  int epochs = 6000;
  int batch = 256;
  double lr = 1e-3;
  double lr_decay = 0.9995;  // multiplicative per epoch
  unsigned seed = 1;
  int report_every = 50;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // normalized train MSE per epoch
  std::vector<double> test_loss;   // at report points (and final)
  double final_test_mse = 0.0;
};

/// Mini-batch Adam on normalized MSE. Deterministic for a fixed seed.
TrainReport train(ObserverNet& net, const TrainingSet& train_data,
                  const TrainingSet& test_data, const TrainOptions& opts);

/// Mean loss and analytic gradient of one normalized batch (columns are
/// samples); exposed for the finite-difference gradient check.
double loss_and_gradient(const ObserverNet& net, const Eigen::MatrixXd& Xn,
                         const Eigen::MatrixXd& Yn,
                         std::vector<Eigen::MatrixXd>& dW,
                         std::vector<Eigen::VectorXd>& db);

/// Backward-difference pose-rate estimator with an optional first-order
/// low-pass on the differentiated signal.
class RateEstimator {
 public:
  RateEstimator(double dt, double cutoff_hz = 100.0);

  /// Feed the next pose sample; returns the current rate estimate
  /// (zero until two samples have been seen).
  Vec3 update(const PlatformPose& pose);
  void reset();

 private:
  double dt_;
  double alpha_;  // filter coefficient; 1 = filter off
  Vec3 prev_ = Vec3::Zero();
  Vec3 rates_ = Vec3::Zero();
  int count_ = 0;
};

}  // namespace pmfal
