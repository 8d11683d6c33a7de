#include "pmfal/observer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace pmfal {

TrainingSet generate_training_set(const MechanismParams& p,
                                  const ModalBasis& basis,
                                  const TrainingRanges& ranges, int count,
                                  unsigned seed) {
  const int n = basis.n();
  if (n < 1) throw ValidationError("basis needs at least one mode");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  TrainingSet set;
  set.inputs.resize(count, 6);
  set.targets.resize(count, 3);

  long attempts = 0, made = 0;
  Eigen::VectorXd q_f = Eigen::VectorXd::Zero(3 * n);
  while (made < count) {
    const PlatformPose pose{ranges.xy * U(rng), ranges.xy * U(rng),
                            ranges.theta * U(rng)};
    Vec3 tip;
    for (int i = 0; i < 3; ++i) {
      tip[i] = ranges.tip * U(rng);
      q_f[i * n] = tip[i];  // tip-normalized first mode carries the deflection
    }
    ++attempts;
    try {
      const IkSolution sol = inverse_kinematics(p, basis, pose, q_f);
      set.inputs.row(made) << sol.q_a[0], sol.q_a[1], sol.q_a[2], tip[0],
          tip[1], tip[2];
      set.targets.row(made) << pose.x, pose.y, pose.theta;
      ++made;
    } catch (const ValidationError&) {
      // out of workspace; resample
    }
    if (attempts >= 100 && made * 10 < attempts * 9)
      throw ValidationError("IK success rate below 90%; ranges exceed workspace");
  }
  return set;
}

void write_training_csv(const std::string& path, const TrainingSet& set) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "qa1,qa2,qa3,w1,w2,w3,x,y,theta\n";
  out.precision(15);
  for (int r = 0; r < set.count(); ++r) {
    for (int c = 0; c < 6; ++c) out << set.inputs(r, c) << ",";
    out << set.targets(r, 0) << "," << set.targets(r, 1) << ","
        << set.targets(r, 2) << "\n";
  }
}

TrainingSet read_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::array<double, 9>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::array<double, 9> row{};
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < 9; ++c) {
      if (!std::getline(ss, cell, ','))
        throw ValidationError("malformed training CSV row: " + line);
      row[c] = std::stod(cell);
    }
    rows.push_back(row);
  }
  TrainingSet set;
  set.inputs.resize(rows.size(), 6);
  set.targets.resize(rows.size(), 3);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 6; ++c) set.inputs(r, c) = rows[r][c];
    for (int c = 0; c < 3; ++c) set.targets(r, c) = rows[r][6 + c];
  }
  return set;
}

const std::vector<int>& ObserverNet::layer_sizes() {
  static const std::vector<int> sizes{6, 30, 30, 30, 3};
  return sizes;
}

ObserverNet ObserverNet::init(unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  const auto& sz = layer_sizes();
  ObserverNet net;
  for (size_t l = 0; l + 1 < sz.size(); ++l) {
    const double scale = std::sqrt(2.0 / (sz[l] + sz[l + 1]));  // Glorot
    Eigen::MatrixXd Wl(sz[l + 1], sz[l]);
    for (int i = 0; i < Wl.size(); ++i) Wl.data()[i] = scale * N(rng);
    net.W.push_back(std::move(Wl));
    net.b.push_back(Eigen::VectorXd::Zero(sz[l + 1]));
  }
  net.in_mean = Eigen::VectorXd::Zero(6);
  net.in_scale = Eigen::VectorXd::Ones(6);
  net.out_mean = Eigen::VectorXd::Zero(3);
  net.out_scale = Eigen::VectorXd::Ones(3);
  return net;
}

void ObserverNet::set_normalization(const TrainingSet& data) {
  auto stats = [](const Eigen::MatrixXd& M, Eigen::VectorXd& mean,
                  Eigen::VectorXd& scale) {
    mean = M.colwise().mean();
    scale.resize(M.cols());
    for (int c = 0; c < M.cols(); ++c) {
      const double var =
          (M.col(c).array() - mean[c]).square().sum() / (M.rows() - 1);
      scale[c] = std::max(std::sqrt(var), 1e-12);
    }
  };
  stats(data.inputs, in_mean, in_scale);
  stats(data.targets, out_mean, out_scale);
}

Eigen::VectorXd ObserverNet::normalize_in(const Eigen::VectorXd& raw) const {
  return (raw - in_mean).cwiseQuotient(in_scale);
}

Eigen::MatrixXd ObserverNet::forward_normalized(const Eigen::MatrixXd& Xn) const {
  Eigen::MatrixXd A = Xn;
  for (size_t l = 0; l < W.size(); ++l) {
    A = (W[l] * A).colwise() + b[l];
    if (l + 1 < W.size()) A = A.array().tanh();
  }
  return A;
}

Eigen::Vector3d ObserverNet::predict(const Eigen::VectorXd& input) const {
  const Eigen::MatrixXd Yn = forward_normalized(normalize_in(input));
  return (Yn.col(0).cwiseProduct(out_scale) + out_mean);
}

PlatformPose ObserverNet::predict_pose(const Eigen::VectorXd& input) const {
  const Eigen::Vector3d y = predict(input);
  return PlatformPose{y[0], y[1], y[2]};
}

Eigen::MatrixXd ObserverNet::predict_batch(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd Xn =
      ((inputs.rowwise() - in_mean.transpose()).array().rowwise() /
       in_scale.transpose().array())
          .transpose();
  const Eigen::MatrixXd Yn = forward_normalized(Xn);
  return ((Yn.array().colwise() * out_scale.array()).colwise() +
          out_mean.array())
      .transpose();
}

void ObserverNet::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "pmfal-observer 1\n";
  const auto& sz = layer_sizes();
  for (int s : sz) out << s << " ";
  out << "\n";
  out.precision(17);
  auto dump_vec = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) out << v[i] << " ";
    out << "\n";
  };
  for (size_t l = 0; l < W.size(); ++l) {
    for (int r = 0; r < W[l].rows(); ++r) {
      for (int c = 0; c < W[l].cols(); ++c) out << W[l](r, c) << " ";
      out << "\n";
    }
    dump_vec(b[l]);
  }
  dump_vec(in_mean);
  dump_vec(in_scale);
  dump_vec(out_mean);
  dump_vec(out_scale);
}

ObserverNet ObserverNet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "pmfal-observer" || version != 1)
    throw ValidationError("unrecognized observer model file " + path);
  const auto& sz = layer_sizes();
  for (int s : sz) {
    int got = 0;
    in >> got;
    if (got != s) throw ValidationError("layer-size mismatch in " + path);
  }
  ObserverNet net;
  auto read_vec = [&](int nlen) {
    Eigen::VectorXd v(nlen);
    for (int i = 0; i < nlen; ++i) in >> v[i];
    return v;
  };
  for (size_t l = 0; l + 1 < sz.size(); ++l) {
    Eigen::MatrixXd Wl(sz[l + 1], sz[l]);
    for (int r = 0; r < Wl.rows(); ++r)
      for (int c = 0; c < Wl.cols(); ++c) in >> Wl(r, c);
    net.W.push_back(std::move(Wl));
    net.b.push_back(read_vec(sz[l + 1]));
  }
  net.in_mean = read_vec(6);
  net.in_scale = read_vec(6);
  net.out_mean = read_vec(3);
  net.out_scale = read_vec(3);
  if (!in) throw ValidationError("truncated observer model file " + path);
  return net;
}

double loss_and_gradient(const ObserverNet& net, const Eigen::MatrixXd& Xn,
                         const Eigen::MatrixXd& Yn,
                         std::vector<Eigen::MatrixXd>& dW,
                         std::vector<Eigen::VectorXd>& db) {
  const size_t L = net.W.size();
  const int m = static_cast<int>(Xn.cols());
  std::vector<Eigen::MatrixXd> act(L + 1);
  act[0] = Xn;
  for (size_t l = 0; l < L; ++l) {
    act[l + 1] = (net.W[l] * act[l]).colwise() + net.b[l];
    if (l + 1 < L) act[l + 1] = act[l + 1].array().tanh();
  }
  const Eigen::MatrixXd err = act[L] - Yn;
  const double loss = err.squaredNorm() / (m * err.rows());

  dW.resize(L);
  db.resize(L);
  Eigen::MatrixXd delta = 2.0 * err / (m * err.rows());
  for (size_t l = L; l-- > 0;) {
    dW[l] = delta * act[l].transpose();
    db[l] = delta.rowwise().sum();
    if (l > 0)
      delta = (net.W[l].transpose() * delta).array() *
              (1.0 - act[l].array().square());
  }
  return loss;
}

double normalized_mse(const ObserverNet& net, const TrainingSet& data) {
  Eigen::MatrixXd Xn =
      ((data.inputs.rowwise() - net.in_mean.transpose()).array().rowwise() /
       net.in_scale.transpose().array())
          .transpose();
  Eigen::MatrixXd Yn =
      ((data.targets.rowwise() - net.out_mean.transpose()).array().rowwise() /
       net.out_scale.transpose().array())
          .transpose();
  const Eigen::MatrixXd err = net.forward_normalized(Xn) - Yn;
  return err.squaredNorm() / (err.cols() * err.rows());
}

TrainReport train(ObserverNet& net, const TrainingSet& train_data,
                  const TrainingSet& test_data, const TrainOptions& opts) {
  if (train_data.count() == 0) throw ValidationError("empty training set");
  const size_t L = net.W.size();
  const int m = train_data.count();

  Eigen::MatrixXd Xn =
      ((train_data.inputs.rowwise() - net.in_mean.transpose())
           .array()
           .rowwise() /
       net.in_scale.transpose().array())
          .transpose();
  Eigen::MatrixXd Yn =
      ((train_data.targets.rowwise() - net.out_mean.transpose())
           .array()
           .rowwise() /
       net.out_scale.transpose().array())
          .transpose();

  // Adam state.
  std::vector<Eigen::MatrixXd> mW(L), vW(L), dW;
  std::vector<Eigen::VectorXd> mb(L), vb(L), db;
  for (size_t l = 0; l < L; ++l) {
    mW[l] = Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols());
    vW[l] = mW[l];
    mb[l] = Eigen::VectorXd::Zero(net.b[l].size());
    vb[l] = mb[l];
  }
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;

  std::mt19937 rng(opts.seed);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);

  TrainReport report;
  double lr = opts.lr;
  ObserverNet best = net;
  double best_test = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double epoch_loss = 0.0;
    int nb = 0;
    for (int start = 0; start < m; start += opts.batch) {
      const int bs = std::min(opts.batch, m - start);
      Eigen::MatrixXd Xb(Xn.rows(), bs), Yb(Yn.rows(), bs);
      for (int k = 0; k < bs; ++k) {
        Xb.col(k) = Xn.col(perm[start + k]);
        Yb.col(k) = Yn.col(perm[start + k]);
      }
      const double loss = loss_and_gradient(net, Xb, Yb, dW, db);
      if (!std::isfinite(loss)) {
        net = best;
        throw NumericalError("training diverged at epoch " +
                             std::to_string(epoch) +
                             "; restored best checkpoint");
      }
      epoch_loss += loss;
      ++nb;
      ++t;
      const double corr =
          lr * std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t));
      for (size_t l = 0; l < L; ++l) {
        mW[l] = b1 * mW[l] + (1 - b1) * dW[l];
        vW[l] = b2 * vW[l].array() + (1 - b2) * dW[l].array().square();
        net.W[l].array() -=
            corr * mW[l].array() / (vW[l].array().sqrt() + eps);
        mb[l] = b1 * mb[l] + (1 - b1) * db[l];
        vb[l] = b2 * vb[l].array() + (1 - b2) * db[l].array().square();
        net.b[l].array() -=
            corr * mb[l].array() / (vb[l].array().sqrt() + eps);
      }
    }
    lr *= opts.lr_decay;
    report.epoch_loss.push_back(epoch_loss / nb);
    if ((epoch + 1) % opts.report_every == 0 || epoch + 1 == opts.epochs) {
      const double test_mse = normalized_mse(net, test_data);
      report.test_loss.push_back(test_mse);
      if (test_mse < best_test) {
        best_test = test_mse;
        best = net;
      }
    }
  }
  net = best;
  report.final_test_mse = best_test;
  return report;
}

RateEstimator::RateEstimator(double dt, double cutoff_hz) : dt_(dt) {
  if (dt <= 0) throw ValidationError("rate-estimator dt must be positive");
  if (cutoff_hz <= 0) {
    alpha_ = 1.0;  // filter off
  } else {
    const double rc = 1.0 / (2.0 * M_PI * cutoff_hz);
    alpha_ = dt_ / (dt_ + rc);
  }
}

void RateEstimator::reset() {
  count_ = 0;
  rates_.setZero();
  prev_.setZero();
}

Vec3 RateEstimator::update(const PlatformPose& pose) {
  const Vec3 v = pose.vec();
  if (count_ == 0) {
    prev_ = v;
    ++count_;
    return Vec3::Zero();
  }
  const Vec3 raw = (v - prev_) / dt_;
  prev_ = v;
  if (count_ == 1)
    rates_ = raw;  // seed the filter on the first real difference
  else
    rates_ += alpha_ * (raw - rates_);
  ++count_;
  return rates_;
}

}  // namespace pmfal
