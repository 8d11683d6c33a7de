#include "pmfal/identification.hpp"

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pmfal {

SnapshotMatrix SnapshotMatrix::from_samples(const Eigen::MatrixXd& W, double dt,
                                            const Eigen::VectorXd& pts) {
  const int m = static_cast<int>(W.rows());
  if (m < 2) throw ValidationError("need at least two snapshots");
  if (W.cols() != pts.size())
    throw ValidationError("snapshot width does not match sample points");
  SnapshotMatrix s;
  s.dt = dt;
  s.sample_points = pts;
  s.Y = W.topRows(m - 1).transpose();
  s.Y_prime = W.bottomRows(m - 1).transpose();
  return s;
}

Eigen::VectorXd uniform_sample_points(double length, int n) {
  Eigen::VectorXd pts(n);
  for (int k = 0; k < n; ++k) pts[k] = length * (k + 1) / n;
  return pts;
}

void write_snapshot_csv(const std::string& path, const Eigen::MatrixXd& W,
                        double dt, const Eigen::VectorXd& pts) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "# dt=" << dt << "\n";
  out << "t";
  for (int k = 0; k < pts.size(); ++k) out << ",x" << k + 1;
  out << "\n";
  out.precision(12);
  for (int r = 0; r < W.rows(); ++r) {
    out << r * dt;
    for (int c = 0; c < W.cols(); ++c) out << "," << W(r, c);
    out << "\n";
  }
}

SnapshotMatrix collect_snapshots(const Plant& plant, const ExcitationSpec& spec,
                                 int link, const std::string& csv_path) {
  if (link < 1 || link > 3) throw ValidationError("link must be 1..3");
  const auto& p = plant.params();
  const auto& basis = plant.basis();
  const int n = basis.n();
  const Eigen::VectorXd pts = uniform_sample_points(p.l1, spec.n_samples);

  const int m = static_cast<int>(std::round(spec.total_time / spec.sample_dt));
  const int sub = static_cast<int>(std::round(spec.sample_dt / plant.options().dt));
  Eigen::MatrixXd W(m, spec.n_samples);

  PlantState st = plant.init_state(PlatformPose{}, Eigen::VectorXd::Zero(3 * n),
                                   Vec3::Zero(), Eigen::VectorXd::Zero(3 * n));
  const Vec3 q_a0 = st.s.ik.q_a;
  const Eigen::VectorXd tau_f = Eigen::VectorXd::Zero(3 * n);

  auto reference = [&](double t) {
    // Smooth (cubic) ramp of all drive angles, then hold.
    const double s = std::clamp(t / spec.ramp_time, 0.0, 1.0);
    return q_a0.array() + spec.ramp_angle * s * s * (3.0 - 2.0 * s);
  };

  int row = 0;
  try {
    for (row = 0; row < m; ++row) {
      for (int c = 0; c < spec.n_samples; ++c)
        W(row, c) = basis.deformation_field(st.s.link_qf(link - 1), pts[c]);
      // PD toward the ramp reference, torque held across the sample period.
      const Jacobians jac = jacobians(p, basis, st.s);
      const Vec3 q_a_dot = jac.J_ax * st.s.pose_rates + jac.J_af * st.s.q_f_dot;
      const Vec3 tau_a =
          spec.kp * (reference(st.t).matrix() - st.s.ik.q_a) - spec.kd * q_a_dot;
      for (int k = 0; k < sub; ++k) plant.step(st, tau_a, tau_f);
    }
  } catch (const std::exception& e) {
    throw NumericalError("plant failed after " + std::to_string(row) +
                         " snapshots: " + e.what());
  }

  if (!csv_path.empty()) write_snapshot_csv(csv_path, W, spec.sample_dt, pts);
  return SnapshotMatrix::from_samples(W, spec.sample_dt, pts);
}

namespace {

// Exact DMD of one shifted pair. n_space <= rows: only the leading n_space
// entries of each mode are kept (identity when no delay embedding is used).
DmdResult dmd_pair(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yp,
                   double dt, int rank, int n_space) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  int r_full = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * sv[0]) ++r_full;
  int r = (rank < 0) ? r_full : rank;
  if (r > r_full)
    throw ValidationError("snapshot matrix rank " + std::to_string(r_full) +
                          " below requested " + std::to_string(r));

  const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  const Eigen::MatrixXd V = svd.matrixV().leftCols(r);
  const Eigen::VectorXd s = sv.head(r);
  const Eigen::MatrixXd YpVSinv = Yp * V * s.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd Atilde = U.transpose() * YpVSinv;

  Eigen::EigenSolver<Eigen::MatrixXd> eig(Atilde);
  Eigen::VectorXcd lambda = eig.eigenvalues();
  Eigen::MatrixXcd modes = YpVSinv * eig.eigenvectors();  // exact DMD modes
  for (int i = 0; i < r; ++i) {
    const double nrm = modes.col(i).norm();
    if (nrm > 0) modes.col(i) /= nrm;
  }

  // Amplitudes from the first snapshot, then sort by |b| descending.
  const Eigen::VectorXcd b =
      modes.colPivHouseholderQr().solve(Y.col(0).cast<std::complex<double>>());
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int c) { return std::abs(b[a]) > std::abs(b[c]); });

  DmdResult out;
  out.rank = r;
  out.eigenvalues.resize(r);
  out.modes.resize(n_space, r);
  out.amplitudes.resize(r);
  out.frequencies_hz.resize(r);
  for (int i = 0; i < r; ++i) {
    const int j = order[i];
    out.eigenvalues[i] = lambda[j];
    out.modes.col(i) = modes.col(j).head(n_space);
    out.amplitudes[i] = std::abs(b[j]);
    out.frequencies_hz[i] = std::abs(std::arg(lambda[j])) / (2.0 * M_PI * dt);
  }

  // Dominant spatial mode: phase-align, project to real, weight by amplitude.
  Eigen::VectorXd best;
  double best_w = -1.0;
  for (int i = 0; i < r; ++i) {
    int imax = 0;
    out.modes.col(i).cwiseAbs().maxCoeff(&imax);
    const std::complex<double> ph =
        out.modes(imax, i) / std::abs(out.modes(imax, i));
    const Eigen::VectorXd re = (out.modes.col(i) / ph).real();
    const double w = out.amplitudes[i] * re.norm();
    if (w > best_w) {
      best_w = w;
      best = re;
    }
  }
  int imax = 0;
  best.cwiseAbs().maxCoeff(&imax);
  out.dominant_mode = best / best[imax];
  if (out.dominant_mode[out.dominant_mode.size() - 1] < 0.0)
    out.dominant_mode = -out.dominant_mode;

  const Eigen::MatrixXd A = YpVSinv * U.transpose();
  out.residual = (Yp - A * Y).norm() / Yp.norm();
  return out;
}

}  // namespace

DmdResult dmd(const SnapshotMatrix& snapshots, int rank) {
  const Eigen::MatrixXd& Y = snapshots.Y;
  const Eigen::MatrixXd& Yp = snapshots.Y_prime;
  if (Y.norm() == 0.0)
    throw ValidationError("degenerate (all-zero) snapshot matrix");
  if (rank >= 0 && Y.cols() < rank + 1)
    throw ValidationError("need at least rank+1 snapshot columns");
  const int ns = static_cast<int>(Y.rows());

  // Plain one-step DMD first; oscillatory fields sampled at few spatial
  // points are not first-order in the sample space, so if the linear fit
  // cannot explain the data, redo with a one-step delay embedding
  // z_k = [y_k; y_{k+1}] (the augmented pair falls out of Y/Y').
  DmdResult plain = dmd_pair(Y, Yp, snapshots.dt, rank, ns);
  if (plain.residual <= 1e-8 || Y.cols() < 3) return plain;

  const int K = static_cast<int>(Y.cols()) - 1;
  Eigen::MatrixXd Z(2 * ns, K), Zp(2 * ns, K);
  Z.topRows(ns) = Y.leftCols(K);
  Z.bottomRows(ns) = Yp.leftCols(K);
  Zp.topRows(ns) = Y.rightCols(K);
  Zp.bottomRows(ns) = Yp.rightCols(K);
  return dmd_pair(Z, Zp, snapshots.dt, rank, ns);
}

CandidateLibrary build_library(const std::vector<BoundaryCondition>& families,
                               double length,
                               const Eigen::VectorXd& sample_points) {
  CandidateLibrary lib;
  lib.sample_points = sample_points;
  const int p = static_cast<int>(families.size()) * 3;
  lib.Theta.resize(sample_points.size(), p);
  int col = 0;
  for (BoundaryCondition bc : families) {
    ModalBasis basis(bc, length, 3);
    for (int j = 1; j <= 3; ++j, ++col) {
      for (int k = 0; k < sample_points.size(); ++k)
        lib.Theta(k, col) = basis.eval_phi(j, sample_points[k]);
      const double m = lib.Theta.col(col).cwiseAbs().maxCoeff();
      lib.Theta.col(col) /= m;
      lib.labels.emplace_back(bc, j);
    }
  }
  return lib;
}

CandidateLibrary build_full_library(double length,
                                    const Eigen::VectorXd& sample_points) {
  return build_library(
      {BoundaryCondition::ClampedFree, BoundaryCondition::PinnedPinned,
       BoundaryCondition::FreeFree, BoundaryCondition::PinnedFree,
       BoundaryCondition::ClampedPinned, BoundaryCondition::ClampedClamped},
      length, sample_points);
}

std::string CandidateLibrary::label_name(int col) const {
  static const char* short_names[] = {"CF", "PP", "FF", "PF", "CP", "CC"};
  const auto& [bc, order] = labels[col];
  return std::string(short_names[static_cast<int>(bc)]) + std::to_string(order);
}

namespace {

// Cyclic coordinate descent for 0.5 ||y - X xi||^2 + lambda ||xi||_1.
Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double lambda, const Eigen::VectorXd& xi0) {
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd xi = xi0;
  Eigen::VectorXd r = y - X * xi;
  Eigen::VectorXd col_sq(p);
  for (int k = 0; k < p; ++k) col_sq[k] = X.col(k).squaredNorm();
  for (int it = 0; it < 10000; ++it) {
    double max_delta = 0.0;
    for (int k = 0; k < p; ++k) {
      if (col_sq[k] == 0.0) continue;
      const double rho = X.col(k).dot(r) + col_sq[k] * xi[k];
      const double z = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) /
                       col_sq[k];
      const double d = z - xi[k];
      if (d != 0.0) {
        r -= d * X.col(k);
        xi[k] = z;
        max_delta = std::max(max_delta, std::abs(d));
      }
    }
    if (max_delta < 1e-10) break;
  }
  return xi;
}

}  // namespace

SindyResult sindy_select(const Eigen::VectorXd& omega_e,
                         const CandidateLibrary& library,
                         std::optional<double> lambda) {
  if (omega_e.norm() == 0.0) throw ValidationError("omega_e is zero");
  const Eigen::MatrixXd& X = library.Theta;
  const int m = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());

  SindyResult out;
  if (lambda) {
    out.lambda = *lambda;
    out.Xi = lasso_cd(X, omega_e, *lambda, Eigen::VectorXd::Zero(p));
  } else {
    const double lmax = (X.transpose() * omega_e).cwiseAbs().maxCoeff();
    Eigen::VectorXd grid(30);  // grid[0] = lmax, descending to 1e-6 * lmax
    for (int g = 0; g < 30; ++g)
      grid[g] = lmax * std::pow(10.0, -6.0 * g / 29.0);

    // Leave-one-out score per grid point, warm-started down the path.
    Eigen::MatrixXd loo_err(30, m);
    for (int i = 0; i < m; ++i) {
      Eigen::MatrixXd Xi_(m - 1, p);
      Eigen::VectorXd yi(m - 1);
      int r = 0;
      for (int k = 0; k < m; ++k) {
        if (k == i) continue;
        Xi_.row(r) = X.row(k);
        yi[r++] = omega_e[k];
      }
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
      for (int g = 0; g < 30; ++g) {
        warm = lasso_cd(Xi_, yi, grid[g], warm);
        const double e = omega_e[i] - X.row(i).dot(warm);
        loo_err(g, i) = e * e;
      }
    }
    Eigen::VectorXd cv = loo_err.rowwise().mean();
    Eigen::VectorXd se(30);
    for (int g = 0; g < 30; ++g) {
      const double mu = cv[g];
      double var = 0.0;
      for (int i = 0; i < m; ++i) {
        const double d = loo_err(g, i) - mu;
        var += d * d;
      }
      se[g] = std::sqrt(var / (m - 1)) / std::sqrt(double(m));
    }
    int gbest = 0;
    cv.minCoeff(&gbest);
    // One-standard-error rule: largest lambda still within reach of the best.
    int gpick = gbest;
    for (int g = 0; g < 30; ++g) {
      if (cv[g] <= cv[gbest] + se[gbest]) {
        gpick = g;
        break;
      }
    }
    out.lambda = grid[gpick];
    out.Xi = lasso_cd(X, omega_e, out.lambda, Eigen::VectorXd::Zero(p));
  }

  // Support after thresholding: coefficients below 5% of the largest are
  // regression debris, not candidate shapes.
  const double xmax = out.Xi.cwiseAbs().maxCoeff();
  for (int k = 0; k < p; ++k)
    if (std::abs(out.Xi[k]) > std::max(1e-8, 0.05 * xmax)) out.active.push_back(k);
  out.residual = (omega_e - X * out.Xi).norm() / omega_e.norm();
  if (!lambda && out.residual > 0.5)
    throw ValidationError("no lambda fits the data (residual " +
                          std::to_string(out.residual) + "); library inadequate");
  return out;
}

std::pair<BoundaryCondition, int> select_mode_shape(
    const SindyResult& sindy, const CandidateLibrary& library) {
  if (sindy.active.empty()) throw ValidationError("empty active set");
  int first = -1, second = -1;
  for (int k : sindy.active) {
    if (first < 0 || std::abs(sindy.Xi[k]) > std::abs(sindy.Xi[first])) {
      second = first;
      first = k;
    } else if (second < 0 || std::abs(sindy.Xi[k]) > std::abs(sindy.Xi[second])) {
      second = k;
    }
  }
  if (second >= 0 &&
      std::abs(sindy.Xi[second]) >= 0.5 * std::abs(sindy.Xi[first]))
    throw AmbiguityError("ambiguous selection: " + library.label_name(first) +
                         " vs " + library.label_name(second));
  return library.labels[first];
}

}  // namespace pmfal
