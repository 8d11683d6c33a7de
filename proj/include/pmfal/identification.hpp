#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmfal/dynamics.hpp"

namespace pmfal {

/// Paired snapshot matrices for the mode-shape regression: column k of
/// Y_prime is the sample vector one timestep after column k of Y.
struct SnapshotMatrix {
  Eigen::MatrixXd Y;        // 9 x (m-1)
  Eigen::MatrixXd Y_prime;  // 9 x (m-1)
  double dt = 1e-3;
  Eigen::VectorXd sample_points;  // abscissae on [0, l1]

  /// Build the shifted pair from raw samples W (m rows, one per snapshot).
  static SnapshotMatrix from_samples(const Eigen::MatrixXd& W, double dt,
                                     const Eigen::VectorXd& sample_points);
};

/// Joint-space excitation maneuver: smooth ramp of all drive angles by
/// ramp_angle over ramp_time, then PD hold at the ramped reference.
struct ExcitationSpec {
  double ramp_angle = 5.0 * 3.14159265358979323846 / 180.0;
  double ramp_time = 0.2;
  double total_time = 20.0;
  double sample_dt = 1e-3;
  double kp = 60.0;  // joint PD hold gains
  double kd = 1.5;
  int n_samples = 9;
};

/// Run the maneuver on the plant and sample one link's deformation field.
/// If csv_path is non-empty the raw samples are also written out.
SnapshotMatrix collect_snapshots(const Plant& plant, const ExcitationSpec& spec,
                                 int link, const std::string& csv_path = "");

void write_snapshot_csv(const std::string& path, const Eigen::MatrixXd& W,
                        double dt, const Eigen::VectorXd& sample_points);

struct DmdResult {
  int rank = 0;
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd modes;          // columns, amplitude-sorted
  Eigen::VectorXd amplitudes;      // |b| per retained mode
  Eigen::VectorXd frequencies_hz;  // arg(lambda) / (2 pi dt)
  Eigen::VectorXd dominant_mode;   // max-abs-normalized, tip positive
  double residual = 0.0;           // ||Y' - A Y||_F / ||Y'||_F
};

/// Exact DMD via the SVD of Y; rank < 0 truncates at 1e-10 * sigma_1.
DmdResult dmd(const SnapshotMatrix& snapshots, int rank = -1);

struct CandidateLibrary {
  Eigen::MatrixXd Theta;  // 9 x p, columns max-abs-normalized
  std::vector<std::pair<BoundaryCondition, int>> labels;  // (family, order)
  Eigen::VectorXd sample_points;

  std::string label_name(int col) const;
};

/// First three modes of each family, sampled at the given abscissae.
CandidateLibrary build_library(const std::vector<BoundaryCondition>& families,
                               double length,
                               const Eigen::VectorXd& sample_points);

/// All six families.
CandidateLibrary build_full_library(double length,
                                    const Eigen::VectorXd& sample_points);

Eigen::VectorXd uniform_sample_points(double length, int n = 9);

struct SindyResult {
  Eigen::VectorXd Xi;
  double lambda = 0.0;
  std::vector<int> active;  // column indices with |Xi| above threshold
  double residual = 0.0;    // ||omega_e - Theta Xi|| / ||omega_e||
};

/// LASSO by cyclic coordinate descent. Without an explicit lambda, sweeps a
/// 30-point log grid and picks the sparsest model within one standard error
/// of the best leave-one-out score.
SindyResult sindy_select(const Eigen::VectorXd& omega_e,
                         const CandidateLibrary& library,
                         std::optional<double> lambda = std::nullopt);

/// Largest-coefficient label; a runner-up within 50% raises AmbiguityError.
std::pair<BoundaryCondition, int> select_mode_shape(
    const SindyResult& sindy, const CandidateLibrary& library);

}  // namespace pmfal
