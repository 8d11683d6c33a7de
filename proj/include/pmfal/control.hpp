#pragma once

#include "pmfal/dynamics.hpp"

namespace pmfal {

enum class ControlKind { ComputedTorque, JointPD };
enum class CompensationModel { Developed, Rigid, ClampedPinned };

std::string to_string(CompensationModel m);

struct ControlLawConfig {
  ControlKind kind = ControlKind::ComputedTorque;
  double Kp = 200.0;
  double Kd = 1.0;
  CompensationModel model = CompensationModel::Developed;
  double control_rate = 1000.0;   // Hz
  double observer_rate = 1000.0;  // Hz
  int n_ctrl = 3;

  void validate() const;
};

/// e = q_desired - q_estimate over [q_e; q_f], desired modal coords zero.
struct TrackingError {
  Eigen::VectorXd e;
  Eigen::VectorXd e_dot;

  auto e_e() const { return e.head<3>(); }
  auto e_f() const { return e.tail(e.size() - 3); }
  auto e_dot_e() const { return e_dot.head<3>(); }
  auto e_dot_f() const { return e_dot.tail(e_dot.size() - 3); }
};

/// Full-actuation computed torque (test fixture: assumes a modal actuator
/// channel exists). tau = (J^T)^{-1} [M(qdd_d + Kp e + Kd edot) + C qdot + K q].
Eigen::VectorXd computed_torque_full(const EomMatrices& eom,
                                     const Jacobians& jac,
                                     const TrackingError& err,
                                     const Eigen::VectorXd& q_hat,
                                     const Eigen::VectorXd& q_dot_hat,
                                     const Eigen::VectorXd& q_dd_desired,
                                     const ControlLawConfig& cfg);

/// Under-actuated partitioned form: pose-block computed torque with modal
/// error compensation through the coupling blocks. The operative controller.
Vec3 computed_torque_actuated(const EomMatrices& eom, const Eigen::Matrix3d& J_ax,
                              const TrackingError& err,
                              const Eigen::VectorXd& q_dot_hat,
                              const Vec3& q_dd_desired_e,
                              const ControlLawConfig& cfg);

/// Decoupled joint PD baseline, no model compensation.
Vec3 joint_pd(const Vec3& q_a_desired, const Vec3& q_a, const Vec3& q_a_dot,
              double Kp, double Kd);

double lyapunov_value(const TrackingError& err, double Kp);
/// The analytic decay rate -Kd ||edot||^2 of the idealized loop.
double lyapunov_rate_expected(const TrackingError& err, double Kd);

}  // namespace pmfal
