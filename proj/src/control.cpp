#include "pmfal/control.hpp"

namespace pmfal {

std::string to_string(CompensationModel m) {
  switch (m) {
    case CompensationModel::Developed: return "developed";
    case CompensationModel::Rigid: return "rigid";
    case CompensationModel::ClampedPinned: return "clamped-pinned";
  }
  return "?";
}

void ControlLawConfig::validate() const {
  if (Kp <= 0 || Kd <= 0) throw ValidationError("gains must be positive");
  if (control_rate < observer_rate)
    throw ValidationError("control rate must be at least the observer rate");
  if (n_ctrl < 0) throw ValidationError("n_ctrl must be non-negative");
}

Eigen::VectorXd computed_torque_full(const EomMatrices& eom,
                                     const Jacobians& jac,
                                     const TrackingError& err,
                                     const Eigen::VectorXd& q_hat,
                                     const Eigen::VectorXd& q_dot_hat,
                                     const Eigen::VectorXd& q_dd_desired,
                                     const ControlLawConfig& cfg) {
  const int nf = eom.nf();
  const Eigen::VectorXd v = q_dd_desired + cfg.Kp * err.e + cfg.Kd * err.e_dot;
  Eigen::VectorXd rhs = eom.M_hat * v + eom.C_hat * q_dot_hat;
  rhs.tail(nf) += eom.K_ff() * q_hat.tail(nf);
  const Eigen::MatrixXd Jt = jac.J().transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Jt);
  if (!lu.isInvertible()) throw SingularityError("J^T is singular");
  return lu.solve(rhs);
}

Vec3 computed_torque_actuated(const EomMatrices& eom, const Eigen::Matrix3d& J_ax,
                              const TrackingError& err,
                              const Eigen::VectorXd& q_dot_hat,
                              const Vec3& q_dd_desired_e,
                              const ControlLawConfig& cfg) {
  const int nf = eom.nf();
  Vec3 rhs = eom.M_rr() * q_dd_desired_e +
             cfg.Kp * (eom.M_rr() * err.e_e() + eom.M_rf() * err.e_f()) +
             cfg.Kd * (eom.M_rr() * err.e_dot_e() + eom.M_rf() * err.e_dot_f()) +
             eom.C_rr() * q_dot_hat.head<3>() +
             eom.C_rf() * q_dot_hat.tail(nf);
  const Eigen::Matrix3d Jt = J_ax.transpose();
  if (std::abs(Jt.determinant()) < 1e-12)
    throw SingularityError("J_ax^T is singular");
  return Jt.inverse() * rhs;
}

Vec3 joint_pd(const Vec3& q_a_desired, const Vec3& q_a, const Vec3& q_a_dot,
              double Kp, double Kd) {
  return Kp * (q_a_desired - q_a) - Kd * q_a_dot;
}

double lyapunov_value(const TrackingError& err, double Kp) {
  return 0.5 * err.e_dot.squaredNorm() + 0.5 * Kp * err.e.squaredNorm();
}

double lyapunov_rate_expected(const TrackingError& err, double Kd) {
  return -Kd * err.e_dot.squaredNorm();
}

}  // namespace pmfal
