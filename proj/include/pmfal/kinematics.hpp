#pragma once

#include <Eigen/Dense>
#include <array>

#include "pmfal/modal.hpp"
#include "pmfal/params.hpp"

namespace pmfal {

/// Per-branch joint angles and the auxiliary deformation angles of the
/// closed-form inverse kinematics.
struct IkSolution {
  Vec3 q_a;                         // actuation joint angles
  Vec3 q_p;                         // passive (intermediate-link) angles
  std::array<double, 3> beta1;      // tip slope of each actuation link
  std::array<double, 3> beta2;      // atan(omega(l1)/l1)
  std::array<double, 3> beta3;      // beta2 - beta1
  std::array<double, 3> angle_ABC;  // interior elbow angle
  std::array<double, 3> omega_tip;  // omega_i(l1)
};

/// Pose + modal coordinates with rates, plus the dependent joint angles.
struct GeneralizedState {
  PlatformPose pose;
  Eigen::VectorXd q_f;      // 3n, link-major [link1 modes..., link2..., link3]
  Vec3 pose_rates;          // xdot, ydot, thetadot
  Eigen::VectorXd q_f_dot;  // 3n
  IkSolution ik;            // consistent with (pose, q_f)

  int n() const { return static_cast<int>(q_f.size()) / 3; }
  /// Modal coordinates of one link (0-based).
  Eigen::VectorXd link_qf(int i) const { return q_f.segment(i * n(), n()); }
  Eigen::VectorXd link_qf_dot(int i) const {
    return q_f_dot.segment(i * n(), n());
  }
  /// Full generalized coordinate/rate vectors q = [q_e; q_f] (3+3n).
  Eigen::VectorXd q() const;
  Eigen::VectorXd q_dot() const;
};

/// The two kinematic maps q_dot -> q_d_dot and q_dot -> q_w_dot.
struct Jacobians {
  Eigen::Matrix3d J_ax;  // dq_a / dq_e
  Eigen::MatrixXd J_af;  // dq_a / dq_f (3 x 3n)
  Eigen::MatrixXd P_ax;  // dq_p / dq_e (3 x 3)
  Eigen::MatrixXd P_af;  // dq_p / dq_f (3 x 3n)

  /// J: (3+3n) x (3+3n), rows [q_a; q_f].
  Eigen::MatrixXd J() const;
  /// S: (6+3n) x (3+3n), rows [q_a; q_p; q_f].
  Eigen::MatrixXd S() const;
};

/// Closed-form IK following the per-branch case split; throws
/// UnreachablePoseError outside the workspace, SingularityError at flat or
/// folded elbows.
IkSolution inverse_kinematics(const MechanismParams& p, const ModalBasis& basis,
                              const PlatformPose& pose,
                              const Eigen::VectorXd& q_f);

/// Convenience: state with consistent IK and rates filled in.
GeneralizedState make_state(const MechanismParams& p, const ModalBasis& basis,
                            const PlatformPose& pose, const Eigen::VectorXd& q_f,
                            const Vec3& pose_rates, const Eigen::VectorXd& q_f_dot);

/// Loop-closure forward substitution: corner positions from branch chains.
std::array<Vec2, 3> forward_position(const MechanismParams& p,
                                     const ModalBasis& basis, const Vec3& q_a,
                                     const Vec3& q_p,
                                     const Eigen::VectorXd& q_f);

/// Analytic Jacobian blocks by implicit differentiation of loop closure.
Jacobians jacobians(const MechanismParams& p, const ModalBasis& basis,
                    const GeneralizedState& state);

/// Time derivative of S by directional central differencing along the
/// current generalized rates.
Eigen::MatrixXd jacobian_S_dot(const MechanismParams& p, const ModalBasis& basis,
                               const GeneralizedState& state);

/// Velocity projection: actuation rates and intermediate-link angular
/// velocities from given corner velocities.
void passive_rates(const MechanismParams& p, const ModalBasis& basis,
                   const GeneralizedState& state,
                   const std::array<Vec2, 3>& corner_vel, Vec3& q_a_dot,
                   Vec3& omega2);

}  // namespace pmfal
