#include "pmfal/kinematics.hpp"

#include <cmath>
#include <numbers>

namespace pmfal {

using std::numbers::pi;

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec2 rot90(const Vec2& a) { return {-a.y(), a.x()}; }  // z x a

}  // namespace

Eigen::VectorXd GeneralizedState::q() const {
  Eigen::VectorXd out(3 + q_f.size());
  out.head<3>() = pose.vec();
  out.tail(q_f.size()) = q_f;
  return out;
}

Eigen::VectorXd GeneralizedState::q_dot() const {
  Eigen::VectorXd out(3 + q_f_dot.size());
  out.head<3>() = pose_rates;
  out.tail(q_f_dot.size()) = q_f_dot;
  return out;
}

Eigen::MatrixXd Jacobians::J() const {
  const int m = static_cast<int>(J_af.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 + m, 3 + m);
  out.topLeftCorner(3, 3) = J_ax;
  out.topRightCorner(3, m) = J_af;
  out.bottomRightCorner(m, m).setIdentity();
  return out;
}

Eigen::MatrixXd Jacobians::S() const {
  const int m = static_cast<int>(J_af.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(6 + m, 3 + m);
  out.block(0, 0, 3, 3) = J_ax;
  out.block(0, 3, 3, m) = J_af;
  out.block(3, 0, 3, 3) = P_ax;
  out.block(3, 3, 3, m) = P_af;
  out.bottomRightCorner(m, m).setIdentity();
  return out;
}

IkSolution inverse_kinematics(const MechanismParams& p, const ModalBasis& basis,
                              const PlatformPose& pose,
                              const Eigen::VectorXd& q_f) {
  const int n = basis.n();
  if (q_f.size() != 3 * n)
    throw ValidationError("q_f must have length 3n");
  const auto corners = platform_corner_positions(p, pose);
  IkSolution sol{};
  for (int i = 0; i < 3; ++i) {
    double omega_l = 0.0, beta1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      omega_l += basis.phi_tip(j) * q_f[i * n + j - 1];
      beta1 += basis.dphi_tip(j) * q_f[i * n + j - 1];
    }
    const double beta2 = std::atan(omega_l / p.l1);
    const double beta3 = beta2 - beta1;

    const Vec2 PA = p.base_point(i);
    const double a = corners[i].x() - PA.x();
    const double b = corners[i].y() - PA.y();
    const double L2 = a * a + b * b;
    const double L = std::sqrt(L2);
    const double lab = std::sqrt(p.l1 * p.l1 + omega_l * omega_l);

    if (L > lab + p.l2 - 1e-12 || L < std::abs(lab - p.l2) + 1e-12)
      throw UnreachablePoseError(
          "branch " + std::to_string(i + 1) +
          ": corner distance outside reach envelope (|AC| = " +
          std::to_string(L) + ")");

    // Interior elbow angle by the law of cosines.
    double cos_abc = (lab * lab + p.l2 * p.l2 - L2) / (2.0 * lab * p.l2);
    cos_abc = std::clamp(cos_abc, -1.0, 1.0);
    const double angle_abc = std::acos(cos_abc);
    if (angle_abc < 1e-9 || angle_abc > pi - 1e-9)
      throw SingularityError("branch " + std::to_string(i + 1) +
                             ": elbow at singular configuration");

    // Elbow-out branch: the BC direction sits at -(pi - ABC) from the
    // reversed chord, which lands at q_p = pi - ABC + beta3 in the
    // tip-tangent frame.
    const double q_p = pi - angle_abc + beta3;

    // Actuation angle from closure: corner - base = R(alpha + q_a) (c, d),
    // so alpha + q_a = atan2(b, a) - atan2(d, c). The atan2 form picks the
    // correct quadrant for any deflection (the arcsine form loses the branch
    // at large tip deflections).
    const double c = p.l1 + p.l2 * std::cos(beta1 + q_p);
    const double d = omega_l + p.l2 * std::sin(beta1 + q_p);
    double q_a = std::atan2(b, a) - std::atan2(d, c) - p.alpha[i];
    while (q_a < 0.0) q_a += 2.0 * pi;
    while (q_a >= 2.0 * pi) q_a -= 2.0 * pi;

    sol.q_a[i] = q_a;
    sol.q_p[i] = q_p;
    sol.beta1[i] = beta1;
    sol.beta2[i] = beta2;
    sol.beta3[i] = beta3;
    sol.angle_ABC[i] = angle_abc;
    sol.omega_tip[i] = omega_l;
  }

  // Loop-closure check against the corner positions.
  const auto fwd = forward_position(p, basis, sol.q_a, sol.q_p, q_f);
  for (int i = 0; i < 3; ++i) {
    if ((fwd[i] - corners[i]).norm() > 1e-9)
      throw NumericalError("branch " + std::to_string(i + 1) +
                           ": loop closure residual " +
                           std::to_string((fwd[i] - corners[i]).norm()));
  }
  return sol;
}

GeneralizedState make_state(const MechanismParams& p, const ModalBasis& basis,
                            const PlatformPose& pose,
                            const Eigen::VectorXd& q_f, const Vec3& pose_rates,
                            const Eigen::VectorXd& q_f_dot) {
  GeneralizedState st;
  st.pose = pose;
  st.q_f = q_f;
  st.pose_rates = pose_rates;
  st.q_f_dot = q_f_dot;
  st.ik = inverse_kinematics(p, basis, pose, q_f);
  return st;
}

std::array<Vec2, 3> forward_position(const MechanismParams& p,
                                     const ModalBasis& basis, const Vec3& q_a,
                                     const Vec3& q_p,
                                     const Eigen::VectorXd& q_f) {
  const int n = basis.n();
  std::array<Vec2, 3> out;
  for (int i = 0; i < 3; ++i) {
    double omega_l = 0.0, beta1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      omega_l += basis.phi_tip(j) * q_f[i * n + j - 1];
      beta1 += basis.dphi_tip(j) * q_f[i * n + j - 1];
    }
    Vec2 u, v;
    branch_unit_vectors(p, q_a[i], i, u, v);
    const double tw = p.alpha[i] + q_a[i] + beta1 + q_p[i];
    const Vec2 w{std::cos(tw), std::sin(tw)};
    out[i] = p.base_point(i) + p.l1 * u + omega_l * v + p.l2 * w;
  }
  return out;
}

Jacobians jacobians(const MechanismParams& p, const ModalBasis& basis,
                    const GeneralizedState& state) {
  const int n = basis.n();
  Jacobians jac;
  jac.J_af = Eigen::MatrixXd::Zero(3, 3 * n);
  jac.P_ax = Eigen::MatrixXd::Zero(3, 3);
  jac.P_af = Eigen::MatrixXd::Zero(3, 3 * n);

  for (int i = 0; i < 3; ++i) {
    const double omega_l = state.ik.omega_tip[i];
    const double beta1 = state.ik.beta1[i];
    Vec2 u, v;
    branch_unit_vectors(p, state.ik.q_a[i], i, u, v);
    const double tw = p.alpha[i] + state.ik.q_a[i] + beta1 + state.ik.q_p[i];
    const Vec2 w{std::cos(tw), std::sin(tw)};
    const Vec2 zw = rot90(w);

    Eigen::Matrix2d M;  // dF/d[q_a, q_p]
    M.col(0) = p.l1 * v - omega_l * u + p.l2 * zw;
    M.col(1) = p.l2 * zw;
    if (std::abs(M.determinant()) < 1e-12)
      throw SingularityError("branch " + std::to_string(i + 1) +
                             ": singular loop-closure Jacobian");

    // dF/dq_e = -dP_C/dq_e
    Eigen::Matrix<double, 2, 3> Fe;
    const double ca = state.pose.theta + p.alpha[i];
    Fe << -1, 0, p.r * std::sin(ca), 0, -1, -p.r * std::cos(ca);

    // dF/dq_f of this link
    Eigen::MatrixXd Ff(2, n);
    for (int j = 1; j <= n; ++j)
      Ff.col(j - 1) = basis.phi_tip(j) * v + basis.dphi_tip(j) * p.l2 * zw;

    const Eigen::Matrix2d Minv = M.inverse();
    const Eigen::Matrix<double, 2, 3> De = -Minv * Fe;
    const Eigen::MatrixXd Df = -Minv * Ff;

    jac.J_ax.row(i) = De.row(0);
    jac.P_ax.row(i) = De.row(1);
    jac.J_af.block(i, i * n, 1, n) = Df.row(0);
    jac.P_af.block(i, i * n, 1, n) = Df.row(1);
  }
  return jac;
}

Eigen::MatrixXd jacobian_S_dot(const MechanismParams& p, const ModalBasis& basis,
                               const GeneralizedState& state) {
  const int m = static_cast<int>(state.q_f.size());
  const Eigen::VectorXd qd = state.q_dot();
  if (qd.norm() == 0.0) return Eigen::MatrixXd::Zero(6 + m, 3 + m);
  const double h = 1e-6 / (1.0 + qd.norm());

  auto S_at = [&](double sgn) {
    PlatformPose pose{state.pose.x + sgn * h * qd[0],
                      state.pose.y + sgn * h * qd[1],
                      state.pose.theta + sgn * h * qd[2]};
    Eigen::VectorXd q_f = state.q_f + sgn * h * qd.tail(m);
    GeneralizedState st = make_state(p, basis, pose, q_f, state.pose_rates,
                                     state.q_f_dot);
    return jacobians(p, basis, st).S();
  };
  return (S_at(1.0) - S_at(-1.0)) / (2.0 * h);
}

void passive_rates(const MechanismParams& p, const ModalBasis& basis,
                   const GeneralizedState& state,
                   const std::array<Vec2, 3>& corner_vel, Vec3& q_a_dot,
                   Vec3& omega2) {
  const int n = basis.n();
  for (int i = 0; i < 3; ++i) {
    const double omega_l = state.ik.omega_tip[i];
    double omega_l_dot = 0.0;
    for (int j = 1; j <= n; ++j)
      omega_l_dot += basis.phi_tip(j) * state.q_f_dot[i * n + j - 1];

    Vec2 u, v;
    branch_unit_vectors(p, state.ik.q_a[i], i, u, v);
    const double tw =
        p.alpha[i] + state.ik.q_a[i] + state.ik.beta1[i] + state.ik.q_p[i];
    const Vec2 w{std::cos(tw), std::sin(tw)};

    const double denom = p.l1 * v.dot(w) - omega_l * u.dot(w);
    if (std::abs(denom) < 1e-9)
      throw SingularityError("branch " + std::to_string(i + 1) +
                             ": vanishing velocity-projection denominator");
    q_a_dot[i] = (corner_vel[i].dot(w) - omega_l_dot * v.dot(w)) / denom;

    const Vec2 num = corner_vel[i] -
                     (p.l1 * q_a_dot[i] + omega_l_dot) * v +
                     omega_l * q_a_dot[i] * u;
    omega2[i] = cross2(w, num) / p.l2;
  }
}

}  // namespace pmfal
