#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pmfal/dynamics.hpp"

using namespace pmfal;

namespace {

struct RandomState {
  PlatformPose pose;
  Eigen::VectorXd q_f;
};

RandomState random_state(std::mt19937& rng, int n, double pose_range,
                         double tip_range) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RandomState st;
  st.pose = {pose_range * u(rng), pose_range * u(rng), 0.2 * u(rng)};
  st.q_f = Eigen::VectorXd::Zero(3 * n);
  for (int i = 0; i < 3 * n; ++i) st.q_f[i] = tip_range * u(rng);
  return st;
}

}  // namespace

TEST_CASE("inverse kinematics closes every branch loop") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 2);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomState st = random_state(rng, 2, 0.12, 0.01);
    IkSolution ik;
    try {
      ik = inverse_kinematics(p, basis, st.pose, st.q_f);
    } catch (const ValidationError&) {
      continue;  // outside workspace: allowed for random draws
    }
    const auto corners = forward_position(p, basis, ik.q_a, ik.q_p, st.q_f);
    const auto expected = platform_corner_positions(p, st.pose);
    for (int i = 0; i < 3; ++i)
      CHECK((corners[i] - expected[i]).norm() < 1e-9);
  }
}

TEST_CASE("tip deflection follows the modal expansion") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 2);
  Eigen::VectorXd q_f = Eigen::VectorXd::Zero(6);
  q_f[0] = 0.004;
  q_f[1] = -0.001;
  const IkSolution ik = inverse_kinematics(p, basis, {0.02, 0.01, 0.0}, q_f);
  const double expected =
      0.004 * basis.phi_tip(1) - 0.001 * basis.phi_tip(2);
  CHECK(ik.omega_tip[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("unreachable poses are rejected") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 1);
  CHECK_THROWS_AS(inverse_kinematics(p, basis, {2.0, 0.0, 0.0},
                                     Eigen::VectorXd::Zero(3)),
                  ValidationError);
}

TEST_CASE("analytic Jacobians match finite differences") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 2);
  std::mt19937 rng(11);
  const double h = 1e-7;
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 20; ++trial) {
    const RandomState st = random_state(rng, 2, 0.1, 0.008);
    GeneralizedState gs;
    try {
      gs = make_state(p, basis, st.pose, st.q_f, Vec3::Zero(),
                      Eigen::VectorXd::Zero(6));
    } catch (const ValidationError&) {
      continue;
    }
    const Jacobians jac = jacobians(p, basis, gs);
    // Columns against central differences of the IK maps.
    auto ik_at = [&](const Vec3& pose, const Eigen::VectorXd& q_f) {
      return inverse_kinematics(p, basis, PlatformPose::from_vec(pose), q_f);
    };
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      const IkSolution hi = ik_at(gs.pose.vec() + dp, gs.q_f);
      const IkSolution lo = ik_at(gs.pose.vec() - dp, gs.q_f);
      for (int r = 0; r < 3; ++r) {
        CHECK(jac.J_ax(r, c) ==
              doctest::Approx((hi.q_a[r] - lo.q_a[r]) / (2 * h)).epsilon(1e-6));
        CHECK(jac.P_ax(r, c) ==
              doctest::Approx((hi.q_p[r] - lo.q_p[r]) / (2 * h)).epsilon(1e-6));
      }
    }
    for (int c = 0; c < 6; ++c) {
      Eigen::VectorXd dq = Eigen::VectorXd::Zero(6);
      dq[c] = h;
      const IkSolution hi = ik_at(gs.pose.vec(), gs.q_f + dq);
      const IkSolution lo = ik_at(gs.pose.vec(), gs.q_f - dq);
      for (int r = 0; r < 3; ++r) {
        const double fd = (hi.q_a[r] - lo.q_a[r]) / (2 * h);
        CHECK(jac.J_af(r, c) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
    ++tested;
  }
  CHECK(tested == 20);
}

TEST_CASE("velocity map S is consistent with trajectory differentiation") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 1);
  // Smooth test motion through pose and modal coordinates.
  auto pose_at = [](double t) {
    return Vec3(0.05 * std::sin(t), 0.04 * std::cos(1.3 * t),
                0.1 * std::sin(0.7 * t));
  };
  auto qf_at = [](double t) {
    Eigen::VectorXd q(3);
    q << 0.003 * std::sin(2 * t), 0.002 * std::cos(t), 0.001 * std::sin(3 * t);
    return q;
  };
  auto pose_rate_at = [](double t) {
    return Vec3(0.05 * std::cos(t), -0.052 * std::sin(1.3 * t),
                0.07 * std::cos(0.7 * t));
  };
  auto qf_rate_at = [](double t) {
    Eigen::VectorXd q(3);
    q << 0.006 * std::cos(2 * t), -0.002 * std::sin(t),
        0.003 * std::cos(3 * t);
    return q;
  };
  const double h = 1e-6;
  for (double t : {0.2, 0.9, 1.7}) {
    const GeneralizedState gs =
        make_state(p, basis, PlatformPose::from_vec(pose_at(t)), qf_at(t),
                   pose_rate_at(t), qf_rate_at(t));
    const Jacobians jac = jacobians(p, basis, gs);
    Eigen::VectorXd q_dot(6);
    q_dot.head<3>() = pose_rate_at(t);
    q_dot.tail(3) = qf_rate_at(t);
    const Eigen::VectorXd qw_dot = jac.S() * q_dot;

    const IkSolution hi = inverse_kinematics(
        p, basis, PlatformPose::from_vec(pose_at(t + h)), qf_at(t + h));
    const IkSolution lo = inverse_kinematics(
        p, basis, PlatformPose::from_vec(pose_at(t - h)), qf_at(t - h));
    for (int i = 0; i < 3; ++i) {
      const double qa_dot_fd = (hi.q_a[i] - lo.q_a[i]) / (2 * h);
      const double qp_dot_fd = (hi.q_p[i] - lo.q_p[i]) / (2 * h);
      CHECK(qw_dot[i] == doctest::Approx(qa_dot_fd).epsilon(1e-6));
      CHECK(qw_dot[3 + i] == doctest::Approx(qp_dot_fd).epsilon(1e-6));
    }
    for (int i = 0; i < 3; ++i)
      CHECK(qw_dot[6 + i] == doctest::Approx(q_dot[3 + i]).epsilon(1e-12));
  }
}

TEST_CASE("virtual-work identity between torque mappings") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 2);
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 20; ++trial) {
    const RandomState st = random_state(rng, 2, 0.1, 0.008);
    GeneralizedState gs;
    try {
      gs = make_state(p, basis, st.pose, st.q_f, Vec3::Zero(),
                      Eigen::VectorXd::Zero(6));
    } catch (const ValidationError&) {
      continue;
    }
    const Jacobians jac = jacobians(p, basis, gs);
    const Vec3 tau_a(u(rng), u(rng), u(rng));
    Eigen::VectorXd tau_f(6);
    for (int i = 0; i < 6; ++i) tau_f[i] = u(rng);
    Eigen::VectorXd Q, Q_w;
    generalized_force_map(jac, tau_a, tau_f, Q, Q_w);
    const Eigen::VectorXd lhs = jac.J().transpose() * (Eigen::VectorXd(9)
                                    << tau_a, tau_f).finished();
    const Eigen::VectorXd rhs = jac.S().transpose() * Q_w;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((Q - rhs).cwiseAbs().maxCoeff() < 1e-9);
    ++tested;
  }
  CHECK(tested == 20);
}
