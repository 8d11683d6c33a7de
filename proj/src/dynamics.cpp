#include "pmfal/dynamics.hpp"

#include <cmath>

namespace pmfal {

namespace {

// Accumulates one intermediate link's energy quadratic form into the local
// block over (q_a_i, q_p_i, q_f_i): velocities of the link COM are linear
// forms A, B, C in those rates, |P_G_dot|^2 = A^2 + B^2 + C^2
// + 2AC cos(delta) + 2BC sin(delta) with delta the u -> w angle.
void add_intermediate_link(const MechanismParams& p, const ModalBasis& basis,
                           double q_p, double omega_l, double beta1,
                           Eigen::Ref<Eigen::MatrixXd> M, int ia, int ip,
                           int if0) {
  const int n = basis.n();
  const int dim = static_cast<int>(M.rows());
  Eigen::VectorXd A = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd B = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd W = Eigen::VectorXd::Zero(dim);  // angular rate of B_iC_i
  A[ia] = p.l1;
  B[ia] = omega_l;
  W[ia] = 1.0;
  W[ip] = 1.0;
  for (int j = 1; j <= n; ++j) {
    A[if0 + j - 1] = basis.phi_tip(j);
    W[if0 + j - 1] = basis.dphi_tip(j);
  }
  const Eigen::VectorXd C = p.l_c * W;
  const double delta = beta1 + q_p;
  const double cd = std::cos(delta), sd = std::sin(delta);

  M.noalias() += p.m_r * (A * A.transpose() + B * B.transpose() +
                          C * C.transpose());
  M.noalias() += p.m_r * cd * (A * C.transpose() + C * A.transpose());
  M.noalias() += p.m_r * sd * (B * C.transpose() + C * B.transpose());
  M.noalias() += p.J_r * (W * W.transpose());
}

}  // namespace

Eigen::MatrixXd extended_mass_matrix(const MechanismParams& p,
                                     const ModalBasis& basis, const Vec3& q_p,
                                     const Eigen::VectorXd& q_f) {
  const int n = basis.n();
  const int dim = 9 + 3 * n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);

  // Platform.
  M(0, 0) = p.m_e;
  M(1, 1) = p.m_e;
  M(2, 2) = p.J_e;

  const Eigen::MatrixXd& b = basis.int_phi_phi();
  const Eigen::VectorXd& a = basis.int_x_phi();

  for (int i = 0; i < 3; ++i) {
    const int ia = 3 + i;
    const int ip = 6 + i;
    const int if0 = 9 + i * n;
    const auto qf_i = q_f.segment(i * n, n);

    // Flexible actuation link: rho int |r_dot|^2 dx with
    // r_dot = (x qa_dot + omega_dot(x)) v - omega(x) qa_dot u.
    double rot = basis.int_x2();
    if (n > 0) rot += qf_i.dot(b * qf_i);
    M(ia, ia) += p.rho * rot;
    for (int j = 0; j < n; ++j) {
      M(ia, if0 + j) += p.rho * a[j];
      M(if0 + j, ia) += p.rho * a[j];
      for (int k = 0; k < n; ++k) M(if0 + j, if0 + k) += p.rho * b(j, k);
    }

    double omega_l = 0.0, beta1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      omega_l += basis.phi_tip(j) * qf_i[j - 1];
      beta1 += basis.dphi_tip(j) * qf_i[j - 1];
    }
    add_intermediate_link(p, basis, q_p[i], omega_l, beta1, M, ia, ip, if0);
  }
  return M;
}

Eigen::MatrixXd extended_selection(const Jacobians& jac) {
  const int m = static_cast<int>(jac.J_af.cols());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(9 + m, 3 + m);
  S.topLeftCorner(3, 3).setIdentity();
  S.block(3, 0, 3, 3) = jac.J_ax;
  S.block(3, 3, 3, m) = jac.J_af;
  S.block(6, 0, 3, 3) = jac.P_ax;
  S.block(6, 3, 3, m) = jac.P_af;
  S.bottomRightCorner(m, m).setIdentity();
  return S;
}

KineticEnergyParts kinetic_energy(const MechanismParams& p,
                                  const ModalBasis& basis,
                                  const GeneralizedState& state) {
  const int n = basis.n();
  KineticEnergyParts T{};

  // Joint rates via velocity projection.
  std::array<Vec2, 3> corner_vel;
  for (int i = 0; i < 3; ++i) {
    const double ca = state.pose.theta + p.alpha[i];
    corner_vel[i] = {state.pose_rates[0] - p.r * std::sin(ca) * state.pose_rates[2],
                     state.pose_rates[1] + p.r * std::cos(ca) * state.pose_rates[2]};
  }
  Vec3 q_a_dot, omega2;
  passive_rates(p, basis, state, corner_vel, q_a_dot, omega2);

  for (int i = 0; i < 3; ++i) {
    const auto qf_i = state.link_qf(i);
    const auto qfd_i = state.link_qf_dot(i);

    T.flexible_links += 0.5 * p.rho * basis.integrate([&](double x) {
      double w = 0.0, wd = 0.0;
      for (int j = 1; j <= n; ++j) {
        w += basis.eval_phi(j, x) * qf_i[j - 1];
        wd += basis.eval_phi(j, x) * qfd_i[j - 1];
      }
      const double tang = x * q_a_dot[i] + wd;
      const double rad = w * q_a_dot[i];
      return tang * tang + rad * rad;
    });

    double omega_l = 0.0, omega_l_dot = 0.0;
    for (int j = 1; j <= n; ++j) {
      omega_l += basis.phi_tip(j) * qf_i[j - 1];
      omega_l_dot += basis.phi_tip(j) * qfd_i[j - 1];
    }
    Vec2 u, v;
    branch_unit_vectors(p, state.ik.q_a[i], i, u, v);
    const double tw =
        p.alpha[i] + state.ik.q_a[i] + state.ik.beta1[i] + state.ik.q_p[i];
    const Vec2 zw{-std::sin(tw), std::cos(tw)};
    const Vec2 PG_dot = (p.l1 * q_a_dot[i] + omega_l_dot) * v -
                        omega_l * q_a_dot[i] * u + p.l_c * omega2[i] * zw;
    T.intermediate_links +=
        0.5 * p.m_r * PG_dot.squaredNorm() + 0.5 * p.J_r * omega2[i] * omega2[i];
  }

  T.platform = 0.5 * p.m_e * (state.pose_rates[0] * state.pose_rates[0] +
                              state.pose_rates[1] * state.pose_rates[1]) +
               0.5 * p.J_e * state.pose_rates[2] * state.pose_rates[2];
  return T;
}

double potential_energy(const MechanismParams& p, const ModalBasis& basis,
                        const Eigen::VectorXd& q_f) {
  const int n = basis.n();
  if (n == 0) return 0.0;
  double V = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto qf_i = q_f.segment(i * n, n);
    V += 0.5 * p.E * p.I * basis.integrate([&](double x) {
      double curv = 0.0;
      for (int j = 1; j <= n; ++j) curv += basis.eval_phi(j, x, 2) * qf_i[j - 1];
      return curv * curv;
    });
  }
  return V;
}

Eigen::MatrixXd stiffness_matrix(const MechanismParams& p,
                                 const ModalBasis& basis) {
  const int n = basis.n();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3 + 3 * n, 3 + 3 * n);
  for (int i = 0; i < 3; ++i)
    K.block(3 + i * n, 3 + i * n, n, n) = p.E * p.I * basis.int_ddphi_ddphi();
  return K;
}

EomMatrices assemble_eom(const MechanismParams& p, const ModalBasis& basis,
                         const GeneralizedState& state) {
  return assemble_eom(p, basis, state, jacobians(p, basis, state));
}

EomMatrices assemble_eom(const MechanismParams& p, const ModalBasis& basis,
                         const GeneralizedState& state, const Jacobians& jac) {
  const int n = basis.n();
  const int dim_ext = 9 + 3 * n;
  const Eigen::MatrixXd S = extended_selection(jac);
  const Eigen::MatrixXd M_ext =
      extended_mass_matrix(p, basis, state.ik.q_p, state.q_f);

  // Extended rates and the time derivative of the selection map.
  const Eigen::VectorXd q_dot = state.q_dot();
  const Eigen::VectorXd qw_dot = S * q_dot;
  const Eigen::MatrixXd S_kin_dot = jacobian_S_dot(p, basis, state);
  Eigen::MatrixXd S_dot = Eigen::MatrixXd::Zero(dim_ext, 3 + 3 * n);
  S_dot.block(3, 0, 6, 3 + 3 * n) = S_kin_dot.topRows(6);

  // M_ext depends on the configuration only through q_p and q_f, and does so
  // via a handful of per-link scalars (tip deflection omega_l, tip slope
  // beta1, and the u -> w angle delta = beta1 + q_p), so both the directional
  // derivative M_dot and the per-coordinate derivatives in the Christoffel
  // construction G.col(k) = dM/dq_k * qw_dot come out in closed form as
  // low-rank updates over each link's coordinate support.
  Eigen::MatrixXd M_dot = Eigen::MatrixXd::Zero(dim_ext, dim_ext);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim_ext, dim_ext);
  const Eigen::MatrixXd& bmat = basis.int_phi_phi();
  for (int i = 0; i < 3; ++i) {
    const int ia = 3 + i;
    const int ip = 6 + i;
    const int if0 = 9 + i * n;
    const auto qf_i = state.q_f.segment(i * n, n);
    const auto qfd_w = qw_dot.segment(if0, n);

    Eigen::VectorXd A = Eigen::VectorXd::Zero(dim_ext);
    Eigen::VectorXd C = Eigen::VectorXd::Zero(dim_ext);
    A[ia] = p.l1;
    C[ia] = p.l_c;
    C[ip] = p.l_c;
    double omega_l = 0.0, beta1 = 0.0, omega_l_dot = 0.0, delta_dot = qw_dot[ip];
    for (int j = 1; j <= n; ++j) {
      A[if0 + j - 1] = basis.phi_tip(j);
      C[if0 + j - 1] = p.l_c * basis.dphi_tip(j);
      omega_l += basis.phi_tip(j) * qf_i[j - 1];
      beta1 += basis.dphi_tip(j) * qf_i[j - 1];
      omega_l_dot += basis.phi_tip(j) * qfd_w[j - 1];
      delta_dot += basis.dphi_tip(j) * qfd_w[j - 1];
    }
    const double delta = beta1 + state.ik.q_p[i];
    const double cd = std::cos(delta), sd = std::sin(delta);
    const Eigen::VectorXd bqf = n > 0 ? Eigen::VectorXd(bmat * qf_i)
                                      : Eigen::VectorXd();

    // M_dot contribution: three structured updates.
    const double k_ac = -p.m_r * sd * delta_dot;
    const double k_ec = p.m_r * (cd * delta_dot * omega_l + sd * omega_l_dot);
    const double k_ee = 2.0 * p.m_r * omega_l * omega_l_dot +
                        (n > 0 ? 2.0 * p.rho * bqf.dot(qfd_w) : 0.0);
    M_dot.noalias() += k_ac * (A * C.transpose() + C * A.transpose());
    M_dot.col(ia).noalias() += k_ec * C;
    M_dot.row(ia).noalias() += k_ec * C.transpose();
    M_dot(ia, ia) += k_ee;

    // dM/dq_k * qw_dot columns over this link's q_p and q_f coordinates.
    const double av = A.dot(qw_dot);
    const double cv = C.dot(qw_dot);
    const double via = qw_dot[ia];
    // q_p_i: only delta moves.
    Eigen::VectorXd g_delta = p.m_r * (-sd) * (cv * A + av * C);
    g_delta[ia] += p.m_r * cd * omega_l * cv;
    g_delta.noalias() += p.m_r * cd * omega_l * via * C;
    G.col(ip) = g_delta;
    for (int j = 1; j <= n; ++j) {
      const double pj = basis.phi_tip(j);
      const double dj = basis.dphi_tip(j);
      Eigen::VectorXd g = dj * g_delta;
      g.noalias() += p.m_r * sd * pj * via * C;
      g[ia] += p.m_r * sd * pj * cv +
               (2.0 * p.m_r * omega_l * pj + 2.0 * p.rho * bqf[j - 1]) * via;
      G.col(if0 + j - 1) = g;
    }
  }

  const Eigen::MatrixXd C_ext = 0.5 * (M_dot + G - G.transpose());

  EomMatrices eom;
  eom.M_hat = S.transpose() * M_ext * S;
  eom.C_hat = S.transpose() * (M_ext * S_dot + C_ext * S);
  eom.K_hat = stiffness_matrix(p, basis);
  return eom;
}

void generalized_force_map(const Jacobians& jac, const Vec3& tau_a,
                           const Eigen::VectorXd& tau_f, Eigen::VectorXd& Q,
                           Eigen::VectorXd& Q_w) {
  const int m = static_cast<int>(jac.J_af.cols());
  Q.resize(3 + m);
  Q.head<3>() = jac.J_ax.transpose() * tau_a;
  Q.tail(m) = jac.J_af.transpose() * tau_a + tau_f;
  Q_w = Eigen::VectorXd::Zero(6 + m);
  Q_w.head<3>() = tau_a;
  Q_w.tail(m) = tau_f;
}

Plant::Plant(const MechanismParams& p, ModalBasis basis, PlantOptions opts)
    : params_(p), basis_(std::move(basis)), opts_(opts) {
  const int n = basis_.n();
  damping_ = Eigen::MatrixXd::Zero(3 + 3 * n, 3 + 3 * n);
  if (opts_.modal_damping > 0.0 && n > 0) {
    // Frequency-dependent structural damping: the requested ratio applies to
    // the first basis mode and grows as (omega_j / omega_1)^2, so high-order
    // modes are strongly damped while the first mode rings. Viscous
    // coefficient per mode: c_j = 2 zeta_j omega_j m_j.
    const auto omega = basis_.natural_frequencies(params_.E, params_.I, params_.rho);
    for (int j = 0; j < n; ++j) {
      const double zeta_j =
          opts_.modal_damping * (omega[j] / omega[0]) * (omega[j] / omega[0]);
      const double m_j = params_.rho * basis_.int_phi_phi()(j, j);
      // Cap the decay rate so heavily damped high modes stay well inside the
      // explicit integrator's stability region.
      const double rate = std::min(zeta_j * omega[j], 0.05 / opts_.dt);
      for (int i = 0; i < 3; ++i)
        damping_(3 + i * n + j, 3 + i * n + j) = 2.0 * rate * m_j;
    }
  }
}

PlantState Plant::init_state(const PlatformPose& pose,
                             const Eigen::VectorXd& q_f, const Vec3& pose_rates,
                             const Eigen::VectorXd& q_f_dot) const {
  PlantState st;
  st.s = make_state(params_, basis_, pose, q_f, pose_rates, q_f_dot);
  if (opts_.track_energy) {
    st.kinetic = kinetic_energy(params_, basis_, st.s).total();
    st.potential = potential_energy(params_, basis_, st.s.q_f);
  }
  return st;
}

Eigen::VectorXd Plant::acceleration(const GeneralizedState& state,
                                    const Vec3& tau_a,
                                    const Eigen::VectorXd& tau_f) const {
  const Jacobians jac = jacobians(params_, basis_, state);
  const EomMatrices eom = assemble_eom(params_, basis_, state, jac);
  Eigen::VectorXd Q, Q_w;
  generalized_force_map(jac, tau_a, tau_f, Q, Q_w);
  const Eigen::VectorXd q_dot = state.q_dot();
  Eigen::VectorXd rhs = Q - eom.C_hat * q_dot - damping_ * q_dot;
  rhs.tail(3 * basis_.n()).noalias() -=
      eom.K_hat.bottomRightCorner(3 * basis_.n(), 3 * basis_.n()) *
      state.q_f;
  Eigen::LLT<Eigen::MatrixXd> llt(eom.M_hat);
  if (llt.info() != Eigen::Success)
    throw NumericalError("mass matrix factorization failed (not SPD)");
  return llt.solve(rhs);
}

void Plant::step(PlantState& st, const Vec3& tau_a,
                 const Eigen::VectorXd& tau_f) const {
  const double dt = opts_.dt;
  const int m = static_cast<int>(st.s.q_f.size());

  auto deriv = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                   Eigen::VectorXd& dq, Eigen::VectorXd& dqd) {
    GeneralizedState s = make_state(params_, basis_,
                                    PlatformPose{q[0], q[1], q[2]}, q.tail(m),
                                    qd.head<3>(), qd.tail(m));
    dq = qd;
    dqd = acceleration(s, tau_a, tau_f);
  };

  Eigen::VectorXd q = st.s.q(), qd = st.s.q_dot();
  const double work_rate_0 = [&]() -> double {
    if (!opts_.track_energy) return 0.0;
    const Jacobians jac = jacobians(params_, basis_, st.s);
    Eigen::VectorXd Q, Q_w;
    generalized_force_map(jac, tau_a, tau_f, Q, Q_w);
    return qd.dot(Q);
  }();

  if (opts_.integrator == Integrator::RK4) {
    Eigen::VectorXd k1q, k1v, k2q, k2v, k3q, k3v, k4q, k4v;
    deriv(q, qd, k1q, k1v);
    deriv(q + 0.5 * dt * k1q, qd + 0.5 * dt * k1v, k2q, k2v);
    deriv(q + 0.5 * dt * k2q, qd + 0.5 * dt * k2v, k3q, k3v);
    deriv(q + dt * k3q, qd + dt * k3v, k4q, k4v);
    q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    qd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  } else {
    Eigen::VectorXd dq, dqd;
    deriv(q, qd, dq, dqd);
    qd += dt * dqd;
    q += dt * qd;
  }

  st.s = make_state(params_, basis_, PlatformPose{q[0], q[1], q[2]}, q.tail(m),
                    qd.head<3>(), qd.tail(m));
  st.t += dt;

  if (!opts_.track_energy) return;

  const double work_rate_1 = [&] {
    const Jacobians jac = jacobians(params_, basis_, st.s);
    Eigen::VectorXd Q, Q_w;
    generalized_force_map(jac, tau_a, tau_f, Q, Q_w);
    return st.s.q_dot().dot(Q);
  }();
  st.work_in += 0.5 * dt * (work_rate_0 + work_rate_1);

  const double E_prev = st.kinetic + st.potential;
  st.kinetic = kinetic_energy(params_, basis_, st.s).total();
  st.potential = potential_energy(params_, basis_, st.s.q_f);
  if (opts_.conservative_tol > 0.0 && tau_a.norm() == 0.0 &&
      tau_f.norm() == 0.0 && opts_.modal_damping == 0.0) {
    const double E = st.kinetic + st.potential;
    if (std::abs(E - E_prev) > opts_.conservative_tol * (1.0 + std::abs(E_prev)))
      throw NumericalError("energy drift beyond conservative tolerance");
  }
}

}  // namespace pmfal
