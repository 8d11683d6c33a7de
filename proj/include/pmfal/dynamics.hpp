#pragma once

#include <Eigen/Dense>

#include "pmfal/kinematics.hpp"

namespace pmfal {

/// Reduced equations of motion in q = [q_e; q_f] coordinates:
/// M_hat qddot + C_hat qdot + K_hat q = J^T tau.
struct EomMatrices {
  Eigen::MatrixXd M_hat;  // (3+3n) x (3+3n), symmetric positive definite
  Eigen::MatrixXd C_hat;
  Eigen::MatrixXd K_hat;  // nonzero only on the modal block

  int nf() const { return static_cast<int>(M_hat.rows()) - 3; }
  auto M_rr() const { return M_hat.topLeftCorner(3, 3); }
  auto M_rf() const { return M_hat.topRightCorner(3, nf()); }
  auto M_ff() const { return M_hat.bottomRightCorner(nf(), nf()); }
  auto C_rr() const { return C_hat.topLeftCorner(3, 3); }
  auto C_rf() const { return C_hat.topRightCorner(3, nf()); }
  auto C_fr() const { return C_hat.bottomLeftCorner(nf(), 3); }
  auto C_ff() const { return C_hat.bottomRightCorner(nf(), nf()); }
  auto K_ff() const { return K_hat.bottomRightCorner(nf(), nf()); }
};

struct KineticEnergyParts {
  double flexible_links;      // sum of T_i1
  double intermediate_links;  // sum of T_i2
  double platform;            // T_3
  double total() const { return flexible_links + intermediate_links + platform; }
};

/// Mass/velocity-coupling matrix over the extended coordinates
/// [q_e(3); q_a(3); q_p(3); q_f(3n)], assembled from the per-body energy
/// quadratic forms. Depends on the configuration only through q_p and q_f.
Eigen::MatrixXd extended_mass_matrix(const MechanismParams& p,
                                     const ModalBasis& basis, const Vec3& q_p,
                                     const Eigen::VectorXd& q_f);

/// Map q_dot -> extended rates [q_e; q_a; q_p; q_f] rates.
Eigen::MatrixXd extended_selection(const Jacobians& jac);

/// T by direct quadrature of the body velocity fields (velocity-projection
/// route, independent of the mass-matrix assembly).
KineticEnergyParts kinetic_energy(const MechanismParams& p,
                                  const ModalBasis& basis,
                                  const GeneralizedState& state);

/// Elastic energy  0.5 sum_i int EI (d2 omega/dx2)^2 dx  by quadrature.
double potential_energy(const MechanismParams& p, const ModalBasis& basis,
                        const Eigen::VectorXd& q_f);

/// Stiffness matrix on q coordinates (modal block only).
Eigen::MatrixXd stiffness_matrix(const MechanismParams& p,
                                 const ModalBasis& basis);

/// Full EOM assembly at a consistent state.
EomMatrices assemble_eom(const MechanismParams& p, const ModalBasis& basis,
                         const GeneralizedState& state);
/// Variant reusing already-computed Jacobians for the same state.
EomMatrices assemble_eom(const MechanismParams& p, const ModalBasis& basis,
                         const GeneralizedState& state, const Jacobians& jac);

/// Generalized force Q = J^T [tau_a; tau_f] on q coordinates, plus the
/// equivalent Q_w on [q_a; q_p; q_f] (passive-joint torques are zero).
void generalized_force_map(const Jacobians& jac, const Vec3& tau_a,
                           const Eigen::VectorXd& tau_f, Eigen::VectorXd& Q,
                           Eigen::VectorXd& Q_w);

enum class Integrator { RK4, SemiImplicit };

struct PlantOptions {
  double dt = 1e-4;
  Integrator integrator = Integrator::RK4;
  double modal_damping = 0.0;  // damping ratio at mode 1; grows as (w_j/w_1)^2
  double conservative_tol = 0.0;   // >0 enables the zero-input energy check
  bool track_energy = true;        // per-step T/V/work bookkeeping
};

struct PlantState {
  GeneralizedState s;
  double t = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double work_in = 0.0;
};

/// Fixed-step forward-dynamics integrator for the full mechanism.
class Plant {
 public:
  Plant(const MechanismParams& p, ModalBasis basis, PlantOptions opts = {});

  const MechanismParams& params() const { return params_; }
  const ModalBasis& basis() const { return basis_; }
  const PlantOptions& options() const { return opts_; }

  PlantState init_state(const PlatformPose& pose, const Eigen::VectorXd& q_f,
                        const Vec3& pose_rates,
                        const Eigen::VectorXd& q_f_dot) const;

  /// Advance one dt with torques held constant over the step.
  void step(PlantState& st, const Vec3& tau_a,
            const Eigen::VectorXd& tau_f) const;

  /// Accelerations of [q_e; q_f] at a consistent state.
  Eigen::VectorXd acceleration(const GeneralizedState& state, const Vec3& tau_a,
                               const Eigen::VectorXd& tau_f) const;

 private:
  MechanismParams params_;
  ModalBasis basis_;
  PlantOptions opts_;
  Eigen::MatrixXd damping_;  // modal damping on q coordinates
};

}  // namespace pmfal
