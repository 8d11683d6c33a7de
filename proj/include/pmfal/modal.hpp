#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pmfal/errors.hpp"

namespace pmfal {

enum class BoundaryCondition {
  ClampedFree,
  PinnedPinned,
  FreeFree,
  PinnedFree,
  ClampedPinned,
  ClampedClamped,
};

std::string to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(const std::string& name);

/// Dimensionless characteristic-equation residual at x = beta * length.
double characteristic_residual(BoundaryCondition bc, double x);

/// First n positive characteristic roots beta_j (1/m), bracketed by bisection
/// and polished by Newton to 1e-12 on beta*length.
std::vector<double> solve_characteristic_roots(BoundaryCondition bc,
                                               double length, int n);

/// Evaluable mode-shape family for one boundary condition. Each shape is
/// stored as A cos(bx) + B sin(bx) + C e^{bx} + D e^{-bx} with coefficients
/// computed in a cancellation-free form, then normalized: phi_j(length) = 1
/// where the tip is free, max|phi_j| = 1 otherwise.
class ModalBasis {
 public:
  ModalBasis(BoundaryCondition bc, double length, int n);

  /// Basis with n = 0 modes (rigid limit).
  static ModalBasis rigid(double length);

  BoundaryCondition bc() const { return bc_; }
  double length() const { return length_; }
  int n() const { return n_; }
  const std::vector<double>& roots() const { return roots_; }

  /// phi_j or an x-derivative of it; j is 1-based, derivative order 0..3.
  double eval_phi(int j, double x, int derivative = 0) const;

  /// omega(x) = sum_j phi_j(x) q_f_j for one link.
  double deformation_field(const Eigen::VectorXd& q_f, double x) const;

  /// Slope of the deformation at the link tip, sum_j phi_j'(l) q_f_j.
  double tip_slope(const Eigen::VectorXd& q_f) const;

  /// Natural frequencies omega_j = beta_j^2 sqrt(EI/rho), rad/s.
  std::vector<double> natural_frequencies(double E, double I, double rho) const;

  /// Cached tip values phi_j(length) and phi_j'(length).
  double phi_tip(int j) const { return phi_tip_[j - 1]; }
  double dphi_tip(int j) const { return dphi_tip_[j - 1]; }

  /// Gauss-Legendre integral of f over [0, length], 32 nodes.
  template <class F>
  double integrate(F&& f) const;

  /// Precomputed beam integrals over [0, length]:
  /// int x^2 dx, a_j = int x phi_j dx, b_jk = int phi_j phi_k dx,
  /// c_jk = int phi_j'' phi_k'' dx.
  double int_x2() const { return int_x2_; }
  const Eigen::VectorXd& int_x_phi() const { return a_; }
  const Eigen::MatrixXd& int_phi_phi() const { return b_; }
  const Eigen::MatrixXd& int_ddphi_ddphi() const { return c_; }

 private:
  struct ShapeCoef {
    double A, B, C, D;  // A cos + B sin + C e^{u} + D e^{-u}, u = beta x
    double scale;       // normalization factor applied on evaluation
  };

  double eval_raw(const ShapeCoef& s, double beta, double x, int order) const;

  BoundaryCondition bc_;
  double length_;
  int n_;
  std::vector<double> roots_;
  std::vector<ShapeCoef> coef_;
  std::vector<double> phi_tip_, dphi_tip_;
  double int_x2_ = 0.0;
  Eigen::VectorXd a_;
  Eigen::MatrixXd b_, c_;
};

/// Gauss-Legendre nodes/weights on [0, 1].
std::vector<std::pair<double, double>> gauss_legendre(int n);
const std::vector<std::pair<double, double>>& gauss_legendre_32();

template <class F>
double ModalBasis::integrate(F&& f) const {
  double acc = 0.0;
  for (const auto& [t, w] : gauss_legendre_32()) acc += w * f(t * length_);
  return acc * length_;
}

}  // namespace pmfal
