#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pmfal/modal.hpp"
#include "pmfal/params.hpp"

using namespace pmfal;

namespace {

// Independent characteristic functions of the Euler-Bernoulli families,
// in terms of x = beta * l.
double characteristic(BoundaryCondition bc, double x) {
  switch (bc) {
    case BoundaryCondition::ClampedFree: return std::cos(x) * std::cosh(x) + 1.0;
    case BoundaryCondition::PinnedPinned: return std::sin(x);
    case BoundaryCondition::FreeFree: return std::cos(x) * std::cosh(x) - 1.0;
    case BoundaryCondition::PinnedFree: return std::tan(x) - std::tanh(x);
    case BoundaryCondition::ClampedPinned: return std::tan(x) - std::tanh(x);
    case BoundaryCondition::ClampedClamped:
      return std::cos(x) * std::cosh(x) - 1.0;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("mode shapes satisfy the beam ODE phi'''' = beta^4 phi") {
  const double l = 0.6;
  for (BoundaryCondition bc : {BoundaryCondition::ClampedFree,
                               BoundaryCondition::ClampedPinned,
                               BoundaryCondition::PinnedPinned}) {
    ModalBasis basis(bc, l, 3);
    for (int j = 1; j <= 3; ++j) {
      const double beta = basis.roots()[j - 1];
      const double h = 1e-6;
      double worst = 0.0;
      for (double x = 0.1 * l; x <= 0.9 * l; x += 0.05 * l) {
        const double d4 = (basis.eval_phi(j, x + h, 3) -
                           basis.eval_phi(j, x - h, 3)) /
                          (2.0 * h);
        const double expected = std::pow(beta, 4) * basis.eval_phi(j, x);
        worst = std::max(worst,
                         std::abs(d4 - expected) / std::pow(beta, 4));
      }
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("characteristic roots solve the frequency equations") {
  const double l = 0.6;
  for (BoundaryCondition bc : {BoundaryCondition::ClampedFree,
                               BoundaryCondition::PinnedPinned,
                               BoundaryCondition::ClampedClamped,
                               BoundaryCondition::ClampedPinned}) {
    ModalBasis basis(bc, l, 3);
    for (int j = 1; j <= 3; ++j) {
      const double x = basis.roots()[j - 1] * l;
      // tan-tanh forms blow up near odd multiples of pi/2; compare the
      // equivalent sin*cosh - cos*sinh form there.
      double res;
      if (bc == BoundaryCondition::ClampedPinned ||
          bc == BoundaryCondition::PinnedFree)
        res = std::sin(x) * std::cosh(x) - std::cos(x) * std::sinh(x);
      else
        res = characteristic(bc, x);
      CHECK(std::abs(res) / std::cosh(x) < 1e-10);
    }
  }
}

TEST_CASE("clamped-free boundary conditions hold at both ends") {
  const double l = 0.6;
  ModalBasis basis(BoundaryCondition::ClampedFree, l, 2);
  const double h = 1e-4 * l;
  for (int j = 1; j <= 2; ++j) {
    CHECK(std::abs(basis.eval_phi(j, 0.0)) < 1e-10);
    // Second-order one-sided first derivative at the clamped end.
    const double slope0 = (-3.0 * basis.eval_phi(j, 0.0) +
                           4.0 * basis.eval_phi(j, h) -
                           basis.eval_phi(j, 2.0 * h)) /
                          (2.0 * h);
    CHECK(std::abs(slope0) * l < 1e-4);
    // Free end: zero curvature (one-sided second derivative).
    const double curv_l = (2.0 * basis.eval_phi(j, l) -
                           5.0 * basis.eval_phi(j, l - h) +
                           4.0 * basis.eval_phi(j, l - 2.0 * h) -
                           basis.eval_phi(j, l - 3.0 * h)) /
                          (h * h);
    CHECK(std::abs(curv_l) * l * l < 1e-3);
  }
}

TEST_CASE("modes are orthogonal and tip evaluation is consistent") {
  const double l = 0.6;
  for (BoundaryCondition bc :
       {BoundaryCondition::ClampedFree, BoundaryCondition::ClampedPinned}) {
    ModalBasis basis(bc, l, 3);
    const Eigen::MatrixXd G = basis.int_phi_phi();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b)
          CHECK(std::abs(G(a, b)) <
                1e-8 * std::sqrt(G(a, a) * G(b, b)));
    for (int j = 1; j <= 3; ++j)
      CHECK(basis.phi_tip(j) == doctest::Approx(basis.eval_phi(j, l)));
  }
}

TEST_CASE("natural frequencies match the closed-form beam values") {
  const MechanismParams p = reference_params();
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 2);
  const std::vector<double> w = basis.natural_frequencies(p.E, p.I, p.rho);
  // f_j = (beta_j l)^2 / (2 pi) * sqrt(EI / (rho l^4)), first root 1.875104...
  const double bl1 = 1.8751040687119611;
  const double f1 = bl1 * bl1 / (2.0 * M_PI) *
                    std::sqrt(p.E * p.I / (p.rho * std::pow(p.l1, 4)));
  CHECK(w[0] / (2.0 * M_PI) == doctest::Approx(f1).epsilon(1e-9));
  CHECK(w[0] / (2.0 * M_PI) == doctest::Approx(11.4).epsilon(0.01));
}

TEST_CASE("rigid basis has no modal content") {
  ModalBasis rigid = ModalBasis::rigid(0.6);
  CHECK(rigid.n() == 0);
  CHECK(rigid.deformation_field(Eigen::VectorXd::Zero(0), 0.3) == 0.0);
}
