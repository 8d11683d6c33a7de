#include "pmfal/modal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pmfal {

using std::numbers::pi;

std::string to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::ClampedFree: return "clamped-free";
    case BoundaryCondition::PinnedPinned: return "pinned-pinned";
    case BoundaryCondition::FreeFree: return "free-free";
    case BoundaryCondition::PinnedFree: return "pinned-free";
    case BoundaryCondition::ClampedPinned: return "clamped-pinned";
    case BoundaryCondition::ClampedClamped: return "clamped-clamped";
  }
  return "?";
}

BoundaryCondition boundary_condition_from_string(const std::string& name) {
  if (name == "clamped-free" || name == "CF") return BoundaryCondition::ClampedFree;
  if (name == "pinned-pinned" || name == "PP") return BoundaryCondition::PinnedPinned;
  if (name == "free-free" || name == "FF") return BoundaryCondition::FreeFree;
  if (name == "pinned-free" || name == "PF") return BoundaryCondition::PinnedFree;
  if (name == "clamped-pinned" || name == "CP") return BoundaryCondition::ClampedPinned;
  if (name == "clamped-clamped" || name == "CC") return BoundaryCondition::ClampedClamped;
  throw ValidationError("unknown boundary condition: " + name);
}

// Bounded forms of the characteristic equations (divided through by cosh
// where the raw form grows like e^x).
double characteristic_residual(BoundaryCondition bc, double x) {
  switch (bc) {
    case BoundaryCondition::ClampedFree:
      return std::cos(x) + 1.0 / std::cosh(x);
    case BoundaryCondition::PinnedPinned:
      return std::sin(x);
    case BoundaryCondition::FreeFree:
    case BoundaryCondition::ClampedClamped:
      return std::cos(x) - 1.0 / std::cosh(x);
    case BoundaryCondition::PinnedFree:
    case BoundaryCondition::ClampedPinned:
      return std::sin(x) - std::cos(x) * std::tanh(x);
  }
  return 0.0;
}

namespace {

// Bracket containing the j-th (1-based) positive root, elastic modes only.
std::pair<double, double> root_bracket(BoundaryCondition bc, int j) {
  switch (bc) {
    case BoundaryCondition::ClampedFree:
      return {(j - 1) * pi + 1e-8, j * pi};
    case BoundaryCondition::PinnedPinned:
      return {(j - 0.5) * pi, (j + 0.5) * pi};
    case BoundaryCondition::FreeFree:
    case BoundaryCondition::ClampedClamped:
    case BoundaryCondition::PinnedFree:
    case BoundaryCondition::ClampedPinned:
      return {j * pi, (j + 1) * pi};
  }
  return {0, 0};
}

double bisect_root(BoundaryCondition bc, double lo, double hi) {
  double flo = characteristic_residual(bc, lo);
  double fhi = characteristic_residual(bc, hi);
  if (flo * fhi > 0)
    throw NumericalError("characteristic root bracketing failed on [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = characteristic_residual(bc, mid);
    if (flo * fm <= 0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  // Newton polish on the bounded residual.
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    double h = 1e-7;
    double d = (characteristic_residual(bc, x + h) -
                characteristic_residual(bc, x - h)) / (2 * h);
    if (d == 0.0) break;
    double step = characteristic_residual(bc, x) / d;
    if (std::abs(step) > hi - lo) break;
    x -= step;
  }
  return x;
}

}  // namespace

std::vector<double> solve_characteristic_roots(BoundaryCondition bc,
                                               double length, int n) {
  if (n < 1) throw ValidationError("mode count must be >= 1");
  std::vector<double> roots(n);
  for (int j = 1; j <= n; ++j) {
    double x;
    if (bc == BoundaryCondition::PinnedPinned) {
      x = j * pi;
    } else {
      auto [lo, hi] = root_bracket(bc, j);
      x = bisect_root(bc, lo, hi);
    }
    roots[j - 1] = x / length;
  }
  return roots;
}

ModalBasis::ModalBasis(BoundaryCondition bc, double length, int n)
    : bc_(bc), length_(length), n_(n) {
  if (length <= 0) throw ValidationError("beam length must be positive");
  if (n == 0) {
    a_.resize(0);
    b_.resize(0, 0);
    c_.resize(0, 0);
    int_x2_ = length * length * length / 3.0;
    return;
  }
  roots_ = solve_characteristic_roots(bc, length, n);
  coef_.resize(n);
  for (int j = 0; j < n; ++j) {
    const double ul = roots_[j] * length;
    const double cu = std::cos(ul), su = std::sin(ul);
    const double ch = std::cosh(ul), sh = std::sinh(ul);
    ShapeCoef s{};
    switch (bc) {
      case BoundaryCondition::ClampedFree: {
        // phi = cos - cosh + r (sin - sinh); 1+r written so no large terms
        // cancel (r -> -1 for high modes).
        const double r = (su - sh) / (cu + ch);
        const double one_plus_r = (cu + su + std::exp(-ul)) / (cu + ch);
        s = {1.0, r, -0.5 * one_plus_r, -0.5 * (2.0 - one_plus_r), 1.0};
        break;
      }
      case BoundaryCondition::PinnedPinned:
        s = {0.0, 1.0, 0.0, 0.0, 1.0};
        break;
      case BoundaryCondition::FreeFree: {
        // phi = cos + cosh - sigma (sin + sinh), sigma -> 1 for high modes.
        const double sigma = (ch - cu) / (sh - su);
        const double one_minus_sigma = (cu - su - std::exp(-ul)) / (sh - su);
        s = {1.0, -sigma, 0.5 * one_minus_sigma, 0.5 * (2.0 - one_minus_sigma),
             1.0};
        break;
      }
      case BoundaryCondition::ClampedPinned:
      case BoundaryCondition::ClampedClamped: {
        // phi = cosh - cos - sigma (sinh - sin)
        const double sigma = (ch - cu) / (sh - su);
        const double one_minus_sigma = (cu - su - std::exp(-ul)) / (sh - su);
        s = {-1.0, sigma, 0.5 * one_minus_sigma, 0.5 * (2.0 - one_minus_sigma),
             1.0};
        break;
      }
      case BoundaryCondition::PinnedFree: {
        const double k = su / sh;
        s = {0.0, 1.0, 0.5 * k, -0.5 * k, 1.0};
        break;
      }
    }
    // Normalization: unit tip value when the tip does not vanish there,
    // otherwise unit peak value.
    const double beta = roots_[j];
    double tip = eval_raw(s, beta, length, 0);
    double peak = 0.0, peak_val = 0.0;
    for (int g = 0; g <= 2000; ++g) {
      double v = eval_raw(s, beta, length * g / 2000.0, 0);
      if (std::abs(v) > peak) {
        peak = std::abs(v);
        peak_val = v;
      }
    }
    s.scale = (std::abs(tip) > 1e-6 * peak) ? 1.0 / tip : 1.0 / peak_val;
    coef_[j] = s;
  }

  phi_tip_.resize(n);
  dphi_tip_.resize(n);
  for (int j = 1; j <= n; ++j) {
    phi_tip_[j - 1] = eval_phi(j, length, 0);
    dphi_tip_[j - 1] = eval_phi(j, length, 1);
  }

  int_x2_ = length * length * length / 3.0;
  a_.resize(n);
  b_.resize(n, n);
  c_.resize(n, n);
  for (int j = 1; j <= n; ++j) {
    a_[j - 1] = integrate([&](double x) { return x * eval_phi(j, x); });
    for (int k = 1; k <= j; ++k) {
      b_(j - 1, k - 1) = b_(k - 1, j - 1) =
          integrate([&](double x) { return eval_phi(j, x) * eval_phi(k, x); });
      c_(j - 1, k - 1) = c_(k - 1, j - 1) = integrate(
          [&](double x) { return eval_phi(j, x, 2) * eval_phi(k, x, 2); });
    }
  }
}

ModalBasis ModalBasis::rigid(double length) {
  return ModalBasis(BoundaryCondition::ClampedFree, length, 0);
}

double ModalBasis::eval_raw(const ShapeCoef& s, double beta, double x,
                            int order) const {
  const double u = beta * x;
  const double cu = std::cos(u), su = std::sin(u);
  const double eu = std::exp(u), emu = std::exp(-u);
  double trig;
  switch (order % 4) {
    case 0: trig = s.A * cu + s.B * su; break;
    case 1: trig = -s.A * su + s.B * cu; break;
    case 2: trig = -s.A * cu - s.B * su; break;
    default: trig = s.A * su - s.B * cu; break;
  }
  const double expo = s.C * eu + ((order % 2) ? -s.D : s.D) * emu;
  return std::pow(beta, order) * (trig + expo);
}

double ModalBasis::eval_phi(int j, double x, int derivative) const {
  if (j < 1 || j > n_) throw ValidationError("mode index out of range");
  if (x < -1e-12 || x > length_ * (1 + 1e-12))
    throw ValidationError("evaluation point outside [0, length]");
  if (derivative < 0 || derivative > 3)
    throw ValidationError("derivative order must be 0..3");
  const ShapeCoef& s = coef_[j - 1];
  return s.scale * eval_raw(s, roots_[j - 1], x, derivative);
}

double ModalBasis::deformation_field(const Eigen::VectorXd& q_f,
                                     double x) const {
  if (q_f.size() != n_)
    throw ValidationError("modal coordinate vector has wrong length");
  double acc = 0.0;
  for (int j = 1; j <= n_; ++j) acc += eval_phi(j, x) * q_f[j - 1];
  return acc;
}

double ModalBasis::tip_slope(const Eigen::VectorXd& q_f) const {
  if (q_f.size() != n_)
    throw ValidationError("modal coordinate vector has wrong length");
  double acc = 0.0;
  for (int j = 1; j <= n_; ++j) acc += dphi_tip_[j - 1] * q_f[j - 1];
  return acc;
}

std::vector<double> ModalBasis::natural_frequencies(double E, double I,
                                                    double rho) const {
  std::vector<double> w(n_);
  for (int j = 0; j < n_; ++j)
    w[j] = roots_[j] * roots_[j] * std::sqrt(E * I / rho);
  return w;
}

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  // Nodes/weights on [0, 1] via Newton on the Legendre recurrence.
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    out[n - 1 - i] = {0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp)};
  }
  return out;
}

const std::vector<std::pair<double, double>>& gauss_legendre_32() {
  static const auto table = gauss_legendre(32);
  return table;
}

}  // namespace pmfal
