#include "crackfield/williams.hpp"

#include <cmath>
#include <numbers>

namespace crackfield::williams {

double kolosov(double nu, PlaneState state) {
  return state == PlaneState::strain ? 3.0 - 4.0 * nu : (3.0 - nu) / (1.0 + nu);
}

Eigen::Vector2d displacement(double K_I, double K_II, double r, double theta, double mu,
                             double kappa) {
  if (r <= 0.0) return Eigen::Vector2d::Zero();
  const double a = std::sqrt(r / (2.0 * std::numbers::pi)) / (2.0 * mu);
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double ct = std::cos(theta);
  const double u1 = a * (K_I * c * (kappa - ct) + K_II * s * (kappa + 2.0 + ct));
  const double u2 = a * (K_I * s * (kappa - ct) - K_II * c * (kappa - 2.0 + ct));
  return {u1, u2};
}

double displacement_antiplane(double K_III, double r, double theta, double mu) {
  if (r <= 0.0) return 0.0;
  return 2.0 * K_III / mu * std::sqrt(r / (2.0 * std::numbers::pi)) * std::sin(0.5 * theta);
}

AuxiliaryField auxiliary(Mode mode, double r, double theta, double mu, double kappa) {
  const double sqrt_r = std::sqrt(r);
  const double root = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double c3 = std::cos(1.5 * theta);
  const double s3 = std::sin(1.5 * theta);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);

  // u_i = sqrt(r) * f_i(theta) * root/(2 mu); f' is d f / d theta.
  double f1, f2, df1, df2;
  double s11, s22, s12;
  if (mode == Mode::I) {
    f1 = c * (kappa - ct);
    f2 = s * (kappa - ct);
    df1 = -0.5 * s * (kappa - ct) + c * st;
    df2 = 0.5 * c * (kappa - ct) + s * st;
    s11 = c * (1.0 - s * s3);
    s22 = c * (1.0 + s * s3);
    s12 = s * c * c3;
  } else {
    f1 = s * (kappa + 2.0 + ct);
    f2 = -c * (kappa - 2.0 + ct);
    df1 = 0.5 * c * (kappa + 2.0 + ct) - s * st;
    df2 = 0.5 * s * (kappa - 2.0 + ct) + c * st;
    s11 = -s * (2.0 + c * c3);
    s22 = s * c * c3;
    s12 = c * (1.0 - s * s3);
  }
  const double amp = root / (2.0 * mu);
  // d/dr (sqrt(r) f) = f / (2 sqrt r);  (1/r) d/dtheta (sqrt(r) f) = f' / sqrt r
  const double du1_dr = amp * f1 / (2.0 * sqrt_r);
  const double du2_dr = amp * f2 / (2.0 * sqrt_r);
  const double du1_dt = amp * df1 / sqrt_r;
  const double du2_dt = amp * df2 / sqrt_r;

  AuxiliaryField out;
  out.grad_u(0, 0) = ct * du1_dr - st * du1_dt;
  out.grad_u(0, 1) = st * du1_dr + ct * du1_dt;
  out.grad_u(1, 0) = ct * du2_dr - st * du2_dt;
  out.grad_u(1, 1) = st * du2_dr + ct * du2_dt;
  const double k = root / sqrt_r;
  out.stress << k * s11, k * s12, k * s12, k * s22;
  return out;
}

}  // namespace crackfield::williams
