#include "crackfield/material.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "crackfield/error.hpp"

namespace crackfield {
namespace {

constexpr const char* kModule = "material";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, kModule, message);
}

constexpr int kPlaneRows[3] = {0, 1, 5};  // xx, yy, xy in Voigt order

bool is_spd(const Eigen::MatrixXd& m) {
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

std::string_view to_string(PlaneState state) {
  return state == PlaneState::stress ? "plane_stress" : "plane_strain";
}

std::string_view to_string(MaterialModel model) {
  switch (model) {
    case MaterialModel::isotropic: return "isotropic";
    case MaterialModel::cubic: return "cubic";
    case MaterialModel::anisotropic: return "anisotropic";
  }
  return "isotropic";
}

PlaneState parse_plane_state(std::string_view text) {
  if (text == "plane_stress" || text == "stress" || text == "plane-stress") return PlaneState::stress;
  if (text == "plane_strain" || text == "strain" || text == "plane-strain") return PlaneState::strain;
  throw Error(ErrorKind::ConfigError, kModule, "unknown plane state '" + std::string(text) + "'");
}

void RambergOsgood::validate() const {
  if (!(sigma0 > 0.0)) fail(ErrorKind::InvalidMaterial, "Ramberg-Osgood sigma0 must be positive");
  if (!(alpha >= 0.0)) fail(ErrorKind::InvalidMaterial, "Ramberg-Osgood alpha must be >= 0");
  if (!(n > 1.0)) fail(ErrorKind::InvalidMaterial, "Ramberg-Osgood exponent n must exceed 1");
}

Material Material::isotropic(double E, double nu, PlaneState state) {
  Material m;
  m.model = MaterialModel::isotropic;
  m.E = E;
  m.nu = nu;
  m.plane_state = state;
  return m;
}

Material Material::cubic(double C11, double C12, double C44, PlaneState state) {
  const EffectiveConstants eff = effective_isotropic_from_cubic(C11, C12, C44, state);
  Stiffness6 C = Stiffness6::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) C(a, b) = a == b ? C11 : C12;
    C(a + 3, a + 3) = C44;
  }
  Material m;
  m.model = MaterialModel::cubic;
  m.C = C;
  m.E = eff.E_eff;
  m.nu = eff.nu_eff;
  m.plane_state = state;
  return m;
}

Material Material::anisotropic(const Stiffness6& C, PlaneState state) {
  const EffectiveConstants eff = effective_isotropic_from_stiffness(C, state);
  Material m;
  m.model = MaterialModel::anisotropic;
  m.C = C;
  m.E = eff.E_eff;
  m.nu = eff.nu_eff;
  m.plane_state = state;
  return m;
}

void Material::validate() const {
  if (!(E > 0.0)) fail(ErrorKind::InvalidMaterial, "Young's modulus must be positive");
  if (!(nu > -1.0 && nu < 0.5)) fail(ErrorKind::InvalidMaterial, "Poisson's ratio must lie in (-1, 0.5)");
  if (model != MaterialModel::isotropic) {
    if (!C) fail(ErrorKind::InvalidMaterial, "cubic/anisotropic material needs a stiffness matrix");
    if (model == MaterialModel::cubic) {
      const double C11 = (*C)(0, 0), C12 = (*C)(0, 1), C44 = (*C)(3, 3);
      if (!(C11 > C12) || !(C44 > 0.0)) fail(ErrorKind::NotPositiveDefinite, "cubic constants need C11 > C12 and C44 > 0");
    }
    if (!is_spd(*C)) fail(ErrorKind::NotPositiveDefinite, "stiffness matrix is not symmetric positive definite");
  }
  if (ro) ro->validate();
}

EffectiveConstants isotropic_constants(double E, double nu, PlaneState state) {
  EffectiveConstants eff;
  eff.E_eff = E;
  eff.nu_eff = nu;
  eff.G_eff = E / (2.0 * (1.0 + nu));
  eff.E_star = state == PlaneState::strain ? E / (1.0 - nu * nu) : E;
  return eff;
}

EffectiveConstants effective_isotropic_from_cubic(double C11, double C12, double C44,
                                                  PlaneState state) {
  if (!(C11 > C12) || !(C44 > 0.0) || !(C11 + 2.0 * C12 > 0.0)) {
    fail(ErrorKind::NotPositiveDefinite,
         "cubic constants must satisfy C11 > C12, C44 > 0 and C11 + 2 C12 > 0");
  }
  const double bulk = (C11 + 2.0 * C12) / 3.0;
  const double shear_voigt = (C11 - C12 + 3.0 * C44) / 5.0;
  const double shear_reuss = 5.0 * (C11 - C12) * C44 / (4.0 * C44 + 3.0 * (C11 - C12));
  const double shear = 0.5 * (shear_voigt + shear_reuss);
  const double E = 9.0 * bulk * shear / (3.0 * bulk + shear);
  const double nu = (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear));
  EffectiveConstants eff = isotropic_constants(E, nu, state);
  eff.G_eff = shear;
  return eff;
}

EffectiveConstants effective_isotropic_from_stiffness(const Stiffness6& C, PlaneState state) {
  if (!is_spd(C)) fail(ErrorKind::NotPositiveDefinite, "stiffness matrix is not symmetric positive definite");
  const Stiffness6 S = C.inverse();
  const double bulk_voigt =
      (C(0, 0) + C(1, 1) + C(2, 2) + 2.0 * (C(0, 1) + C(0, 2) + C(1, 2))) / 9.0;
  const double shear_voigt = (C(0, 0) + C(1, 1) + C(2, 2) - (C(0, 1) + C(0, 2) + C(1, 2)) +
                              3.0 * (C(3, 3) + C(4, 4) + C(5, 5))) / 15.0;
  const double bulk_reuss =
      1.0 / (S(0, 0) + S(1, 1) + S(2, 2) + 2.0 * (S(0, 1) + S(0, 2) + S(1, 2)));
  const double shear_reuss = 15.0 / (4.0 * (S(0, 0) + S(1, 1) + S(2, 2)) -
                                     4.0 * (S(0, 1) + S(0, 2) + S(1, 2)) +
                                     3.0 * (S(3, 3) + S(4, 4) + S(5, 5)));
  const double bulk = 0.5 * (bulk_voigt + bulk_reuss);
  const double shear = 0.5 * (shear_voigt + shear_reuss);
  const double E = 9.0 * bulk * shear / (3.0 * bulk + shear);
  const double nu = (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear));
  EffectiveConstants eff = isotropic_constants(E, nu, state);
  eff.G_eff = shear;
  return eff;
}

EffectiveConstants effective_constants(const Material& material) {
  switch (material.model) {
    case MaterialModel::isotropic:
      return isotropic_constants(material.E, material.nu, material.plane_state);
    case MaterialModel::cubic: {
      const Stiffness6& C = *material.C;
      return effective_isotropic_from_cubic(C(0, 0), C(0, 1), C(3, 3), material.plane_state);
    }
    case MaterialModel::anisotropic:
      return effective_isotropic_from_stiffness(*material.C, material.plane_state);
  }
  return {};
}

Stiffness6 isotropic_stiffness(double E, double nu) {
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Stiffness6 C = Stiffness6::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) C(a, b) = lambda;
    C(a, a) = lambda + 2.0 * mu;
    C(a + 3, a + 3) = mu;
  }
  return C;
}

Matrix3 plane_stiffness_isotropic(double E, double nu, PlaneState state) {
  Matrix3 D = Matrix3::Zero();
  if (state == PlaneState::stress) {
    const double f = E / (1.0 - nu * nu);
    D(0, 0) = D(1, 1) = f;
    D(0, 1) = D(1, 0) = nu * f;
    D(2, 2) = E / (2.0 * (1.0 + nu));
  } else {
    const double f = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    D(0, 0) = D(1, 1) = f * (1.0 - nu);
    D(0, 1) = D(1, 0) = f * nu;
    D(2, 2) = E / (2.0 * (1.0 + nu));
  }
  return D;
}

Matrix3 plane_stiffness(const Material& material) {
  if (material.model == MaterialModel::isotropic) {
    return plane_stiffness_isotropic(material.E, material.nu, material.plane_state);
  }
  const Stiffness6& C = *material.C;
  Matrix3 D;
  if (material.plane_state == PlaneState::strain) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) D(a, b) = C(kPlaneRows[a], kPlaneRows[b]);
  } else {
    Eigen::FullPivLU<Stiffness6> lu(C);
    if (!lu.isInvertible()) fail(ErrorKind::SingularStiffness, "stiffness matrix is singular");
    const Stiffness6 S = lu.inverse();
    Matrix3 S_plane;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) S_plane(a, b) = S(kPlaneRows[a], kPlaneRows[b]);
    Eigen::FullPivLU<Matrix3> lu_plane(S_plane);
    if (!lu_plane.isInvertible()) fail(ErrorKind::SingularStiffness, "condensed compliance is singular");
    D = lu_plane.inverse();
  }
  D = 0.5 * (D + D.transpose()).eval();
  if (!is_spd(D)) fail(ErrorKind::SingularStiffness, "plane stiffness is not positive definite");
  return D;
}

double secant_modulus(const RambergOsgood& ro, double E, double sigma_eq) {
  if (ro.alpha == 0.0 || sigma_eq <= 0.0) return E;
  return E / (1.0 + ro.alpha * std::pow(sigma_eq / ro.sigma0, ro.n - 1.0));
}

double j_from_k(double K_I, double K_II, double K_III, const EffectiveConstants& eff) {
  return (K_I * K_I + K_II * K_II) / eff.E_star + K_III * K_III / (2.0 * eff.G_eff);
}

}  // namespace crackfield
