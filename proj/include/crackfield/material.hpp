#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace crackfield {

enum class PlaneState { stress, strain };
enum class MaterialModel { isotropic, cubic, anisotropic };

std::string_view to_string(PlaneState state);
std::string_view to_string(MaterialModel model);
PlaneState parse_plane_state(std::string_view text);

using Stiffness6 = Eigen::Matrix<double, 6, 6>;
using Matrix3 = Eigen::Matrix3d;

/// Ramberg-Osgood law E*eps = sigma + alpha*sigma*(sigma/sigma0)^(n-1).
struct RambergOsgood {
  double sigma0 = 0.0;  // Pa
  double alpha = 0.0;
  double n = 1.0;

  void validate() const;
};

/// Elastic (optionally Ramberg-Osgood) material. For cubic and anisotropic
/// models `C` holds the 6x6 Voigt stiffness (order 11,22,33,23,13,12,
/// engineering shear strains) and E/nu are derived when not given.
struct Material {
  MaterialModel model = MaterialModel::isotropic;
  double E = 0.0;
  double nu = 0.0;
  std::optional<Stiffness6> C;
  std::optional<RambergOsgood> ro;
  PlaneState plane_state = PlaneState::strain;

  static Material isotropic(double E, double nu, PlaneState state = PlaneState::strain);
  static Material cubic(double C11, double C12, double C44, PlaneState state = PlaneState::strain);
  static Material anisotropic(const Stiffness6& C, PlaneState state = PlaneState::strain);

  void validate() const;
};

struct EffectiveConstants {
  double E_eff = 0.0;
  double G_eff = 0.0;
  double nu_eff = 0.0;
  double E_star = 0.0;  // E/(1-nu^2) in plane strain, E in plane stress
};

EffectiveConstants effective_isotropic_from_cubic(double C11, double C12, double C44,
                                                  PlaneState state = PlaneState::strain);
/// Voigt-Reuss-Hill average of an arbitrary 6x6 stiffness.
EffectiveConstants effective_isotropic_from_stiffness(const Stiffness6& C,
                                                      PlaneState state = PlaneState::strain);
EffectiveConstants effective_constants(const Material& material);
EffectiveConstants isotropic_constants(double E, double nu, PlaneState state);

Stiffness6 isotropic_stiffness(double E, double nu);

/// D relating (exx, eyy, gxy) to (sxx, syy, sxy).
Matrix3 plane_stiffness(const Material& material);
Matrix3 plane_stiffness_isotropic(double E, double nu, PlaneState state);

/// E / (1 + alpha (sigma_eq/sigma0)^(n-1)).
double secant_modulus(const RambergOsgood& ro, double E, double sigma_eq);

/// (K_I^2 + K_II^2)/E* + K_III^2/(2G).
double j_from_k(double K_I, double K_II, double K_III, const EffectiveConstants& eff);

}  // namespace crackfield
