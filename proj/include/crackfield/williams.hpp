#pragma once

#include <Eigen/Core>

#include "crackfield/material.hpp"

/// Leading-order near-tip fields of a straight crack, in the tip frame
/// (x1 ahead of the tip, crack faces at theta = +-pi).
namespace crackfield::williams {

/// Kolosov constant: 3 - 4 nu (plane strain), (3 - nu)/(1 + nu) (plane stress).
double kolosov(double nu, PlaneState state);

/// In-plane displacement (u1, u2).
Eigen::Vector2d displacement(double K_I, double K_II, double r, double theta, double mu,
                             double kappa);

/// Anti-plane displacement u3.
double displacement_antiplane(double K_III, double r, double theta, double mu);

/// Field of a unit-K mode used as the auxiliary state of the interaction
/// integral. Tensors are in the tip frame.
struct AuxiliaryField {
  Eigen::Matrix2d stress;   // sigma_ij
  Eigen::Matrix2d grad_u;   // du_i/dx_j
};

enum class Mode { I, II };

AuxiliaryField auxiliary(Mode mode, double r, double theta, double mu, double kappa);

}  // namespace crackfield::williams
