#pragma once

#include <cstdint>
#include <vector>

#include "crackfield/field_io.hpp"
#include "crackfield/material.hpp"

namespace crackfield {

/// Analytical mixed-mode crack in an infinite body, sampled on a lattice.
struct SyntheticSpec {
  double K_I = 0.0;    // Pa sqrt(m)
  double K_II = 0.0;
  double K_III = 0.0;
  Material material = Material::isotropic(210e9, 0.3);
  int nx = 51;
  int ny = 51;
  double spacing = 4e-8;  // m
  Vec2 lower = Vec2::Zero();
  Vec2 tip = Vec2::Zero();
  double crack_angle = 0.0;  // radians; crack faces lie along -x1
  /// Use mu = E'/(2(1+nu)) with E' = E/(1-nu^2) instead of E/(2(1+nu)).
  bool paper_mu = false;

  /// Grid of nx x ny nodes centred on the origin.
  static SyntheticSpec centred(double K_I, double K_II, double K_III, int nx, int ny,
                               double spacing, const Material& material);

  void validate() const;
  double shear_modulus() const;
};

DisplacementField generate_williams_field(const SyntheticSpec& spec);

enum class NoiseDistribution { gaussian, uniform };

/// Per-node perturbation with standard deviation `sigma`; masked nodes get 0.
struct NoiseSample {
  std::vector<double> ux, uy, uz;
  double sigma = 0.0;
};

/// Mean of |u| over unmasked nodes.
double mean_magnitude(const DisplacementField& field);

NoiseSample draw_noise(const DisplacementField& field, double fraction, std::uint64_t seed,
                       NoiseDistribution distribution = NoiseDistribution::gaussian);

/// field + sign * noise, leaving mask and coordinates untouched.
DisplacementField apply_noise(const DisplacementField& field, const NoiseSample& noise,
                              double sign = 1.0);

/// Zero-mean noise with std = fraction * mean(|u|) on every unmasked component.
DisplacementField add_noise(const DisplacementField& field, double fraction, std::uint64_t seed,
                            NoiseDistribution distribution = NoiseDistribution::gaussian);

}  // namespace crackfield
