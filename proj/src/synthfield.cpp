#include "crackfield/synthfield.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "crackfield/williams.hpp"

namespace crackfield {
namespace {

constexpr const char* kModule = "synthfield";

}  // namespace

SyntheticSpec SyntheticSpec::centred(double K_I, double K_II, double K_III, int nx, int ny,
                                     double spacing, const Material& material) {
  SyntheticSpec spec;
  spec.K_I = K_I;
  spec.K_II = K_II;
  spec.K_III = K_III;
  spec.material = material;
  spec.nx = nx;
  spec.ny = ny;
  spec.spacing = spacing;
  spec.lower = Vec2(-0.5 * (nx - 1) * spacing, -0.5 * (ny - 1) * spacing);
  spec.tip = Vec2::Zero();
  return spec;
}

void SyntheticSpec::validate() const {
  if (nx < 3 || ny < 3) throw Error(ErrorKind::InvalidStudy, kModule, "grid needs at least 3x3 nodes");
  if (!(spacing > 0.0)) throw Error(ErrorKind::InvalidStudy, kModule, "grid spacing must be positive");
  if (material.model != MaterialModel::isotropic) {
    throw Error(ErrorKind::InvalidMaterial, kModule, "synthetic fields need an isotropic material");
  }
  material.validate();
  if (!std::isfinite(K_I) || !std::isfinite(K_II) || !std::isfinite(K_III)) {
    throw Error(ErrorKind::NonFiniteInput, kModule, "stress intensity factors must be finite");
  }
}

double SyntheticSpec::shear_modulus() const {
  const double E = paper_mu ? material.E / (1.0 - material.nu * material.nu) : material.E;
  return E / (2.0 * (1.0 + material.nu));
}

DisplacementField generate_williams_field(const SyntheticSpec& spec) {
  spec.validate();
  const bool out_of_plane = spec.K_III != 0.0;
  DisplacementField field =
      DisplacementField::zeros(spec.nx, spec.ny, spec.spacing, spec.spacing, spec.lower, out_of_plane);
  const double mu = spec.shear_modulus();
  const double kappa = williams::kolosov(spec.material.nu, spec.material.plane_state);
  const double c = std::cos(spec.crack_angle);
  const double s = std::sin(spec.crack_angle);

  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const Vec2 d = field.position(i, j) - spec.tip;
      const double x1 = c * d.x() + s * d.y();
      const double x2 = -s * d.x() + c * d.y();
      const double r = std::hypot(x1, x2);
      double theta = std::atan2(x2, x1);
      if (theta == -std::numbers::pi) theta = std::numbers::pi;  // crack line -> upper face
      const Eigen::Vector2d local = williams::displacement(spec.K_I, spec.K_II, r, theta, mu, kappa);
      const std::size_t n = field.index(i, j);
      field.ux[n] = c * local.x() - s * local.y();
      field.uy[n] = s * local.x() + c * local.y();
      if (out_of_plane) field.uz[n] = williams::displacement_antiplane(spec.K_III, r, theta, mu);
    }
  }
  return field;
}

double mean_magnitude(const DisplacementField& field) {
  const std::vector<double> mag = magnitude(field);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < field.size(); ++n) {
    if (field.mask[n]) continue;
    sum += mag[n];
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

NoiseSample draw_noise(const DisplacementField& field, double fraction, std::uint64_t seed,
                       NoiseDistribution distribution) {
  if (!(fraction >= 0.0)) throw Error(ErrorKind::InvalidStudy, kModule, "noise fraction must be >= 0");
  NoiseSample noise;
  noise.ux.assign(field.size(), 0.0);
  noise.uy.assign(field.size(), 0.0);
  noise.uz.assign(field.size(), 0.0);
  noise.sigma = fraction * mean_magnitude(field);
  if (noise.sigma == 0.0) return noise;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise.sigma);
  const double half_width = std::sqrt(3.0) * noise.sigma;
  std::uniform_real_distribution<double> uniform(-half_width, half_width);
  auto draw = [&]() {
    return distribution == NoiseDistribution::gaussian ? normal(rng) : uniform(rng);
  };
  for (std::size_t n = 0; n < field.size(); ++n) {
    if (field.mask[n]) continue;
    noise.ux[n] = draw();
    noise.uy[n] = draw();
    if (field.has_out_of_plane) noise.uz[n] = draw();
  }
  return noise;
}

DisplacementField apply_noise(const DisplacementField& field, const NoiseSample& noise, double sign) {
  if (noise.sigma == 0.0) return field;
  DisplacementField out = field;
  for (std::size_t n = 0; n < field.size(); ++n) {
    out.ux[n] += sign * noise.ux[n];
    out.uy[n] += sign * noise.uy[n];
    out.uz[n] += sign * noise.uz[n];
  }
  return out;
}

DisplacementField add_noise(const DisplacementField& field, double fraction, std::uint64_t seed,
                            NoiseDistribution distribution) {
  return apply_noise(field, draw_noise(field, fraction, seed, distribution));
}

}  // namespace crackfield
