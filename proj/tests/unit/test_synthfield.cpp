#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "crackfield/synthfield.hpp"
#include "crackfield/williams.hpp"

using namespace crackfield;
using crackfield::test::validation_spec;

namespace {

// Textbook near-tip displacements, written out independently of the module.
struct Westergaard {
  double mu, kappa;

  Eigen::Vector3d at(double KI, double KII, double KIII, double r, double t) const {
    const double a = std::sqrt(r / (2 * std::numbers::pi)) / (2 * mu);
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    const double ux = KI * a * c * (kappa - 1 + 2 * s * s) + KII * a * s * (kappa + 1 + 2 * c * c);
    const double uy = KI * a * s * (kappa + 1 - 2 * c * c) - KII * a * c * (kappa - 1 - 2 * s * s);
    const double uz = 2 * KIII / mu * std::sqrt(r / (2 * std::numbers::pi)) * s;
    return {ux, uy, uz};
  }
};

}  // namespace

TEST(Williams, Kolosov) {
  EXPECT_DOUBLE_EQ(williams::kolosov(0.3, PlaneState::strain), 1.8);
  EXPECT_DOUBLE_EQ(williams::kolosov(0.3, PlaneState::stress), 2.7 / 1.3);
}

TEST(SynthField, MatchesClosedFormOnValidationGrid) {
  const auto spec = validation_spec();
  const auto f = generate_williams_field(spec);
  ASSERT_EQ(f.nx, 51);
  ASSERT_TRUE(f.has_out_of_plane);
  EXPECT_NEAR(f.spacing_x, 4e-8, 1e-22);
  const Westergaard w{210e9 / 2.6, 3 - 4 * 0.3};
  double worst = 0.0;
  for (int j = 0; j < f.ny; ++j)
    for (int i = 0; i < f.nx; ++i) {
      const Vec2 p = f.position(i, j);
      const double r = p.norm();
      if (r == 0.0) continue;
      const Eigen::Vector3d u = w.at(3e6, 1e6, 5e6, r, std::atan2(p.y(), p.x()));
      const std::size_t n = f.index(i, j);
      worst = std::max(worst, (Eigen::Vector3d(f.ux[n], f.uy[n], f.uz[n]) - u).norm() / u.norm());
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(SynthField, ZeroAtTip) {
  const auto f = generate_williams_field(validation_spec());
  const std::size_t tip = f.index(25, 25);
  EXPECT_EQ(f.position(tip).norm(), 0.0);
  EXPECT_EQ(f.ux[tip], 0.0);
  EXPECT_EQ(f.uy[tip], 0.0);
  EXPECT_EQ(f.uz[tip], 0.0);
}

TEST(SynthField, Linearity) {
  const auto a = generate_williams_field(validation_spec(3, 1, 5));
  const auto b = generate_williams_field(validation_spec(-7.5, -2.5, -12.5));
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double scale = 1e-14 * std::hypot(a.ux[n], a.uy[n], a.uz[n]) + 1e-30;
    EXPECT_NEAR(b.ux[n], -2.5 * a.ux[n], scale);
    EXPECT_NEAR(b.uy[n], -2.5 * a.uy[n], scale);
    EXPECT_NEAR(b.uz[n], -2.5 * a.uz[n], scale);
  }
}

TEST(SynthField, MirrorSymmetries) {
  const auto f1 = generate_williams_field(validation_spec(3, 0, 0));
  const auto f3 = generate_williams_field(validation_spec(0, 0, 5));
  for (int j = 0; j < 51; ++j)
    for (int i = 0; i < 51; ++i) {
      if (j == 25 && i < 25) continue;  // crack faces are their own mirror image
      const auto n = f1.index(i, j), m = f1.index(i, 50 - j);
      EXPECT_NEAR(f1.ux[n], f1.ux[m], 1e-12 * std::abs(f1.ux[n]) + 1e-30);
      EXPECT_NEAR(f1.uy[n], -f1.uy[m], 1e-12 * std::abs(f1.uy[n]) + 1e-30);
      EXPECT_NEAR(f3.uz[n], -f3.uz[m], 1e-12 * std::abs(f3.uz[n]) + 1e-30);
    }
}

TEST(SynthField, RotatedCrackMatchesRotatedField) {
  auto spec = validation_spec(3, 1, 0);
  spec.crack_angle = std::numbers::pi / 2;
  const auto f = generate_williams_field(spec);
  const Westergaard w{210e9 / 2.6, 1.8};
  for (int j = 0; j < 51; j += 7)
    for (int i = 0; i < 51; i += 5) {
      const Vec2 p = f.position(i, j);
      if (p.norm() == 0.0) continue;
      // tip frame: x1 = global y, x2 = -global x
      const Vec2 local(p.y(), -p.x());
      if (local.y() == 0.0 && local.x() < 0.0) continue;  // crack faces
      const auto u = w.at(3e6, 1e6, 0, local.norm(), std::atan2(local.y(), local.x()));
      const Vec2 global(-u.y(), u.x());
      EXPECT_NEAR(f.ux[f.index(i, j)], global.x(), 1e-12 * u.norm());
      EXPECT_NEAR(f.uy[f.index(i, j)], global.y(), 1e-12 * u.norm());
    }
}

TEST(Noise, ZeroFractionIsBitwiseIdentity) {
  const auto f = generate_williams_field(validation_spec());
  const auto g = add_noise(f, 0.0, 42);
  EXPECT_EQ(f.ux, g.ux);
  EXPECT_EQ(f.uy, g.uy);
  EXPECT_EQ(f.uz, g.uz);
}

TEST(Noise, Deterministic) {
  const auto f = generate_williams_field(validation_spec());
  const auto a = add_noise(f, 0.01, 99);
  const auto b = add_noise(f, 0.01, 99);
  EXPECT_EQ(a.ux, b.ux);
  EXPECT_EQ(a.uz, b.uz);
  const auto c = add_noise(f, 0.01, 100);
  EXPECT_NE(a.ux, c.ux);
}

TEST(Noise, StatisticsMatchConfiguredStd) {
  const auto f = generate_williams_field(validation_spec());
  double mean_mag = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n)
    mean_mag += std::sqrt(f.ux[n] * f.ux[n] + f.uy[n] * f.uy[n] + f.uz[n] * f.uz[n]);
  mean_mag /= static_cast<double>(f.size());
  EXPECT_NEAR(mean_magnitude(f), mean_mag, 1e-12 * mean_mag);

  const double sigma = 0.01 * mean_mag;
  const auto g = add_noise(f, 0.01, 5);
  const double N = static_cast<double>(f.size());
  auto check = [&](const std::vector<double>& clean, const std::vector<double>& noisy) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t n = 0; n < clean.size(); ++n) {
      const double d = noisy[n] - clean[n];
      s1 += d;
      s2 += d * d;
    }
    const double mean = s1 / N;
    const double sd = std::sqrt((s2 - N * mean * mean) / (N - 1));
    EXPECT_NEAR(sd, sigma, 0.05 * sigma);
    EXPECT_LE(std::abs(mean), 3.0 * sigma / std::sqrt(N));
  };
  check(f.ux, g.ux);
  check(f.uy, g.uy);
  check(f.uz, g.uz);
}

TEST(Noise, MaskedNodesUntouched) {
  auto f = generate_williams_field(validation_spec());
  f.mask[f.index(25, 25)] = 1;
  f.mask[f.index(3, 4)] = 1;
  const auto g = add_noise(f, 0.01, 3);
  EXPECT_EQ(g.ux[f.index(3, 4)], f.ux[f.index(3, 4)]);
  EXPECT_EQ(g.mask, f.mask);
}
