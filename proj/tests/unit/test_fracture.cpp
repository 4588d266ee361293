#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "crackfield/analysis.hpp"
#include "crackfield/studies.hpp"

using namespace crackfield;
using crackfield::test::kind_of;
using crackfield::test::validation_spec;

namespace {

const Material kSteel = Material::isotropic(210e9, 0.3, PlaneState::strain);
constexpr double kEstar = 210e9 / (1 - 0.09);
constexpr double kG = 210e9 / 2.6;

AnalysisResult analyze(const DisplacementField& field, const SyntheticSpec& spec, AnalysisOptions o = {}) {
  return run_analysis(field, synthetic_crack(spec), kSteel, o);
}

AnalysisResult analyze(const SyntheticSpec& spec, AnalysisOptions o = {}) {
  return analyze(generate_williams_field(spec), spec, o);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Fracture, ValidationCrackSetup) {
  const auto spec = validation_spec();
  const auto crack = synthetic_crack(spec);
  ASSERT_EQ(crack.polyline.size(), 2u);
  EXPECT_EQ(crack.polyline.front(), Vec2(-1e-6, 0.0));
  EXPECT_EQ(crack.tip(), Vec2(0.0, 0.0));
  ASSERT_TRUE(crack.mask.has_value());
  const auto masked = apply_mask(generate_williams_field(spec), *crack.mask);
  EXPECT_EQ(std::count(masked.mask.begin(), masked.mask.end(), std::uint8_t{1}), 25);
}

TEST(Fracture, RigidTranslationCarriesNoEnergy) {
  const auto spec = validation_spec();
  auto field = DisplacementField::zeros(51, 51, 4e-8, 4e-8, Vec2(-1e-6, -1e-6));
  std::fill(field.ux.begin(), field.ux.end(), 3e-9);
  std::fill(field.uy.begin(), field.uy.end(), -1e-9);
  const auto r = analyze(field, spec);
  for (std::size_t k = 0; k < r.series.size(); ++k) {
    EXPECT_LT(std::abs(r.series.J[k]), 1e-9);
    EXPECT_LT(std::abs(r.series.K_I[k]), 1e-3);
    EXPECT_LT(std::abs(r.series.K_II[k]), 1e-3);
  }
}

TEST(Fracture, PureModeI) {
  const auto r = analyze(validation_spec(3, 0, 0));
  ASSERT_TRUE(r.series.has_k());
  const double J_exact = 9e12 / kEstar;
  EXPECT_NEAR(J_exact, 39.0, 0.01);
  EXPECT_LT(rel(r.plateau.J.mean, J_exact), 0.05);
  EXPECT_LT(rel(r.plateau.K_I->mean, 3e6), 0.02);
  for (std::size_t k = 0; k < r.series.size(); ++k) EXPECT_LT(std::abs(r.series.K_II[k]), 0.02 * r.series.K_I[k]);
}

TEST(Fracture, ValidationMixedMode) {
  const auto r = analyze(validation_spec());
  ASSERT_TRUE(r.series.has_mode3());
  EXPECT_FALSE(r.plateau.no_plateau);
  EXPECT_LT(rel(r.plateau.K_I->mean, 3e6), 0.02);
  EXPECT_LT(rel(r.plateau.K_II->mean, 1e6), 0.02);
  EXPECT_LT(rel(r.plateau.K_III->mean, 5e6), 0.02);
  const double J_inplane = 10e12 / kEstar;
  const double J_total = J_inplane + 25e12 / (2 * kG);
  EXPECT_LT(rel(r.plateau.J.mean, J_inplane), 0.05);
  EXPECT_LT(rel(r.plateau.J_total->mean, J_total), 0.05);
  // path independence over the plateau
  EXPECT_LT(r.plateau.J.std / r.plateau.J.mean, 0.02);
  EXPECT_LT(r.plateau.J_total->std / r.plateau.J_total->mean, 0.02);
}

TEST(Fracture, JAndKAreConsistent) {
  const auto r = analyze(validation_spec());
  const auto eff = isotropic_constants(210e9, 0.3, PlaneState::strain);
  for (int k = r.plateau.start; k <= r.plateau.end; ++k) {
    const double from_k = j_from_k(r.series.K_I[k], r.series.K_II[k], r.series.K_III[k], eff);
    EXPECT_LT(rel(r.series.J_total[k], from_k), 0.03) << "contour " << k + 1;
    EXPECT_LT(rel(r.series.J[k], j_from_k(r.series.K_I[k], r.series.K_II[k], 0, eff)), 0.03);
  }
}

TEST(Fracture, NegatedFieldFlipsK) {
  const auto spec = validation_spec();
  const auto field = generate_williams_field(spec);
  const auto a = analyze(field, spec);
  const auto b = analyze(crackfield::test::negated(field), spec);
  for (std::size_t k = 0; k < a.series.size(); ++k) {
    EXPECT_NEAR(b.series.K_I[k], -a.series.K_I[k], 1e-9 * std::abs(a.series.K_I[k]));
    EXPECT_NEAR(b.series.K_II[k], -a.series.K_II[k], 1e-9 * std::abs(a.series.K_II[k]));
    EXPECT_NEAR(b.series.K_III[k], -a.series.K_III[k], 1e-9 * std::abs(a.series.K_III[k]));
    EXPECT_NEAR(b.series.J[k], a.series.J[k], 1e-9 * a.series.J[k]);
  }
}

TEST(Fracture, ScalingIsLinearInKQuadraticInJ) {
  const auto spec = validation_spec();
  const auto field = generate_williams_field(spec);
  auto scaled = field;
  for (auto* c : {&scaled.ux, &scaled.uy, &scaled.uz})
    for (double& v : *c) v *= 2.5;
  const auto a = analyze(field, spec);
  const auto b = analyze(scaled, spec);
  for (std::size_t k = 0; k < a.series.size(); ++k) {
    EXPECT_NEAR(b.series.K_I[k], 2.5 * a.series.K_I[k], 1e-9 * std::abs(a.series.K_I[k]));
    EXPECT_NEAR(b.series.K_III[k], 2.5 * a.series.K_III[k], 1e-9 * std::abs(a.series.K_III[k]));
    EXPECT_NEAR(b.series.J_total[k], 6.25 * a.series.J_total[k], 1e-9 * a.series.J_total[k]);
  }
}

TEST(Fracture, MirrorAboutCrackPlane) {
  const auto spec = validation_spec();
  const auto field = generate_williams_field(spec);
  auto mirrored = field;
  for (int j = 0; j < field.ny; ++j)
    for (int i = 0; i < field.nx; ++i) {
      const auto n = field.index(i, j), m = field.index(i, field.ny - 1 - j);
      mirrored.ux[n] = field.ux[m];
      mirrored.uy[n] = -field.uy[m];
      mirrored.uz[n] = field.uz[m];  // out-of-plane component is unchanged by the reflection
    }
  const auto a = analyze(field, spec);
  const auto b = analyze(mirrored, spec);
  const double tol = 1e-8 * a.plateau.K_I->mean;
  for (std::size_t k = 0; k < a.series.size(); ++k) {
    EXPECT_NEAR(b.series.K_I[k], a.series.K_I[k], tol);
    EXPECT_NEAR(b.series.K_II[k], -a.series.K_II[k], tol);
    EXPECT_NEAR(b.series.K_III[k], -a.series.K_III[k], tol);
    EXPECT_NEAR(b.series.J[k], a.series.J[k], 1e-8 * a.series.J[k]);
  }
}

TEST(Fracture, QuarterTurnOfFieldAndCrackLeavesResultsUnchanged) {
  const auto spec = validation_spec();
  const auto field = generate_williams_field(spec);
  const auto crack = synthetic_crack(spec);
  const auto a = run_analysis(field, crack, kSteel);
  const auto R = crack_frame(-std::numbers::pi / 2);  // global rotation by +90 deg
  CrackDefinition turned = crack;
  for (auto& p : turned.polyline) p = R * p;
  for (auto& v : turned.mask->vertices) v = R * v;
  const auto b = run_analysis(transform_field(field, 1), turned, kSteel);
  ASSERT_EQ(a.series.size(), b.series.size());
  for (std::size_t k = 0; k < a.series.size(); ++k) {
    EXPECT_NEAR(b.series.K_I[k], a.series.K_I[k], 1e-8 * a.plateau.K_I->mean);
    EXPECT_NEAR(b.series.K_II[k], a.series.K_II[k], 1e-8 * a.plateau.K_I->mean);
    EXPECT_NEAR(b.series.K_III[k], a.series.K_III[k], 1e-8 * a.plateau.K_I->mean);
    EXPECT_NEAR(b.series.J_total[k], a.series.J_total[k], 1e-8 * a.series.J_total[k]);
  }
}

TEST(Fracture, NoOutOfPlaneMotionGivesZeroKIII) {
  const auto spec = validation_spec(3, 1, 0);
  auto field = generate_williams_field(spec);
  field.has_out_of_plane = true;
  field.uz.assign(field.size(), 0.0);
  const auto r = analyze(field, spec);
  ASSERT_TRUE(r.series.has_mode3());
  for (std::size_t k = 0; k < r.series.size(); ++k) {
    EXPECT_EQ(r.series.K_III[k], 0.0);
    EXPECT_EQ(r.series.J_total[k], r.series.J[k]);
  }
}

TEST(Fracture, PseudoProblemConversion) {
  const auto r = analyze(validation_spec());
  // plane-stress pseudo problem: K_III = (2G/E) K_II_pseudo = K_II_pseudo / (1 + nu)
  for (std::size_t k = 0; k < r.series.size(); ++k) {
    EXPECT_NEAR(r.series.K_III[k], r.series.K_II_pseudo[k] / 1.3, 1e-12 * std::abs(r.series.K_III[k]));
    EXPECT_NEAR(r.series.J_III[k], r.series.K_III[k] * r.series.K_III[k] / (2 * kG), 1e-12 * r.series.J_III[k]);
  }
  EXPECT_LT(rel(r.plateau.K_II_pseudo->mean, 6.5e6), 0.02);
}

TEST(Fracture, FourColumnFieldHasNoModeIII) {
  auto field = generate_williams_field(validation_spec());
  field.has_out_of_plane = false;
  field.uz.clear();
  const auto r = analyze(field, validation_spec());
  EXPECT_FALSE(r.series.has_mode3());
  EXPECT_TRUE(r.series.J_total.empty());
  EXPECT_FALSE(r.plateau.K_III.has_value());
}

TEST(Fracture, CombineTotalJ) {
  EXPECT_EQ(combine_total_j({1.0, 2.0}, {0.5, 0.25}), (std::vector<double>{1.5, 2.25}));
  EXPECT_EQ(kind_of([] { combine_total_j({1.0, 2.0}, {0.5}); }), ErrorKind::LengthMismatch);
}

TEST(Fracture, InteractionIntegralRejectsPlasticSolution) {
  Material al = Material::isotropic(70e9, 0.33, PlaneState::strain);
  al.ro = RambergOsgood{193e6, 0.6, 8.87};
  auto spec = SyntheticSpec::centred(3e6, 0, 0, 31, 31, 4e-8, al);
  const auto field = generate_williams_field(spec);
  const auto crack = synthetic_crack(spec);
  const auto mesh = build_seam_mesh(apply_mask(field, *crack.mask), crack);
  const auto sol = solve_deformation_plasticity(mesh, al);
  const auto domains = build_domains(mesh, 5);
  EXPECT_EQ(kind_of([&] {
              compute_interaction_k(sol, mesh, IntegralFrame::from_crack(crack), domains,
                                    isotropic_constants(70e9, 0.33, PlaneState::strain), PlaneState::strain);
            }),
            ErrorKind::ElastoplasticSolution);

  AnalysisOptions o;
  o.model = ConstitutiveModel::deformation_plasticity;
  const auto r = run_analysis(field, crack, al, o);
  EXPECT_EQ(r.model_used, ConstitutiveModel::deformation_plasticity);
  EXPECT_FALSE(r.series.has_k());
  EXPECT_GT(r.plateau.J.mean, 0.0);
}

TEST(Fracture, SerialAndParallelAreBitwiseEqual) {
  const auto spec = validation_spec();
  AnalysisOptions serial, parallel;
  serial.solver.policy = ExecPolicy::serial;
  parallel.solver.policy = ExecPolicy::parallel;
  const auto a = analyze(spec, serial);
  const auto b = analyze(spec, parallel);
  EXPECT_EQ(a.series.J, b.series.J);
  EXPECT_EQ(a.series.K_I, b.series.K_I);
  EXPECT_EQ(a.series.K_III, b.series.K_III);
}

TEST(Domains, RingsGrowAndStopBeforeBoundary) {
  const auto spec = validation_spec();
  const auto crack = synthetic_crack(spec);
  const auto mesh = build_seam_mesh(generate_williams_field(spec), crack);
  EXPECT_EQ(available_contours(mesh), 25);  // ring 25 reaches the edge, its q = 1 nodes do not
  Diagnostics diag;
  const auto d = build_domains(mesh, 40, &diag);
  EXPECT_EQ(static_cast<int>(d.size()), 25);
  EXPECT_FALSE(diag.warnings.empty());
  for (std::size_t k = 0; k < d.size(); ++k) {
    EXPECT_EQ(d[k].ring, static_cast<int>(k) + 1);
    EXPECT_NEAR(d[k].outer_radius, (k + 1) * 4e-8, 1e-20);
    EXPECT_EQ(d[k].ring_elements.size(), 8 * (k + 1) - 4);  // (2k)^2 - (2k-2)^2
  }
  EXPECT_EQ(kind_of([&] { build_domains(mesh, 0); }), ErrorKind::InvalidContourCount);
}

namespace {

ContourSeries series_of(const std::vector<double>& J) {
  ContourSeries s;
  s.J = J;
  for (std::size_t k = 0; k < J.size(); ++k) {
    s.ring.push_back(static_cast<int>(k) + 1);
    s.outer_radius.push_back(static_cast<double>(k + 1));
  }
  return s;
}

}  // namespace

TEST(Plateau, ConstantSeries) {
  const auto p = detect_plateau(series_of(std::vector<double>(20, 7.0)));
  EXPECT_FALSE(p.no_plateau);
  EXPECT_EQ(p.start, 2);
  EXPECT_EQ(p.end, 19);
  EXPECT_EQ(p.J.mean, 7.0);
  EXPECT_EQ(p.J.std, 0.0);
}

TEST(Plateau, LinearRampHasNoPlateau) {
  std::vector<double> J;
  for (int k = 0; k < 20; ++k) J.push_back(1.0 + k);
  Diagnostics diag;
  const auto p = detect_plateau(series_of(J), {}, &diag);
  EXPECT_TRUE(p.no_plateau);
  ASSERT_FALSE(diag.warnings.empty());
  EXPECT_NE(diag.warnings.front().find("NoPlateau"), std::string::npos);
}

TEST(Plateau, DivergentHeadIsExcluded) {
  std::vector<double> J{80, 55, 46, 44};
  for (int k = 0; k < 16; ++k) J.push_back(43.3 + 0.05 * std::sin(k));
  PlateauOptions o;
  o.skip = 0;
  const auto p = detect_plateau(series_of(J), o);
  EXPECT_FALSE(p.no_plateau);
  EXPECT_GE(p.start, 3);
  EXPECT_EQ(p.end, 19);
  EXPECT_NEAR(p.J.mean, 43.3, 0.1);
}

TEST(Plateau, ExplicitWindow) {
  std::vector<double> J;
  for (int k = 0; k < 10; ++k) J.push_back(k);
  PlateauOptions o;
  o.window = std::make_pair(2, 4);
  const auto p = detect_plateau(series_of(J), o);
  EXPECT_TRUE(p.explicit_window);
  EXPECT_EQ(p.start, 2);
  EXPECT_EQ(p.end, 4);
  EXPECT_DOUBLE_EQ(p.J.mean, 3.0);
  EXPECT_DOUBLE_EQ(p.J.std, 1.0);  // sample std of {2, 3, 4}
}

TEST(Plateau, ShortSeries) {
  EXPECT_EQ(kind_of([] { detect_plateau(series_of({})); }), ErrorKind::SeriesTooShort);
  Diagnostics diag;
  const auto p = detect_plateau(series_of({4.0, 4.0, 4.0}), {}, &diag);
  EXPECT_TRUE(p.no_plateau);
  EXPECT_EQ(p.J.mean, 4.0);
  EXPECT_NE(diag.warnings.front().find("SeriesTooShort"), std::string::npos);
}
