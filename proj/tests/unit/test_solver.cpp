#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "common.hpp"
#include "../oracles.hpp"
#include "crackfield/solver.hpp"
#include "crackfield/synthfield.hpp"

using namespace crackfield;
using crackfield::test::dense_solve;
using crackfield::test::lattice;
using crackfield::test::quad_stiffness;

namespace {

const Material kSteel = Material::isotropic(210e9, 0.3, PlaneState::strain);

SeamMesh masked_mesh(DisplacementField field, const MaskRegion& mask, const CrackDefinition& crack = {}) {
  return build_seam_mesh(apply_mask(field, mask), crack);
}

// Node touched only by elements below the crack plane (lower crack face).
bool below_only(const SeamMesh& mesh, int node) {
  if (std::abs(mesh.nodes[node].y()) > 1e-15 || mesh.nodes[node].x() >= 0) return false;
  for (const auto& e : mesh.elements) {
    if (std::find(e.begin(), e.end(), node) == e.end()) continue;
    double cy = 0.0;
    for (int k : e) cy += mesh.nodes[k].y();
    if (cy > 0) return false;
  }
  return true;
}

double max_abs(const std::vector<Vec2>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST(Solver, FullyPrescribedReturnsMeasuredField) {
  const auto field = lattice(6, 5, 1e-3, [](const Vec2& p) { return Vec2(1e-6 * p.x() * p.y(), -2e-6 * p.x()); });
  const auto mesh = build_seam_mesh(field, {});
  const auto s = solve_elastic(mesh, kSteel);
  EXPECT_EQ(s.free_dofs, 0u);
  for (std::size_t n = 0; n < field.size(); ++n) {
    EXPECT_EQ(s.nodal_u[n].x(), field.ux[n]);
    EXPECT_EQ(s.nodal_u[n].y(), field.uy[n]);
  }
  EXPECT_EQ(s.gp_stress.size(), 4 * mesh.element_count());
}

TEST(Solver, PatchTestSingleFreeNode) {
  const double a = 1e-4, b = -3e-5;
  const auto field = lattice(3, 3, 1.0, [&](const Vec2& p) { return Vec2(a * p.x(), b * p.y()); });
  const auto mesh = masked_mesh(field, MaskRegion::rectangle(Vec2(0.9, 0.9), Vec2(1.1, 1.1)));
  const auto s = solve_elastic(mesh, kSteel);
  ASSERT_EQ(s.free_dofs, 2u);
  EXPECT_NEAR(s.nodal_u[4].x(), a, 1e-10 * std::abs(a));
  EXPECT_NEAR(s.nodal_u[4].y(), b, 1e-10 * std::abs(b));
  const Eigen::Vector3d sigma = plane_stiffness(kSteel) * Eigen::Vector3d(a, b, 0.0);
  for (const auto& sg : s.gp_stress) EXPECT_LE((sg - sigma).norm(), 1e-10 * sigma.norm());
}

TEST(Solver, PatchTestGeneralLinearField) {
  Eigen::Matrix2d A;
  A << 2e-4, -1e-4, 3e-4, 5e-5;
  const Vec2 c(1e-3, -2e-3);
  const auto field = lattice(8, 8, 0.5, [&](const Vec2& p) { return Vec2(A * p + c); });
  const auto mesh = masked_mesh(field, MaskRegion::rectangle(Vec2(0.9, 0.9), Vec2(2.6, 2.6)));
  const auto s = solve_elastic(mesh, kSteel);
  EXPECT_EQ(s.free_dofs, 2u * 16u);
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    const Vec2 exact = A * mesh.nodes[n] + c;
    EXPECT_LE((s.nodal_u[n] - exact).norm(), 1e-10 * exact.norm());
  }
  const Eigen::Vector3d eps(A(0, 0), A(1, 1), A(0, 1) + A(1, 0));
  const Eigen::Vector3d sigma = plane_stiffness(kSteel) * eps;
  for (const auto& sg : s.gp_stress) EXPECT_LE((sg - sigma).norm(), 1e-10 * sigma.norm());
}

TEST(Solver, SparseMatchesDenseOracle) {
  // 8 x 8 nodes, a crack into the middle and a masked patch around the tip
  const auto spec = SyntheticSpec::centred(2e6, 0.7e6, 0.0, 8, 8, 1e-6, kSteel);
  auto gen = spec;
  gen.tip = Vec2(0.5e-6, 0.5e-6);  // between nodes so nothing sits at r = 0
  const auto field = generate_williams_field(gen);
  const Vec2 lo = field.lower;
  const CrackDefinition crack = CrackDefinition::straight(Vec2(lo.x(), lo.y() + 3e-6), Vec2(lo.x() + 4e-6, lo.y() + 3e-6));
  for (auto state : {PlaneState::strain, PlaneState::stress}) {
    const Material m = Material::isotropic(70e9, 0.33, state);
    const auto mesh = masked_mesh(field, MaskRegion::rectangle(lo + Vec2(2.5e-6, 1.5e-6), lo + Vec2(5.5e-6, 4.5e-6)), crack);
    const auto s = solve_elastic(mesh, m);
    const auto u = dense_solve(mesh, plane_stiffness(m));
    const double scale = max_abs(u);
    for (std::size_t n = 0; n < mesh.node_count(); ++n) EXPECT_LE((s.nodal_u[n] - u[n]).norm(), 1e-10 * scale);
  }
}

TEST(Solver, LibraryElementStiffnessMatchesIndependentQuad) {
  const kernels::ElementNodes X{Vec2(0, 0), Vec2(2e-6, 0), Vec2(2.2e-6, 1.5e-6), Vec2(0.1e-6, 1e-6)};
  const Eigen::Matrix3d D = plane_stiffness(kSteel);
  const std::array<Eigen::Matrix3d, 4> Dg{D, D, D, D};
  const auto K = kernels::element_stiffness(X, Dg);
  const auto R = quad_stiffness({X[0], X[1], X[2], X[3]}, D);
  EXPECT_LE((K - R).norm(), 1e-12 * R.norm());
}

namespace {

// Largest relative error of the recovered displacement over the free nodes
// inside the square of half width 2h around `c`, skipping nodes within `skip` of the tip.
double masked_recovery_error(const Vec2& c, double skip) {
  const auto field = generate_williams_field(crackfield::test::validation_spec());
  const double h = 4e-8;
  const auto mesh = masked_mesh(field, MaskRegion::rectangle(c - Vec2(2 * h, 2 * h), c + Vec2(2 * h, 2 * h)),
                                CrackDefinition::straight(Vec2(-1e-6, 0), Vec2(0, 0)));
  const auto s = solve_elastic(mesh, kSteel);
  double worst = 0.0;
  int checked = 0;
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    const Vec2 p = mesh.nodes[n];
    if (mesh.constrained[n] || (p - c).lpNorm<Eigen::Infinity>() > 2.01 * h) continue;
    if (p.norm() <= skip) continue;
    const int l = mesh.lattice_node[n];
    Vec2 exact(field.ux[l], field.uy[l]);
    if (below_only(mesh, static_cast<int>(n))) exact = -exact;  // theta = -pi face
    worst = std::max(worst, (s.nodal_u[n] - exact).norm() / exact.norm());
    ++checked;
  }
  EXPECT_GE(checked, 20);
  return worst;
}

}  // namespace

TEST(Solver, WilliamsMaskRecoveryAwayFromTip) {
  EXPECT_LT(masked_recovery_error(Vec2(3.2e-7, 3.2e-7), 0.0), 0.01);
}

TEST(Solver, WilliamsMaskRecoveryAroundTipIsBounded) {
  // bilinear elements cannot represent the sqrt(r) singularity: a few percent, worst next to the tip
  const double h = 4e-8;
  EXPECT_LT(masked_recovery_error(Vec2::Zero(), 1.01 * h), 0.2);
}

TEST(Solver, LinearityInBoundaryValues) {
  const auto field = generate_williams_field(crackfield::test::validation_spec(3, 1, 0));
  const double h = 4e-8;
  const auto mesh = masked_mesh(field, MaskRegion::rectangle(Vec2(-3 * h, -3 * h), Vec2(3 * h, 3 * h)),
                                CrackDefinition::straight(Vec2(-1e-6, 0), Vec2(0, 0)));
  std::vector<double> ux(field.ux), uy(field.uy);
  for (auto& v : ux) v *= -3.0;
  for (auto& v : uy) v *= -3.0;
  const auto a = solve_elastic(mesh, kSteel);
  const auto b = solve_elastic(mesh.with_boundary_values(ux, uy), kSteel);
  const double us = max_abs(a.nodal_u);
  for (std::size_t n = 0; n < mesh.node_count(); ++n) EXPECT_LE((b.nodal_u[n] + 3.0 * a.nodal_u[n]).norm(), 1e-10 * us);
  double smax = 0.0, wmax = 0.0;
  for (std::size_t g = 0; g < a.gp_stress.size(); ++g) {
    smax = std::max(smax, a.gp_stress[g].norm());
    wmax = std::max(wmax, a.gp_energy_density[g]);
  }
  for (std::size_t g = 0; g < a.gp_stress.size(); ++g) {
    EXPECT_LE((b.gp_stress[g] + 3.0 * a.gp_stress[g]).norm(), 1e-9 * smax);
    EXPECT_NEAR(b.gp_energy_density[g], 9.0 * a.gp_energy_density[g], 1e-9 * wmax);
  }
}

TEST(Solver, RigidTranslationLeavesStressUnchanged) {
  const auto field = generate_williams_field(crackfield::test::validation_spec(3, 1, 0));
  const double h = 4e-8;
  const auto mesh = masked_mesh(field, MaskRegion::rectangle(Vec2(-2 * h, -2 * h), Vec2(2 * h, 2 * h)),
                                CrackDefinition::straight(Vec2(-1e-6, 0), Vec2(0, 0)));
  std::vector<double> ux(field.ux), uy(field.uy);
  for (auto& v : ux) v += 3e-8;
  for (auto& v : uy) v -= 1e-8;
  const auto a = solve_elastic(mesh, kSteel);
  const auto b = solve_elastic(mesh.with_boundary_values(ux, uy), kSteel);
  double smax = 0.0, wmax = 0.0;
  for (std::size_t g = 0; g < a.gp_stress.size(); ++g) {
    smax = std::max(smax, a.gp_stress[g].norm());
    wmax = std::max(wmax, a.gp_energy_density[g]);
  }
  for (std::size_t g = 0; g < a.gp_stress.size(); ++g) {
    EXPECT_LE((b.gp_stress[g] - a.gp_stress[g]).norm(), 1e-9 * smax);
    EXPECT_NEAR(b.gp_energy_density[g], a.gp_energy_density[g], 1e-9 * wmax);
  }
}

TEST(Solver, SerialAndParallelAreBitwiseEqual) {
  const auto field = generate_williams_field(crackfield::test::validation_spec());
  const double h = 4e-8;
  const auto mesh = masked_mesh(field, MaskRegion::rectangle(Vec2(-2 * h, -2 * h), Vec2(2 * h, 2 * h)),
                                CrackDefinition::straight(Vec2(-1e-6, 0), Vec2(0, 0)));
  SolverOptions serial, parallel;
  serial.policy = ExecPolicy::serial;
  parallel.policy = ExecPolicy::parallel;
  const auto a = solve_elastic(mesh, kSteel, serial);
  const auto b = solve_elastic(mesh, kSteel, parallel);
  EXPECT_EQ(a.nodal_u, b.nodal_u);
  EXPECT_EQ(a.gp_stress, b.gp_stress);
  EXPECT_EQ(a.gp_energy_density, b.gp_energy_density);
}

TEST(Solver, UnanchoredNodesAreSingular) {
  const auto field = lattice(4, 4, 1.0, [](const Vec2&) { return Vec2(0, 0); });
  auto mesh = build_seam_mesh(field, {});
  std::fill(mesh.constrained.begin(), mesh.constrained.end(), std::uint8_t{0});
  try {
    solve_elastic(mesh, kSteel);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularSystem);
  }
}

TEST(Solver, NonFiniteBoundaryValues) {
  auto field = lattice(4, 4, 1.0, [](const Vec2&) { return Vec2(0, 0); });
  auto mesh = build_seam_mesh(field, {});
  mesh.bc_values[5].x() = std::nan("");
  try {
    solve_elastic(mesh, kSteel);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteInput);
  }
}

namespace {

struct PlasticCase {
  SeamMesh mesh;
  Material material;
};

PlasticCase aluminium_case(double K_scale) {
  Material al = Material::isotropic(70e9, 0.33, PlaneState::strain);
  al.ro = RambergOsgood{193e6, 0.60, 8.87};
  const auto spec = SyntheticSpec::centred(K_scale * 1e6, 0.0, 0.0, 31, 31, 4e-8, al);
  const auto field = generate_williams_field(spec);
  const double h = 4e-8;
  return {masked_mesh(field, MaskRegion::rectangle(Vec2(-2 * h, -2 * h), Vec2(2 * h, 2 * h)),
                      CrackDefinition::straight(field.lower + Vec2(0, 15 * h), Vec2(0, 0))),
          al};
}

}  // namespace

TEST(Plasticity, AlphaZeroEqualsElasticInOneIteration) {
  auto c = aluminium_case(3.0);
  c.material.ro->alpha = 0.0;
  const auto el = solve_elastic(c.mesh, c.material);
  const auto pl = solve_deformation_plasticity(c.mesh, c.material);
  EXPECT_EQ(pl.model_used, ConstitutiveModel::deformation_plasticity);
  EXPECT_LE(pl.iterations, 1);
  const double scale = max_abs(el.nodal_u);
  for (std::size_t n = 0; n < el.nodal_u.size(); ++n) EXPECT_LE((pl.nodal_u[n] - el.nodal_u[n]).norm(), 1e-12 * scale);
}

TEST(Plasticity, SmallStressLimitMatchesElastic) {
  auto probe = aluminium_case(1.0);
  const auto el1 = solve_elastic(probe.mesh, probe.material);
  const double peak = *std::max_element(el1.gp_sigma_eq.begin(), el1.gp_sigma_eq.end());
  const double K = 0.09 * 193e6 / peak;  // max sigma_eq at 9% of sigma0
  auto c = aluminium_case(K);
  const auto el = solve_elastic(c.mesh, c.material);
  EXPECT_LT(*std::max_element(el.gp_sigma_eq.begin(), el.gp_sigma_eq.end()), 0.1 * 193e6);
  const auto pl = solve_deformation_plasticity(c.mesh, c.material);
  const double scale = max_abs(el.nodal_u);
  for (std::size_t n = 0; n < el.nodal_u.size(); ++n) EXPECT_LE((pl.nodal_u[n] - el.nodal_u[n]).norm(), 1e-4 * scale);
}

TEST(Plasticity, ConvergesAndResidualDecreases) {
  auto c = aluminium_case(3.0);
  SolverOptions o;
  o.tol = 1e-8;
  const auto pl = solve_deformation_plasticity(c.mesh, c.material, o);
  EXPECT_GE(pl.iterations, 2);
  EXPECT_LE(pl.residual, o.tol);
  const auto& h = pl.residual_history;
  ASSERT_GE(h.size(), 3u);
  for (std::size_t k = h.size() - 2; k < h.size(); ++k) EXPECT_LT(h[k], h[k - 1]);
  for (double w : pl.gp_energy_density) EXPECT_GE(w, 0.0);
  const auto el = solve_elastic(c.mesh, c.material);
  for (double w : el.gp_energy_density) EXPECT_GE(w, 0.0);
}

TEST(Plasticity, IterationLimitRaisesNoConvergence) {
  auto c = aluminium_case(3.0);
  SolverOptions o;
  o.tol = 1e-14;
  o.max_iter = 2;
  try {
    solve_deformation_plasticity(c.mesh, c.material, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
  }
}

TEST(Plasticity, HenckyPointRecoversUniaxialLaw) {
  // plane stress uniaxial: sigma_xx = s, strain from the Ramberg-Osgood law
  Material m = Material::isotropic(70e9, 0.33, PlaneState::stress);
  m.ro = RambergOsgood{193e6, 0.6, 8.87};
  const double s = 250e6;
  const double ratio = s / 193e6;
  const double eps_total = s / 70e9 * (1.0 + 0.6 * std::pow(ratio, 7.87));
  // lateral strain: elastic part -nu s/E, plastic part incompressible -eps_p/2
  const double eps_p = eps_total - s / 70e9;
  const double eps_y = -0.33 * s / 70e9 - 0.5 * eps_p;
  const auto hp = hencky_response(Eigen::Vector3d(eps_total, eps_y, 0.0), m);
  EXPECT_NEAR(hp.stress.x(), s, 1e-4 * s);
  EXPECT_NEAR(hp.stress.y(), 0.0, 1e-4 * s);
  EXPECT_NEAR(hp.sigma_eq, s, 1e-4 * s);
}
