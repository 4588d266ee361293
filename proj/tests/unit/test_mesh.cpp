#include <gtest/gtest.h>

#include <map>
#include <numbers>
#include <set>

#include "common.hpp"
#include "crackfield/mesh.hpp"
#include "crackfield/synthfield.hpp"

using namespace crackfield;

namespace {

DisplacementField grid51() { return generate_williams_field(crackfield::test::validation_spec()); }

CrackDefinition left_edge_to_centre() { return CrackDefinition::straight(Vec2(-1e-6, 0.0), Vec2(0.0, 0.0)); }

}  // namespace

TEST(Mesh, CrackFreeCounts) {
  const auto mesh = build_seam_mesh(grid51(), CrackDefinition{});
  EXPECT_EQ(mesh.node_count(), 2601u);
  EXPECT_EQ(mesh.element_count(), 2500u);
  EXPECT_TRUE(mesh.seam_pairs.empty());
  EXPECT_EQ(mesh.constrained_count(), 2601u);
}

TEST(Mesh, ValidationCrackDuplicatesTwentyFiveNodes) {
  const auto field = grid51();
  const auto crack = left_edge_to_centre();
  // oracle: lattice nodes on the segment, mouth included, tip excluded
  int expected = 0;
  for (std::size_t n = 0; n < field.size(); ++n) {
    const Vec2 p = field.position(n);
    if (std::abs(p.y()) < 1e-15 && p.x() < -1e-15) ++expected;
  }
  EXPECT_EQ(expected, 25);
  const auto mesh = build_seam_mesh(field, crack);
  EXPECT_EQ(mesh.seam_pairs.size(), static_cast<std::size_t>(expected));
  EXPECT_EQ(mesh.seam_chain.size(), 26u);
  EXPECT_EQ(mesh.seam_chain.back(), static_cast<int>(field.index(25, 25)));
  EXPECT_EQ(mesh.tip_node, static_cast<int>(field.index(25, 25)));
  for (const auto& [orig, dup] : mesh.seam_pairs) EXPECT_NE(orig, mesh.tip_node);
}

TEST(Mesh, SeamIntegrity) {
  const auto field = grid51();
  const auto mesh = build_seam_mesh(field, left_edge_to_centre());
  EXPECT_EQ(mesh.node_count() - mesh.seam_pairs.size(), field.size());
  std::map<int, int> partner;
  for (const auto& [orig, dup] : mesh.seam_pairs) {
    EXPECT_EQ(mesh.nodes[orig], mesh.nodes[dup]);
    EXPECT_NE(orig, dup);
    EXPECT_EQ(mesh.lattice_node[dup], orig);
    partner[orig] = dup;
    partner[dup] = orig;
  }
  for (const auto& e : mesh.elements) {
    const std::set<int> nodes(e.begin(), e.end());
    for (int n : e)
      if (partner.contains(n)) EXPECT_FALSE(nodes.contains(partner[n]));
  }
}

TEST(Mesh, ConnectivityAwayFromSeamMatchesCrackFree) {
  const auto field = grid51();
  const auto plain = build_seam_mesh(field, CrackDefinition{});
  const auto cracked = build_seam_mesh(field, left_edge_to_centre());
  ASSERT_EQ(plain.element_count(), cracked.element_count());
  for (std::size_t e = 0; e < plain.element_count(); ++e) {
    std::array<int, 4> mapped{};
    for (int a = 0; a < 4; ++a) mapped[a] = cracked.lattice_node[cracked.elements[e][a]];
    EXPECT_EQ(mapped, plain.elements[e]);
  }
}

TEST(Mesh, ElementsAreCounterclockwise) {
  const auto mesh = build_seam_mesh(grid51(), left_edge_to_centre());
  for (const auto& e : mesh.elements) {
    double area2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      const Vec2& p = mesh.nodes[e[a]];
      const Vec2& q = mesh.nodes[e[(a + 1) % 4]];
      area2 += p.x() * q.y() - q.x() * p.y();
    }
    EXPECT_GT(area2, 0.0);
  }
}

TEST(Mesh, FacesOnOppositeSidesUseDifferentNodes) {
  const auto field = grid51();
  const auto mesh = build_seam_mesh(field, left_edge_to_centre());
  // element centred just above and just below a seam node behind the tip
  const int seam = static_cast<int>(field.index(10, 25));
  std::set<int> above, below;
  for (const auto& e : mesh.elements) {
    Vec2 c = Vec2::Zero();
    for (int n : e) c += mesh.nodes[n] / 4.0;
    for (int n : e)
      if (mesh.lattice_node[n] == seam) (c.y() > 0 ? above : below).insert(n);
  }
  ASSERT_EQ(above.size(), 1u);
  ASSERT_EQ(below.size(), 1u);
  EXPECT_NE(*above.begin(), *below.begin());
}

TEST(Mesh, TipOutsideGrid) {
  try {
    build_seam_mesh(grid51(), CrackDefinition::straight(Vec2(-1e-6, 0), Vec2(2e-5, 0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TipOutsideGrid);
  }
}

TEST(Mesh, InvalidCrackPolyline) {
  CrackDefinition c;
  c.polyline = {Vec2(0, 0)};
  EXPECT_THROW(c.validate(), Error);
  c.polyline = {Vec2(0, 0), Vec2(0, 0)};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Mesh, SeamNodesAreFreeOthersMeasured) {
  auto field = grid51();
  const auto mesh = build_seam_mesh(field, left_edge_to_centre());
  for (const auto& [orig, dup] : mesh.seam_pairs) {
    EXPECT_FALSE(mesh.constrained[orig]);
    EXPECT_FALSE(mesh.constrained[dup]);
  }
  EXPECT_TRUE(mesh.constrained[field.index(40, 30)]);
  EXPECT_EQ(mesh.bc_values[field.index(40, 30)].x(), field.ux[field.index(40, 30)]);
}

TEST(CrackFrame, QuarterTurns) {
  EXPECT_EQ(crack_frame(0.0), Eigen::Matrix2d::Identity());
  const auto R = crack_frame(std::numbers::pi / 2);
  EXPECT_LT((R * Vec2(1, 0) - Vec2(0, -1)).norm(), 1e-15);
  EXPECT_LT((R * Vec2(0, 1) - Vec2(1, 0)).norm(), 1e-15);
}

TEST(CrackFrame, PolylineDirectionAndTranslate) {
  CrackDefinition c;
  c.polyline = {Vec2(0, 0), Vec2(1, 0), Vec2(2, 1)};
  EXPECT_NEAR(c.crack_direction(), std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(c.q_direction(), std::numbers::pi / 4, 1e-15);
  c.q_angle = 0.1;
  EXPECT_EQ(c.q_direction(), 0.1);
  const auto t = c.translated(Vec2(1, 2));
  EXPECT_EQ(t.tip(), Vec2(3, 3));
}

TEST(Snap, PolylineNodesInOrder) {
  const auto field = grid51();
  CrackDefinition c;
  c.polyline = {Vec2(-1e-6, 4e-7), Vec2(-4e-7, 4e-7), Vec2(0, 0)};
  const auto chain = snap_polyline(field, c.polyline);
  ASSERT_GE(chain.size(), 3u);
  EXPECT_EQ(field.position(static_cast<std::size_t>(chain.front())), Vec2(-1e-6, 4e-7));
  EXPECT_EQ(chain.back(), static_cast<int>(field.index(25, 25)));
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const Vec2 d = field.position(static_cast<std::size_t>(chain[k])) - field.position(static_cast<std::size_t>(chain[k - 1]));
    EXPECT_LE(d.lpNorm<Eigen::Infinity>(), 4e-8 * 1.0000001);  // 8-connected steps
  }
  const auto mesh = build_seam_mesh(field, c);
  EXPECT_EQ(mesh.seam_pairs.size(), chain.size() - 1);
}
