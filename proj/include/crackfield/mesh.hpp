#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "crackfield/field_io.hpp"

namespace crackfield {

/// Crack geometry picked on the field: a polyline from the mouth to the tip.
/// An empty polyline means "no crack".
struct CrackDefinition {
  std::vector<Vec2> polyline;
  std::optional<double> q_angle;  // radians; defaults to the last segment direction
  std::optional<MaskRegion> mask;

  static CrackDefinition straight(Vec2 mouth, Vec2 tip);

  bool empty() const { return polyline.empty(); }
  const Vec2& tip() const { return polyline.back(); }
  /// Direction of the last polyline segment (radians).
  double crack_direction() const;
  /// Virtual crack extension direction (radians).
  double q_direction() const { return q_angle.value_or(crack_direction()); }

  /// Throws InvalidCrack when the polyline has fewer than two points or
  /// repeats consecutive points.
  void validate() const;

  /// Same crack moved rigidly by `offset`.
  CrackDefinition translated(const Vec2& offset) const;
};

/// Rotation taking global (x, y) to the tip frame (x1 along `angle`).
Eigen::Matrix2d crack_frame(double angle);
Eigen::Matrix2d crack_frame(const CrackDefinition& crack);

/// Bilinear quad mesh on the DIC lattice with the crack inserted as a seam of
/// duplicated nodes. Nodes [0, nx*ny) are the lattice nodes in field order;
/// duplicates are appended after them.
struct SeamMesh {
  int nx = 0;
  int ny = 0;
  double spacing_x = 0.0;
  double spacing_y = 0.0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> elements;  // counterclockwise
  std::vector<std::pair<int, int>> seam_pairs;  // (original, duplicate)
  std::vector<int> seam_chain;                  // lattice nodes mouth -> tip
  int tip_node = -1;
  std::vector<int> lattice_node;                // lattice index of every node
  std::vector<std::uint8_t> constrained;
  std::vector<std::uint8_t> on_outer_boundary;
  std::vector<Vec2> bc_values;                  // prescribed displacement per node

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return elements.size(); }
  std::size_t lattice_count() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t constrained_count() const;

  /// Copy with new prescribed values taken from per-lattice-node arrays.
  SeamMesh with_boundary_values(const std::vector<double>& ux, const std::vector<double>& uy) const;
};

/// Lattice nodes the polyline snaps onto, mouth first, tip last.
std::vector<int> snap_polyline(const DisplacementField& field, const std::vector<Vec2>& polyline);

SeamMesh build_seam_mesh(const DisplacementField& field, const CrackDefinition& crack,
                         Diagnostics* diag = nullptr);

}  // namespace crackfield
