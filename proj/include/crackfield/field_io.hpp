#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "crackfield/error.hpp"

namespace crackfield {

using Vec2 = Eigen::Vector2d;

enum class LengthUnit { m, mm, um };

/// Metres per one unit.
double meters_per(LengthUnit unit);
LengthUnit parse_length_unit(std::string_view text);
std::string_view to_string(LengthUnit unit);

/// Displacements measured on a regular lattice.
///
/// Node (i, j) sits at lower + (i * spacing_x, j * spacing_y) and has the
/// flat index i + j * nx. Everything is stored in metres. Components that
/// were not measured (uz for 2D data) are kept as zeros.
struct DisplacementField {
  int nx = 0;
  int ny = 0;
  double spacing_x = 0.0;
  double spacing_y = 0.0;
  Vec2 lower = Vec2::Zero();  // node (0, 0)
  Vec2 upper = Vec2::Zero();  // node (nx - 1, ny - 1)
  std::vector<double> ux;
  std::vector<double> uy;
  std::vector<double> uz;
  std::vector<std::uint8_t> mask;  // 1 = excluded from boundary conditions
  bool has_out_of_plane = false;
  LengthUnit source_units = LengthUnit::m;
  double out_of_flatness = 0.0;  // max |Z - mean Z| of stereo input, metres

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * static_cast<std::size_t>(nx);
  }
  Vec2 position(int i, int j) const {
    return {lower.x() + i * spacing_x, lower.y() + j * spacing_y};
  }
  Vec2 position(std::size_t node) const {
    return position(static_cast<int>(node % nx), static_cast<int>(node / nx));
  }
  std::size_t masked_count() const;

  /// Zero-initialised field over the given lattice.
  static DisplacementField zeros(int nx, int ny, double spacing_x, double spacing_y,
                                 Vec2 lower, bool out_of_plane = false);
};

/// Rows exactly as read from disk, converted to metres.
struct PointCloud {
  std::vector<double> x, y, z;
  std::vector<double> ux, uy, uz;
  bool has_out_of_plane = false;
  LengthUnit source_units = LengthUnit::m;

  std::size_t size() const { return x.size(); }
};

struct GridReport {
  int nx = 0;
  int ny = 0;
  double spacing_x = 0.0;
  double spacing_y = 0.0;
  Vec2 lower = Vec2::Zero();
  double max_deviation = 0.0;  // metres
  std::size_t missing_nodes = 0;
};

/// Reads a 4- or 6-column delimited file. `delimiter` overrides detection
/// (comma, then tab, then whitespace).
PointCloud read_points(std::istream& in, LengthUnit units,
                       std::optional<char> delimiter = std::nullopt);
PointCloud read_points(const std::filesystem::path& path, LengthUnit units,
                       std::optional<char> delimiter = std::nullopt);

/// Infers the lattice and checks every point lies within
/// `tolerance * spacing` of it.
GridReport validate_grid(const PointCloud& points, double tolerance = 0.1);

/// Places validated points on the lattice. Lattice nodes with no data or
/// NaN components are zero-filled and masked.
DisplacementField to_field(const PointCloud& points, const GridReport& grid,
                           Diagnostics* diag = nullptr);

DisplacementField load_field(const std::filesystem::path& path, LengthUnit units,
                             std::optional<char> delimiter = std::nullopt,
                             Diagnostics* diag = nullptr);
DisplacementField load_field(std::istream& in, LengthUnit units,
                             std::optional<char> delimiter = std::nullopt,
                             Diagnostics* diag = nullptr);

/// Canonical CSV (SI units, header row, shortest round-trip decimals).
void write_field_csv(const DisplacementField& field, std::ostream& out);
void write_field_csv(const DisplacementField& field, const std::filesystem::path& path);

/// Inclusive node-index rectangle.
struct IndexRect {
  int i0 = 0;
  int j0 = 0;
  int i1 = 0;
  int j1 = 0;
};

/// Rotates by `quarter_turns` x 90 degrees counterclockwise about the
/// coordinate origin, then crops (indices refer to the rotated grid).
DisplacementField transform_field(const DisplacementField& field, int quarter_turns,
                                  std::optional<IndexRect> crop = std::nullopt);

struct MaskRegion {
  enum class Kind { rectangle, polygon };
  Kind kind = Kind::rectangle;
  std::vector<Vec2> vertices;  // rectangle: two opposite corners

  static MaskRegion rectangle(Vec2 a, Vec2 b);
  static MaskRegion polygon(std::vector<Vec2> vertices);

  /// Throws InvalidMask for zero-area rectangles and self-intersecting polygons.
  void validate() const;
  /// Inclusive of the boundary.
  bool contains(const Vec2& p) const;
};

/// Flags every node inside `region`. Masking nothing is a warning, masking
/// everything is an error.
DisplacementField apply_mask(const DisplacementField& field, const MaskRegion& region,
                             Diagnostics* diag = nullptr);

/// sqrt(ux^2 + uy^2 [+ uz^2]) per node.
std::vector<double> magnitude(const DisplacementField& field);

}  // namespace crackfield
