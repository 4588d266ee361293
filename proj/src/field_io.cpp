#include "crackfield/field_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>

#include "format.hpp"

namespace crackfield {
namespace {

constexpr const char* kModule = "field_io";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, kModule, message);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  if (delimiter == ' ') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      out.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delimiter, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                        : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  std::string lowered(token);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(lowered.data(), lowered.data() + lowered.size(), value);
  if (ec != std::errc() || ptr != lowered.data() + lowered.size()) return std::nullopt;
  return value;
}

char detect_delimiter(std::string_view line) {
  if (line.find(',') != std::string_view::npos) return ',';
  if (line.find('\t') != std::string_view::npos) return '\t';
  return ' ';
}

double median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

struct AxisFit {
  double lower = 0.0;
  double spacing = 0.0;
  int count = 0;
  std::vector<int> index;
};

AxisFit fit_axis(const std::vector<double>& coords, const char* axis) {
  std::vector<double> sorted(coords);
  std::sort(sorted.begin(), sorted.end());
  const double range = sorted.back() - sorted.front();
  if (!(range > 0.0)) {
    fail(ErrorKind::DegenerateGrid,
         std::string("all points share one ") + axis + " coordinate (single row or column)");
  }
  const double merge = 1e-9 * range;
  std::vector<double> gaps;
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double gap = sorted[k] - sorted[k - 1];
    if (gap > merge) gaps.push_back(gap);
  }
  AxisFit fit;
  double spacing = median(gaps);
  const double first = sorted.front();

  fit.index.resize(coords.size());
  int min_index = 0;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    fit.index[k] = static_cast<int>(std::lround((coords[k] - first) / spacing));
    min_index = std::min(min_index, fit.index[k]);
  }
  // Anchor the lattice on the points that landed on index 0 and re-estimate
  // the pitch from every other point.
  std::vector<double> anchors;
  std::vector<double> pitches;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    fit.index[k] -= min_index;
    if (fit.index[k] == 0) anchors.push_back(coords[k]);
  }
  fit.lower = median(anchors);
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (fit.index[k] > 0) pitches.push_back((coords[k] - fit.lower) / fit.index[k]);
  }
  if (!pitches.empty()) spacing = median(pitches);
  fit.spacing = spacing;
  int max_index = 0;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    fit.index[k] = static_cast<int>(std::lround((coords[k] - fit.lower) / spacing));
    max_index = std::max(max_index, fit.index[k]);
  }
  fit.count = max_index + 1;
  return fit;
}

}  // namespace

double meters_per(LengthUnit unit) {
  switch (unit) {
    case LengthUnit::m: return 1.0;
    case LengthUnit::mm: return 1e-3;
    case LengthUnit::um: return 1e-6;
  }
  return 1.0;
}

LengthUnit parse_length_unit(std::string_view text) {
  if (text == "m") return LengthUnit::m;
  if (text == "mm") return LengthUnit::mm;
  if (text == "um" || text == "µm" || text == "micron") return LengthUnit::um;
  throw Error(ErrorKind::ConfigError, kModule, "unknown length unit '" + std::string(text) + "'");
}

std::string_view to_string(LengthUnit unit) {
  switch (unit) {
    case LengthUnit::m: return "m";
    case LengthUnit::mm: return "mm";
    case LengthUnit::um: return "um";
  }
  return "m";
}

std::size_t DisplacementField::masked_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

DisplacementField DisplacementField::zeros(int nx, int ny, double spacing_x, double spacing_y,
                                           Vec2 lower, bool out_of_plane) {
  DisplacementField f;
  f.nx = nx;
  f.ny = ny;
  f.spacing_x = spacing_x;
  f.spacing_y = spacing_y;
  f.lower = lower;
  f.upper = lower + Vec2((nx - 1) * spacing_x, (ny - 1) * spacing_y);
  f.ux.assign(f.size(), 0.0);
  f.uy.assign(f.size(), 0.0);
  f.uz.assign(f.size(), 0.0);
  f.mask.assign(f.size(), 0);
  f.has_out_of_plane = out_of_plane;
  return f;
}

PointCloud read_points(std::istream& in, LengthUnit units, std::optional<char> delimiter) {
  PointCloud cloud;
  cloud.source_units = units;
  const double scale = meters_per(units);

  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::size_t columns_line = 0;
  bool first_content = true;
  char delim = delimiter.value_or('\0');

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (line_no == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF &&
        static_cast<unsigned char>(view[1]) == 0xBB && static_cast<unsigned char>(view[2]) == 0xBF) {
      view.remove_prefix(3);
    }
    if (trim(view).empty()) continue;
    if (delim == '\0') delim = detect_delimiter(view);

    const auto tokens = split(trim(view), delim);
    std::vector<double> values;
    values.reserve(tokens.size());
    bool numeric = true;
    for (auto token : tokens) {
      auto v = parse_number(token);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }

    if (first_content) {
      first_content = false;
      if (!numeric) continue;  // header row
    }
    if (!numeric) {
      fail(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": non-numeric value");
    }
    if (values.size() != 4 && values.size() != 6) {
      fail(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": expected 4 or 6 columns, got " +
                                        std::to_string(values.size()));
    }
    if (columns == 0) {
      columns = values.size();
      columns_line = line_no;
      cloud.has_out_of_plane = columns == 6;
    } else if (values.size() != columns) {
      fail(ErrorKind::MixedColumnCounts, "line " + std::to_string(line_no) + " has " +
                                             std::to_string(values.size()) + " columns but line " +
                                             std::to_string(columns_line) + " has " +
                                             std::to_string(columns));
    }

    cloud.x.push_back(values[0] * scale);
    cloud.y.push_back(values[1] * scale);
    if (columns == 6) {
      cloud.z.push_back(values[2] * scale);
      cloud.ux.push_back(values[3] * scale);
      cloud.uy.push_back(values[4] * scale);
      cloud.uz.push_back(values[5] * scale);
    } else {
      cloud.ux.push_back(values[2] * scale);
      cloud.uy.push_back(values[3] * scale);
    }
    if (!std::isfinite(cloud.x.back()) || !std::isfinite(cloud.y.back())) {
      fail(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": non-finite coordinate");
    }
  }
  if (cloud.size() == 0) fail(ErrorKind::EmptyFile, "no data rows");
  return cloud;
}

PointCloud read_points(const std::filesystem::path& path, LengthUnit units,
                       std::optional<char> delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, kModule, "cannot open " + path.string());
  return read_points(in, units, delimiter);
}

GridReport validate_grid(const PointCloud& points, double tolerance) {
  if (points.size() == 0) fail(ErrorKind::EmptyFile, "no points");
  const AxisFit fx = fit_axis(points.x, "X");
  const AxisFit fy = fit_axis(points.y, "Y");

  GridReport report;
  report.nx = fx.count;
  report.ny = fy.count;
  report.spacing_x = fx.spacing;
  report.spacing_y = fy.spacing;
  report.lower = Vec2(fx.lower, fy.lower);

  std::vector<std::uint8_t> seen(static_cast<std::size_t>(report.nx) * report.ny, 0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double dx = points.x[k] - (fx.lower + fx.index[k] * fx.spacing);
    const double dy = points.y[k] - (fy.lower + fy.index[k] * fy.spacing);
    report.max_deviation = std::max(report.max_deviation, std::hypot(dx, dy));
    if (std::abs(dx) > tolerance * fx.spacing || std::abs(dy) > tolerance * fy.spacing) {
      std::ostringstream msg;
      msg << "point " << k << " at (" << points.x[k] << ", " << points.y[k]
          << ") deviates from the inferred lattice by (" << dx << ", " << dy << ") m";
      fail(ErrorKind::IrregularGrid, msg.str());
    }
    const std::size_t node = static_cast<std::size_t>(fx.index[k]) +
                             static_cast<std::size_t>(fy.index[k]) * report.nx;
    if (seen[node]) {
      fail(ErrorKind::DuplicatePoints, "two points map to lattice node (" +
                                           std::to_string(fx.index[k]) + ", " +
                                           std::to_string(fy.index[k]) + ")");
    }
    seen[node] = 1;
  }
  report.missing_nodes = seen.size() - points.size();
  return report;
}

DisplacementField to_field(const PointCloud& points, const GridReport& grid, Diagnostics* diag) {
  DisplacementField field = DisplacementField::zeros(grid.nx, grid.ny, grid.spacing_x,
                                                     grid.spacing_y, grid.lower,
                                                     points.has_out_of_plane);
  field.source_units = points.source_units;
  std::vector<std::uint8_t> filled(field.size(), 0);
  std::size_t dropped = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const int i = static_cast<int>(std::lround((points.x[k] - grid.lower.x()) / grid.spacing_x));
    const int j = static_cast<int>(std::lround((points.y[k] - grid.lower.y()) / grid.spacing_y));
    const std::size_t node = field.index(i, j);
    filled[node] = 1;
    const double uz = points.has_out_of_plane ? points.uz[k] : 0.0;
    if (!std::isfinite(points.ux[k]) || !std::isfinite(points.uy[k]) || !std::isfinite(uz)) {
      field.mask[node] = 1;
      ++dropped;
      continue;
    }
    field.ux[node] = points.ux[k];
    field.uy[node] = points.uy[k];
    field.uz[node] = uz;
  }
  std::size_t missing = 0;
  for (std::size_t n = 0; n < field.size(); ++n) {
    if (!filled[n]) {
      field.mask[n] = 1;
      ++missing;
    }
  }
  if (diag && (dropped > 0 || missing > 0)) {
    diag->warn("auto-masked " + std::to_string(dropped) + " NaN points and " +
               std::to_string(missing) + " missing lattice nodes");
  }

  if (points.has_out_of_plane && !points.z.empty()) {
    const double mean_z = std::accumulate(points.z.begin(), points.z.end(), 0.0) /
                          static_cast<double>(points.z.size());
    double dev = 0.0;
    for (double z : points.z) dev = std::max(dev, std::abs(z - mean_z));
    field.out_of_flatness = dev;
    const double diagonal = (field.upper - field.lower).norm();
    if (diag && dev > 0.02 * diagonal) {
      std::ostringstream msg;
      msg << "stereo surface deviates from its mean plane by " << dev
          << " m (> 2% of the field diagonal); it is analysed as planar";
      diag->warn(msg.str());
    }
  }
  return field;
}

DisplacementField load_field(const std::filesystem::path& path, LengthUnit units,
                             std::optional<char> delimiter, Diagnostics* diag) {
  const PointCloud points = read_points(path, units, delimiter);
  return to_field(points, validate_grid(points), diag);
}

DisplacementField load_field(std::istream& in, LengthUnit units, std::optional<char> delimiter,
                             Diagnostics* diag) {
  const PointCloud points = read_points(in, units, delimiter);
  return to_field(points, validate_grid(points), diag);
}

void write_field_csv(const DisplacementField& field, std::ostream& out) {
  using detail::format_double;
  out << (field.has_out_of_plane ? "X,Y,Z,Ux,Uy,Uz\n" : "X,Y,Ux,Uy\n");
  for (int j = 0; j < field.ny; ++j) {
    for (int i = 0; i < field.nx; ++i) {
      const std::size_t n = field.index(i, j);
      const Vec2 p = field.position(i, j);
      out << format_double(p.x()) << ',' << format_double(p.y()) << ',';
      if (field.has_out_of_plane) out << "0,";
      out << format_double(field.ux[n]) << ',' << format_double(field.uy[n]);
      if (field.has_out_of_plane) out << ',' << format_double(field.uz[n]);
      out << '\n';
    }
  }
}

void write_field_csv(const DisplacementField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write " + path.string());
  write_field_csv(field, out);
  if (!out) throw Error(ErrorKind::IoError, kModule, "write failed for " + path.string());
}

namespace {

DisplacementField rotate_quarter(const DisplacementField& f) {
  DisplacementField r;
  r.nx = f.ny;
  r.ny = f.nx;
  r.spacing_x = f.spacing_y;
  r.spacing_y = f.spacing_x;
  r.lower = Vec2(-f.upper.y(), f.lower.x());
  r.upper = Vec2(-f.lower.y(), f.upper.x());
  r.has_out_of_plane = f.has_out_of_plane;
  r.source_units = f.source_units;
  r.out_of_flatness = f.out_of_flatness;
  r.ux.resize(f.size());
  r.uy.resize(f.size());
  r.uz.resize(f.size());
  r.mask.resize(f.size());
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) {
      const std::size_t src = f.index(i, j);
      const std::size_t dst = r.index(f.ny - 1 - j, i);
      r.ux[dst] = -f.uy[src];
      r.uy[dst] = f.ux[src];
      r.uz[dst] = f.uz[src];
      r.mask[dst] = f.mask[src];
    }
  }
  return r;
}

}  // namespace

DisplacementField transform_field(const DisplacementField& field, int quarter_turns,
                                  std::optional<IndexRect> crop) {
  DisplacementField out = field;
  const int turns = ((quarter_turns % 4) + 4) % 4;
  for (int t = 0; t < turns; ++t) out = rotate_quarter(out);
  if (!crop) return out;

  const IndexRect c = *crop;
  if (c.i0 < 0 || c.j0 < 0 || c.i1 >= out.nx || c.j1 >= out.ny || c.i0 > c.i1 || c.j0 > c.j1) {
    fail(ErrorKind::CropOutOfBounds, "crop rectangle outside the " + std::to_string(out.nx) + "x" +
                                         std::to_string(out.ny) + " grid");
  }
  if (c.i1 - c.i0 + 1 < 3 || c.j1 - c.j0 + 1 < 3) {
    fail(ErrorKind::CropTooSmall, "crop must keep at least 3x3 nodes");
  }
  DisplacementField cropped = DisplacementField::zeros(
      c.i1 - c.i0 + 1, c.j1 - c.j0 + 1, out.spacing_x, out.spacing_y, out.position(c.i0, c.j0),
      out.has_out_of_plane);
  cropped.upper = out.position(c.i1, c.j1);
  cropped.source_units = out.source_units;
  cropped.out_of_flatness = out.out_of_flatness;
  for (int j = 0; j < cropped.ny; ++j) {
    for (int i = 0; i < cropped.nx; ++i) {
      const std::size_t src = out.index(i + c.i0, j + c.j0);
      const std::size_t dst = cropped.index(i, j);
      cropped.ux[dst] = out.ux[src];
      cropped.uy[dst] = out.uy[src];
      cropped.uz[dst] = out.uz[src];
      cropped.mask[dst] = out.mask[src];
    }
  }
  return cropped;
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace

MaskRegion MaskRegion::rectangle(Vec2 a, Vec2 b) {
  MaskRegion r;
  r.kind = Kind::rectangle;
  r.vertices = {a.cwiseMin(b), a.cwiseMax(b)};
  return r;
}

MaskRegion MaskRegion::polygon(std::vector<Vec2> vertices) {
  MaskRegion r;
  r.kind = Kind::polygon;
  r.vertices = std::move(vertices);
  return r;
}

void MaskRegion::validate() const {
  if (kind == Kind::rectangle) {
    if (vertices.size() != 2) fail(ErrorKind::InvalidMask, "rectangle needs two corners");
    const Vec2 d = vertices[1] - vertices[0];
    if (!(std::abs(d.x()) > 0.0 && std::abs(d.y()) > 0.0)) {
      fail(ErrorKind::InvalidMask, "rectangle has zero area");
    }
    return;
  }
  const std::size_t n = vertices.size();
  if (n < 3) fail(ErrorKind::InvalidMask, "polygon needs at least three vertices");
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool adjacent = b == a + 1 || (a == 0 && b == n - 1);
      if (adjacent) continue;
      if (segments_intersect(vertices[a], vertices[(a + 1) % n], vertices[b], vertices[(b + 1) % n])) {
        fail(ErrorKind::InvalidMask, "polygon is self-intersecting");
      }
    }
  }
}

bool MaskRegion::contains(const Vec2& p) const {
  if (kind == Kind::rectangle) {
    const Vec2 lo = vertices[0].cwiseMin(vertices[1]);
    const Vec2 hi = vertices[0].cwiseMax(vertices[1]);
    const double eps = 1e-9 * (hi - lo).norm();
    return p.x() >= lo.x() - eps && p.x() <= hi.x() + eps && p.y() >= lo.y() - eps &&
           p.y() <= hi.y() + eps;
  }
  const std::size_t n = vertices.size();
  double extent = 0.0;
  for (std::size_t k = 1; k < n; ++k) extent = std::max(extent, (vertices[k] - vertices[0]).norm());
  const double eps = 1e-9 * extent;
  bool inside = false;
  for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
    const Vec2& va = vertices[a];
    const Vec2& vb = vertices[b];
    if (distance_to_segment(p, va, vb) <= eps) return true;
    if ((va.y() > p.y()) != (vb.y() > p.y())) {
      const double x_cross = va.x() + (p.y() - va.y()) * (vb.x() - va.x()) / (vb.y() - va.y());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

DisplacementField apply_mask(const DisplacementField& field, const MaskRegion& region,
                             Diagnostics* diag) {
  region.validate();
  DisplacementField out = field;
  std::size_t covered = 0;
  for (int j = 0; j < field.ny; ++j) {
    for (int i = 0; i < field.nx; ++i) {
      if (region.contains(field.position(i, j))) {
        out.mask[field.index(i, j)] = 1;
        ++covered;
      }
    }
  }
  if (covered == 0) {
    if (diag) diag->warn("MaskEmpty: mask region covers no grid node; field unchanged");
    return field;
  }
  if (out.masked_count() == out.size()) {
    fail(ErrorKind::MaskCoversAllNodes, "mask leaves no node with measured boundary conditions");
  }
  return out;
}

std::vector<double> magnitude(const DisplacementField& field) {
  std::vector<double> mag(field.size());
  for (std::size_t n = 0; n < field.size(); ++n) {
    const double z = field.has_out_of_plane ? field.uz[n] : 0.0;
    mag[n] = std::sqrt(field.ux[n] * field.ux[n] + field.uy[n] * field.uy[n] + z * z);
  }
  return mag;
}

}  // namespace crackfield
