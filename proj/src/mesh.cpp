#include "crackfield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

namespace crackfield {
namespace {

constexpr const char* kModule = "mesh";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, kModule, message);
}

double distance_to_polyline(const Vec2& p, const std::vector<Vec2>& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < line.size(); ++k) {
    const Vec2 a = line[k - 1];
    const Vec2 ab = line[k] - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  if (line.size() == 1) best = (p - line.front()).norm();
  return best;
}

bool inside_with_margin(const DisplacementField& field, const Vec2& p) {
  const double mx = 0.5 * field.spacing_x;
  const double my = 0.5 * field.spacing_y;
  return p.x() >= field.lower.x() - mx && p.x() <= field.upper.x() + mx &&
         p.y() >= field.lower.y() - my && p.y() <= field.upper.y() + my;
}

std::pair<int, int> nearest_node(const DisplacementField& field, const Vec2& p) {
  const int i = std::clamp(static_cast<int>(std::lround((p.x() - field.lower.x()) / field.spacing_x)), 0,
                           field.nx - 1);
  const int j = std::clamp(static_cast<int>(std::lround((p.y() - field.lower.y()) / field.spacing_y)), 0,
                           field.ny - 1);
  return {i, j};
}

bool is_outer(const DisplacementField& field, int i, int j) {
  return i == 0 || j == 0 || i == field.nx - 1 || j == field.ny - 1;
}

double angle_ccw(const Vec2& from, const Vec2& to) {
  double a = std::atan2(to.y(), to.x()) - std::atan2(from.y(), from.x());
  while (a <= 0.0) a += 2.0 * std::numbers::pi;
  while (a > 2.0 * std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

}  // namespace

CrackDefinition CrackDefinition::straight(Vec2 mouth, Vec2 tip) {
  CrackDefinition c;
  c.polyline = {mouth, tip};
  return c;
}

double CrackDefinition::crack_direction() const {
  if (polyline.size() < 2) fail(ErrorKind::InvalidCrack, "crack polyline needs at least two points");
  const Vec2 d = polyline.back() - polyline[polyline.size() - 2];
  return std::atan2(d.y(), d.x());
}

void CrackDefinition::validate() const {
  if (polyline.size() < 2) fail(ErrorKind::InvalidCrack, "crack polyline needs at least two points");
  for (std::size_t k = 1; k < polyline.size(); ++k) {
    if ((polyline[k] - polyline[k - 1]).norm() == 0.0) {
      fail(ErrorKind::InvalidCrack, "consecutive polyline points coincide");
    }
  }
  for (const Vec2& p : polyline) {
    if (!p.allFinite()) fail(ErrorKind::InvalidCrack, "polyline has non-finite coordinates");
  }
  if (q_angle && !std::isfinite(*q_angle)) fail(ErrorKind::InvalidCrack, "q angle must be finite");
  if (mask) mask->validate();
}

CrackDefinition CrackDefinition::translated(const Vec2& offset) const {
  CrackDefinition c = *this;
  for (Vec2& p : c.polyline) p += offset;
  if (c.mask) {
    for (Vec2& v : c.mask->vertices) v += offset;
  }
  return c;
}

Eigen::Matrix2d crack_frame(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d R;
  R << c, s, -s, c;
  return R;
}

Eigen::Matrix2d crack_frame(const CrackDefinition& crack) {
  crack.validate();
  return crack_frame(crack.q_direction());
}

std::size_t SeamMesh::constrained_count() const {
  return static_cast<std::size_t>(std::count(constrained.begin(), constrained.end(), std::uint8_t{1}));
}

SeamMesh SeamMesh::with_boundary_values(const std::vector<double>& ux,
                                        const std::vector<double>& uy) const {
  SeamMesh out = *this;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto l = static_cast<std::size_t>(lattice_node[n]);
    out.bc_values[n] = Vec2(ux[l], uy[l]);
  }
  return out;
}

std::vector<int> snap_polyline(const DisplacementField& field, const std::vector<Vec2>& polyline) {
  if (polyline.size() < 2) fail(ErrorKind::InvalidCrack, "crack polyline needs at least two points");
  const Vec2& tip = polyline.back();
  if (!inside_with_margin(field, tip)) {
    std::ostringstream msg;
    msg << "crack tip (" << tip.x() << ", " << tip.y() << ") lies outside the grid";
    fail(ErrorKind::TipOutsideGrid, msg.str());
  }
  const auto [ti, tj] = nearest_node(field, tip);
  if (is_outer(field, ti, tj)) {
    fail(ErrorKind::CrackTouchesBoundaryTip, "crack tip snaps onto the outer boundary of the grid");
  }
  if (!inside_with_margin(field, polyline.front())) {
    fail(ErrorKind::PolylineNotSnappable, "crack mouth lies outside the grid");
  }
  const auto [mi, mj] = nearest_node(field, polyline.front());
  const int mouth = static_cast<int>(field.index(mi, mj));
  const int target = static_cast<int>(field.index(ti, tj));
  if (mouth == target) fail(ErrorKind::PolylineNotSnappable, "crack mouth and tip snap to the same node");
  const bool mouth_outer = is_outer(field, mi, mj);

  // Shortest path over lattice edges, weighted by distance to the polyline.
  const double h = std::min(field.spacing_x, field.spacing_y);
  const std::size_t n = field.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(mouth)] = 0.0;
  queue.push({0.0, mouth});
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const auto [d, node] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(node)]) continue;
    if (node == target) break;
    const int i = node % field.nx;
    const int j = node / field.nx;
    for (int k = 0; k < 4; ++k) {
      const int ni = i + di[k];
      const int nj = j + dj[k];
      if (ni < 0 || nj < 0 || ni >= field.nx || nj >= field.ny) continue;
      const int next = static_cast<int>(field.index(ni, nj));
      if (next != target && is_outer(field, ni, nj) && !(mouth_outer && next == mouth)) continue;
      const Vec2 a = field.position(i, j);
      const Vec2 b = field.position(ni, nj);
      const double len = (b - a).norm();
      const double w = len * (0.05 + distance_to_polyline(0.5 * (a + b), polyline) / h);
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(next)]) {
        dist[static_cast<std::size_t>(next)] = nd;
        prev[static_cast<std::size_t>(next)] = node;
        queue.push({nd, next});
      }
    }
  }
  if (prev[static_cast<std::size_t>(target)] < 0) {
    fail(ErrorKind::PolylineNotSnappable, "no lattice path between crack mouth and tip");
  }
  std::vector<int> chain;
  for (int node = target; node != -1; node = prev[static_cast<std::size_t>(node)]) chain.push_back(node);
  std::reverse(chain.begin(), chain.end());

  // The chain must follow the polyline both ways to within one cell.
  const double limit = std::max(field.spacing_x, field.spacing_y) * (1.0 + 1e-9);
  std::vector<Vec2> chain_points;
  chain_points.reserve(chain.size());
  for (int node : chain) chain_points.push_back(field.position(static_cast<std::size_t>(node)));
  for (const Vec2& p : chain_points) {
    if (distance_to_polyline(p, polyline) > limit) {
      fail(ErrorKind::PolylineNotSnappable, "snapped crack path strays more than one cell from the polyline");
    }
  }
  for (std::size_t k = 1; k < polyline.size(); ++k) {
    for (int s = 0; s <= 4; ++s) {
      const Vec2 p = polyline[k - 1] + (polyline[k] - polyline[k - 1]) * (s / 4.0);
      if (!inside_with_margin(field, p)) continue;
      if (distance_to_polyline(p, chain_points) > limit) {
        fail(ErrorKind::PolylineNotSnappable, "polyline cannot be followed by lattice edges");
      }
    }
  }
  return chain;
}

SeamMesh build_seam_mesh(const DisplacementField& field, const CrackDefinition& crack,
                         Diagnostics* diag) {
  if (field.nx < 2 || field.ny < 2) fail(ErrorKind::InvalidCrack, "field needs at least 2x2 nodes");
  SeamMesh mesh;
  mesh.nx = field.nx;
  mesh.ny = field.ny;
  mesh.spacing_x = field.spacing_x;
  mesh.spacing_y = field.spacing_y;
  const std::size_t lattice = field.size();
  mesh.nodes.reserve(lattice);
  mesh.lattice_node.reserve(lattice);
  mesh.on_outer_boundary.reserve(lattice);
  for (int j = 0; j < field.ny; ++j) {
    for (int i = 0; i < field.nx; ++i) {
      mesh.nodes.push_back(field.position(i, j));
      mesh.lattice_node.push_back(static_cast<int>(field.index(i, j)));
      mesh.on_outer_boundary.push_back(is_outer(field, i, j) ? 1 : 0);
    }
  }
  for (int j = 0; j + 1 < field.ny; ++j) {
    for (int i = 0; i + 1 < field.nx; ++i) {
      mesh.elements.push_back({static_cast<int>(field.index(i, j)), static_cast<int>(field.index(i + 1, j)),
                               static_cast<int>(field.index(i + 1, j + 1)),
                               static_cast<int>(field.index(i, j + 1))});
    }
  }

  std::vector<std::uint8_t> on_seam(lattice, 0);
  if (!crack.empty()) {
    crack.validate();
    mesh.seam_chain = snap_polyline(field, crack.polyline);
    mesh.tip_node = mesh.seam_chain.back();
    const double snap_error = (field.position(static_cast<std::size_t>(mesh.tip_node)) - crack.tip()).norm();
    if (diag && snap_error > 0.25 * std::min(field.spacing_x, field.spacing_y)) {
      std::ostringstream msg;
      msg << "crack tip moved " << snap_error << " m to the nearest grid node";
      diag->warn(msg.str());
    }

    // Incident elements per lattice node.
    std::vector<std::vector<int>> incident(lattice);
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
      for (int node : mesh.elements[e]) incident[static_cast<std::size_t>(node)].push_back(static_cast<int>(e));
    }

    const auto& chain = mesh.seam_chain;
    const bool mouth_outer = mesh.on_outer_boundary[static_cast<std::size_t>(chain.front())] != 0;
    for (std::size_t p = 0; p + 1 < chain.size(); ++p) {
      const int node = chain[p];
      on_seam[static_cast<std::size_t>(node)] = 1;
      if (p == 0 && !mouth_outer) continue;  // embedded crack end is not opened

      const Vec2 here = mesh.nodes[static_cast<std::size_t>(node)];
      const Vec2 d_out = mesh.nodes[static_cast<std::size_t>(chain[p + 1])] - here;
      const Vec2 d_in = p > 0 ? Vec2(mesh.nodes[static_cast<std::size_t>(chain[p - 1])] - here) : Vec2(-d_out);
      const double sector = angle_ccw(d_out, d_in);

      const int dup = static_cast<int>(mesh.nodes.size());
      mesh.nodes.push_back(here);
      mesh.lattice_node.push_back(node);
      mesh.on_outer_boundary.push_back(mesh.on_outer_boundary[static_cast<std::size_t>(node)]);
      mesh.seam_pairs.emplace_back(node, dup);

      // Elements swept counterclockwise from the outgoing to the incoming
      // chain edge lie on the left (upper) face and take the duplicate.
      for (int e : incident[static_cast<std::size_t>(node)]) {
        Vec2 centre = Vec2::Zero();
        for (int v : mesh.elements[static_cast<std::size_t>(e)]) centre += mesh.nodes[static_cast<std::size_t>(v)];
        centre /= 4.0;
        if (angle_ccw(d_out, centre - here) < sector) {
          for (int& v : mesh.elements[static_cast<std::size_t>(e)]) {
            if (v == node) v = dup;
          }
        }
      }
    }
  }

  mesh.constrained.assign(mesh.nodes.size(), 0);
  mesh.bc_values.assign(mesh.nodes.size(), Vec2::Zero());
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    const auto l = static_cast<std::size_t>(mesh.lattice_node[n]);
    mesh.bc_values[n] = Vec2(field.ux[l], field.uy[l]);
    mesh.constrained[n] = (!field.mask[l] && !on_seam[l]) ? 1 : 0;
  }
  if (mesh.constrained_count() == 0) {
    throw Error(ErrorKind::MaskCoversAllNodes, kModule, "no node carries a measured boundary condition");
  }
  return mesh;
}

}  // namespace crackfield
