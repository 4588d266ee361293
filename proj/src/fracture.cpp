#include "crackfield/fracture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crackfield/williams.hpp"

namespace crackfield {
namespace {

constexpr const char* kModule = "fracture";
constexpr int kGp = kernels::kGaussPoints;

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, kModule, message);
}

Eigen::Matrix2d stress_tensor(const Eigen::Vector3d& s) {
  Eigen::Matrix2d S;
  S << s[0], s[2], s[2], s[1];
  return S;
}

Eigen::Vector2d q_gradient(const kernels::ShapeAt& s, const std::array<int, 4>& conn,
                           const std::vector<std::uint8_t>& q) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int a = 0; a < 4; ++a) {
    if (q[static_cast<std::size_t>(conn[static_cast<std::size_t>(a)])]) g += s.dN_dx.row(a).transpose();
  }
  return g;
}

void check_consistent(const SolutionState& solution, const SeamMesh& mesh) {
  if (solution.nodal_u.size() != mesh.node_count() ||
      solution.gp_stress.size() != mesh.element_count() * kGp) {
    fail(ErrorKind::LengthMismatch, "solution does not belong to this mesh");
  }
}

MeanStd mean_std(const std::vector<double>& v, int start, int end) {
  MeanStd out;
  const int n = end - start + 1;
  double sum = 0.0;
  for (int i = start; i <= end; ++i) sum += v[static_cast<std::size_t>(i)];
  out.mean = sum / n;
  if (n > 1) {
    double ss = 0.0;
    for (int i = start; i <= end; ++i) {
      const double d = v[static_cast<std::size_t>(i)] - out.mean;
      ss += d * d;
    }
    out.std = std::sqrt(ss / (n - 1));
  }
  return out;
}

}  // namespace

IntegralFrame IntegralFrame::from_crack(const CrackDefinition& crack) {
  crack.validate();
  return {crack.tip(), crack.q_direction(), crack.crack_direction()};
}

IntegralFrame IntegralFrame::with_q_angle(double angle) const {
  IntegralFrame f = *this;
  f.q_angle = angle;
  return f;
}

std::vector<ContourDomain> build_domains(const SeamMesh& mesh, int n_contours, Diagnostics* diag) {
  if (n_contours < 1) fail(ErrorKind::InvalidContourCount, "contour count must be at least 1");
  if (mesh.tip_node < 0) fail(ErrorKind::InvalidCrack, "mesh has no crack tip");

  const std::size_t nn = mesh.node_count();
  const std::size_t ne = mesh.element_count();
  std::vector<std::vector<int>> node_elements(nn);
  for (std::size_t e = 0; e < ne; ++e) {
    for (int v : mesh.elements[e]) node_elements[static_cast<std::size_t>(v)].push_back(static_cast<int>(e));
  }

  const Vec2 tip = mesh.nodes[static_cast<std::size_t>(mesh.tip_node)];
  std::vector<std::uint8_t> inner(nn, 0);  // nodes of domain k-1
  std::vector<std::uint8_t> used(ne, 0);
  inner[static_cast<std::size_t>(mesh.tip_node)] = 1;
  std::vector<int> frontier{mesh.tip_node};

  std::vector<ContourDomain> domains;
  for (int k = 1; k <= n_contours; ++k) {
    const bool touches_edge = std::any_of(frontier.begin(), frontier.end(), [&](int v) {
      return mesh.on_outer_boundary[static_cast<std::size_t>(v)] != 0;
    });
    ContourDomain d;
    d.ring = k;
    for (int v : frontier) {
      for (int e : node_elements[static_cast<std::size_t>(v)]) {
        if (!used[static_cast<std::size_t>(e)]) {
          used[static_cast<std::size_t>(e)] = 1;
          d.ring_elements.push_back(e);
        }
      }
    }
    if (touches_edge || d.ring_elements.empty()) {
      if (diag) {
        diag->warn("ContourHitsBoundary: domain " + std::to_string(k) + " reaches the grid edge; series truncated to " +
                   std::to_string(k - 1) + " contours");
      }
      break;
    }
    std::sort(d.ring_elements.begin(), d.ring_elements.end());
    d.q = inner;
    d.outer_radius = std::numeric_limits<double>::infinity();
    std::vector<int> next;
    for (int e : d.ring_elements) {
      for (int v : mesh.elements[static_cast<std::size_t>(e)]) {
        const auto vi = static_cast<std::size_t>(v);
        if (d.q[vi]) continue;
        d.outer_radius = std::min(d.outer_radius, (mesh.nodes[vi] - tip).norm());
        if (!inner[vi]) {
          inner[vi] = 1;
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
    domains.push_back(std::move(d));
  }
  if (domains.empty()) fail(ErrorKind::InvalidContourCount, "no complete integration domain fits around the tip");

  // Largest domain must carry at least one measured node.
  bool measured = false;
  for (const auto& d : domains) {
    for (int e : d.ring_elements) {
      for (int v : mesh.elements[static_cast<std::size_t>(e)]) measured = measured || mesh.constrained[static_cast<std::size_t>(v)];
    }
  }
  if (!measured) fail(ErrorKind::ContourHitsMaskOnly, "every integration domain lies inside the masked region");
  return domains;
}

int available_contours(const SeamMesh& mesh) {
  return static_cast<int>(build_domains(mesh, std::max(mesh.nx, mesh.ny)).size());
}

std::vector<double> compute_j_edi(const SolutionState& solution, const SeamMesh& mesh, const IntegralFrame& frame,
                                  const std::vector<ContourDomain>& domains, ExecPolicy policy) {
  check_consistent(solution, mesh);
  const Eigen::Vector2d dir(std::cos(frame.q_angle), std::sin(frame.q_angle));
  std::vector<double> out;
  out.reserve(domains.size());
  for (const auto& d : domains) {
    out.push_back(kernels::ordered_sum(d.ring_elements, policy, [&](int e) {
      const auto eu = static_cast<std::size_t>(e);
      const auto X = kernels::element_nodes(mesh, eu);
      const auto& conn = mesh.elements[eu];
      double sum = 0.0;
      for (int g = 0; g < kGp; ++g) {
        const std::size_t qp = eu * kGp + static_cast<std::size_t>(g);
        const kernels::ShapeAt s = kernels::shape_at(X, g);
        const Eigen::Vector2d gq = q_gradient(s, conn, d.q);
        const Eigen::Matrix2d S = stress_tensor(solution.gp_stress[qp]);
        const Eigen::Vector2d du = solution.gp_grad_u[qp] * dir;
        sum += (du.dot(S * gq) - solution.gp_energy_density[qp] * dir.dot(gq)) * s.weight;
      }
      return sum;
    }));
  }
  return out;
}

std::vector<KPair> compute_interaction_k(const SolutionState& solution, const SeamMesh& mesh,
                                         const IntegralFrame& frame, const std::vector<ContourDomain>& domains,
                                         const EffectiveConstants& eff, PlaneState state, ExecPolicy policy) {
  if (solution.model_used != ConstitutiveModel::elastic) {
    fail(ErrorKind::ElastoplasticSolution, "interaction integral requires an elastic solution");
  }
  check_consistent(solution, mesh);
  const double mu = eff.G_eff;
  const double kappa = williams::kolosov(eff.nu_eff, state);
  const Eigen::Vector2d dir(std::cos(frame.q_angle), std::sin(frame.q_angle));
  const Eigen::Matrix2d R_crack = crack_frame(frame.crack_angle);
  const Eigen::Matrix2d Q = crack_frame(frame.q_angle);
  const double shift = frame.q_angle - frame.crack_angle;

  auto integrate = [&](const ContourDomain& d, williams::Mode mode) {
    return kernels::ordered_sum(d.ring_elements, policy, [&](int e) {
      const auto eu = static_cast<std::size_t>(e);
      const auto X = kernels::element_nodes(mesh, eu);
      const auto& conn = mesh.elements[eu];
      double sum = 0.0;
      for (int g = 0; g < kGp; ++g) {
        const std::size_t qp = eu * kGp + static_cast<std::size_t>(g);
        const kernels::ShapeAt s = kernels::shape_at(X, g);
        const Eigen::Vector2d gq = q_gradient(s, conn, d.q);
        const Eigen::Vector2d rel = R_crack * (s.x - frame.tip);
        const double r = rel.norm();
        const double theta = std::atan2(rel.y(), rel.x()) - shift;
        const williams::AuxiliaryField aux = williams::auxiliary(mode, r, theta, mu, kappa);
        const Eigen::Matrix2d S_aux = Q.transpose() * aux.stress * Q;
        const Eigen::Matrix2d G_aux = Q.transpose() * aux.grad_u * Q;
        const Eigen::Matrix2d E_aux = 0.5 * (G_aux + G_aux.transpose());
        const Eigen::Matrix2d S = stress_tensor(solution.gp_stress[qp]);
        const Eigen::Vector2d du = solution.gp_grad_u[qp] * dir;
        const Eigen::Vector2d du_aux = G_aux * dir;
        const double work = (S.array() * E_aux.array()).sum();
        sum += (du_aux.dot(S * gq) + du.dot(S_aux * gq) - work * dir.dot(gq)) * s.weight;
      }
      return sum;
    });
  };

  std::vector<KPair> out;
  out.reserve(domains.size());
  for (const auto& d : domains) {
    out.push_back({0.5 * eff.E_star * integrate(d, williams::Mode::I),
                   0.5 * eff.E_star * integrate(d, williams::Mode::II)});
  }
  return out;
}

std::string_view to_string(PseudoMode mode) {
  return mode == PseudoMode::plane_strain ? "plane_strain" : "plane_stress";
}

PseudoMode parse_pseudo_mode(std::string_view text) {
  if (text == "plane_strain" || text == "strain") return PseudoMode::plane_strain;
  if (text == "plane_stress" || text == "stress") return PseudoMode::plane_stress;
  fail(ErrorKind::ConfigError, "unknown pseudo mode '" + std::string(text) + "'");
}

PseudoProblem solve_pseudo(const DisplacementField& field, const SeamMesh& mesh, const Material& material,
                           PseudoMode mode, double crack_angle, ExecPolicy policy) {
  if (!field.has_out_of_plane) fail(ErrorKind::NoOutOfPlaneData, "field has no out-of-plane displacement");
  const EffectiveConstants eff = effective_constants(material);
  const PlaneState state = mode == PseudoMode::plane_stress ? PlaneState::stress : material.plane_state;
  const double c = std::cos(crack_angle), s = std::sin(crack_angle);
  std::vector<double> ux(field.uz.size()), uy(field.uz.size());
  for (std::size_t n = 0; n < field.uz.size(); ++n) {
    ux[n] = c * field.uz[n];
    uy[n] = s * field.uz[n];
  }
  PseudoProblem p{mesh.with_boundary_values(ux, uy), Material::isotropic(eff.E_eff, eff.nu_eff, state), {}, {}};
  p.eff = effective_constants(p.material);
  SolverOptions options;
  options.policy = policy;
  p.solution = solve_elastic(p.mesh, p.material, options);
  return p;
}

Mode3Series evaluate_mode3(const PseudoProblem& pseudo, const Material& material, const IntegralFrame& frame,
                           const std::vector<ContourDomain>& domains, ExecPolicy policy) {
  const auto k = compute_interaction_k(pseudo.solution, pseudo.mesh, frame, domains, pseudo.eff,
                                       pseudo.material.plane_state, policy);
  const EffectiveConstants eff = effective_constants(material);
  const double ratio = 2.0 * eff.G_eff / eff.E_eff;
  Mode3Series out;
  for (const KPair& p : k) {
    const double k3 = ratio * p.K_II;
    out.K_II_pseudo.push_back(p.K_II);
    out.K_III.push_back(k3);
    out.J_III.push_back(k3 * k3 / (2.0 * eff.G_eff));
  }
  return out;
}

Mode3Series mode3_pipeline(const DisplacementField& field, const SeamMesh& mesh, const Material& material,
                           const IntegralFrame& frame, const std::vector<ContourDomain>& domains, PseudoMode mode,
                           ExecPolicy policy) {
  return evaluate_mode3(solve_pseudo(field, mesh, material, mode, frame.crack_angle, policy), material, frame,
                        domains, policy);
}

std::vector<double> combine_total_j(const std::vector<double>& J_in_plane, const std::vector<double>& J_III) {
  if (J_in_plane.size() != J_III.size()) {
    fail(ErrorKind::LengthMismatch, "in-plane series has " + std::to_string(J_in_plane.size()) +
                                        " contours, mode-III series has " + std::to_string(J_III.size()));
  }
  std::vector<double> out(J_in_plane.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = J_in_plane[i] + J_III[i];
  return out;
}

PlateauStats plateau_over(const ContourSeries& series, int start, int end) {
  const int n = static_cast<int>(series.size());
  if (start < 0 || end >= n || start > end) {
    fail(ErrorKind::SeriesTooShort, "plateau window [" + std::to_string(start) + ", " + std::to_string(end) +
                                        "] outside a series of " + std::to_string(n) + " contours");
  }
  PlateauStats p;
  p.start = start;
  p.end = end;
  p.J = mean_std(series.J, start, end);
  auto opt = [&](const std::vector<double>& v, std::optional<MeanStd>& slot) {
    if (!v.empty()) slot = mean_std(v, start, end);
  };
  opt(series.K_I, p.K_I);
  opt(series.K_II, p.K_II);
  opt(series.K_II_pseudo, p.K_II_pseudo);
  opt(series.K_III, p.K_III);
  opt(series.J_III, p.J_III);
  opt(series.J_total, p.J_total);
  return p;
}

PlateauStats detect_plateau(const ContourSeries& series, const PlateauOptions& options, Diagnostics* diag) {
  const int n = static_cast<int>(series.size());
  if (n == 0) fail(ErrorKind::SeriesTooShort, "empty contour series");
  if (options.window) {
    PlateauStats p = plateau_over(series, options.window->first, options.window->second);
    p.explicit_window = true;
    return p;
  }
  if (options.window_min < 1 || options.skip < 0 || !(options.rel_tol > 0.0)) {
    fail(ErrorKind::ConfigError, "plateau options need window_min >= 1, skip >= 0, rel_tol > 0");
  }

  // Worst spread (std or largest deviation from the mean) over rel_tol * scale;
  // <= 1 qualifies.
  auto badness = [&](int s, int e) {
    double worst = 0.0;
    auto check = [&](const std::vector<double>& v, double scale) {
      if (v.empty()) return;
      const MeanStd m = mean_std(v, s, e);
      double spread = m.std;
      for (int i = s; i <= e; ++i) spread = std::max(spread, std::abs(v[static_cast<std::size_t>(i)] - m.mean));
      const double denom = options.rel_tol * scale;
      worst = std::max(worst, denom > 0.0 ? spread / denom : (spread > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    };
    check(series.J, std::abs(mean_std(series.J, s, e).mean));
    if (!series.J_total.empty()) check(series.J_total, std::abs(mean_std(series.J_total, s, e).mean));
    if (series.has_k()) {
      double kmag = 0.0;
      for (int i = s; i <= e; ++i) {
        const auto u = static_cast<std::size_t>(i);
        double sq = series.K_I[u] * series.K_I[u] + series.K_II[u] * series.K_II[u];
        if (series.has_mode3()) sq += series.K_III[u] * series.K_III[u];
        kmag += std::sqrt(sq);
      }
      kmag /= (e - s + 1);
      check(series.K_I, kmag);
      check(series.K_II, kmag);
      if (series.has_mode3()) check(series.K_III, kmag);
    }
    return worst;
  };

  int skip = options.skip;
  int window_min = options.window_min;
  bool shortened = false;
  if (n < skip + window_min) {
    shortened = true;
    skip = std::min(skip, n - 1);
    window_min = std::max(1, std::min(window_min, n - skip));
    if (diag) diag->warn("SeriesTooShort: " + std::to_string(n) + " contours is fewer than skip + window_min");
  }

  int best_s = -1, best_e = -1;
  double best_std = 0.0;
  for (int len = n - skip; len >= window_min && best_s < 0; --len) {
    for (int s = skip; s + len - 1 < n; ++s) {
      const int e = s + len - 1;
      if (badness(s, e) > 1.0) continue;
      const double sd = mean_std(series.J, s, e).std;
      if (best_s < 0 || sd < best_std) {
        best_s = s;
        best_e = e;
        best_std = sd;
      }
    }
  }
  if (best_s >= 0 && !shortened) return plateau_over(series, best_s, best_e);

  if (best_s < 0) {
    double best_bad = std::numeric_limits<double>::infinity();
    for (int s = skip; s + window_min - 1 < n; ++s) {
      const double b = badness(s, s + window_min - 1);
      if (b < best_bad) {
        best_bad = b;
        best_s = s;
        best_e = s + window_min - 1;
      }
    }
  }
  if (diag) diag->warn("NoPlateau: no window satisfies the plateau tolerance; reporting the steadiest candidate");
  PlateauStats p = plateau_over(series, best_s, best_e);
  p.no_plateau = true;
  return p;
}

}  // namespace crackfield
