#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "crackfield/error.hpp"
#include "crackfield/material.hpp"
#include "crackfield/mesh.hpp"
#include "crackfield/solver.hpp"

namespace crackfield {

/// Where the integrals are taken: tip position, virtual extension direction
/// and the crack direction that fixes the auxiliary-field branch cut.
struct IntegralFrame {
  Vec2 tip = Vec2::Zero();
  double q_angle = 0.0;
  double crack_angle = 0.0;

  static IntegralFrame from_crack(const CrackDefinition& crack);
  IntegralFrame with_q_angle(double angle) const;
};

/// Integration domain k: elements within k node-sharing rings of the tip.
/// q = 1 on the nodes of domain k-1 (the tip alone for k = 1) and 0 elsewhere,
/// so only the outermost ring has a nonzero q gradient.
struct ContourDomain {
  int ring = 0;
  std::vector<int> ring_elements;
  std::vector<std::uint8_t> q;  // per mesh node
  double outer_radius = 0.0;
};

/// Domains 1..n. Stops early (with a warning) when q = 1 would reach the
/// outer boundary of the grid.
std::vector<ContourDomain> build_domains(const SeamMesh& mesh, int n_contours, Diagnostics* diag = nullptr);

/// Number of valid domains around the tip.
int available_contours(const SeamMesh& mesh);

std::vector<double> compute_j_edi(const SolutionState& solution, const SeamMesh& mesh,
                                  const IntegralFrame& frame, const std::vector<ContourDomain>& domains,
                                  ExecPolicy policy = ExecPolicy::parallel);

struct KPair {
  double K_I = 0.0;
  double K_II = 0.0;
};

/// Interaction-integral K_I, K_II per domain with unit-K auxiliary fields
/// built from `eff`. Rejects deformation-plasticity solutions.
std::vector<KPair> compute_interaction_k(const SolutionState& solution, const SeamMesh& mesh,
                                         const IntegralFrame& frame, const std::vector<ContourDomain>& domains,
                                         const EffectiveConstants& eff, PlaneState state,
                                         ExecPolicy policy = ExecPolicy::parallel);

/// How the pseudo in-plane problem carrying Uz is posed.
enum class PseudoMode {
  plane_strain,  // Ux := Uz, Uy := 0, material plane state as given
  plane_stress,  // Ux := Uz, Uy := 0, solved and integrated in plane stress
};

std::string_view to_string(PseudoMode mode);
PseudoMode parse_pseudo_mode(std::string_view text);

struct Mode3Series {
  std::vector<double> K_II_pseudo;
  std::vector<double> K_III;
  std::vector<double> J_III;
};

/// Solved pseudo in-plane problem with Uz injected along the crack direction:
/// bc (u1, u2) := (Uz, 0) in the tip frame, i.e. (Ux, Uy) := (Uz, 0) for a crack along x.
struct PseudoProblem {
  SeamMesh mesh;
  Material material;
  EffectiveConstants eff;
  SolutionState solution;
};

PseudoProblem solve_pseudo(const DisplacementField& field, const SeamMesh& mesh, const Material& material,
                           PseudoMode mode, double crack_angle = 0.0, ExecPolicy policy = ExecPolicy::parallel);

/// K_III = (2G/E) K_II_pseudo and J_III = K_III^2 / (2G), G and E from `material`.
Mode3Series evaluate_mode3(const PseudoProblem& pseudo, const Material& material, const IntegralFrame& frame,
                           const std::vector<ContourDomain>& domains, ExecPolicy policy = ExecPolicy::parallel);

Mode3Series mode3_pipeline(const DisplacementField& field, const SeamMesh& mesh, const Material& material,
                           const IntegralFrame& frame, const std::vector<ContourDomain>& domains,
                           PseudoMode mode = PseudoMode::plane_stress,
                           ExecPolicy policy = ExecPolicy::parallel);

std::vector<double> combine_total_j(const std::vector<double>& J_in_plane, const std::vector<double>& J_III);

/// Per-contour results. K columns are empty when not computed.
struct ContourSeries {
  std::vector<int> ring;
  std::vector<double> outer_radius;
  std::vector<double> J;
  std::vector<double> K_I;
  std::vector<double> K_II;
  std::vector<double> K_II_pseudo;
  std::vector<double> K_III;
  std::vector<double> J_III;
  std::vector<double> J_total;

  std::size_t size() const { return J.size(); }
  bool has_k() const { return !K_I.empty(); }
  bool has_mode3() const { return !K_III.empty(); }
};

struct PlateauOptions {
  int window_min = 5;
  double rel_tol = 0.05;
  int skip = 2;
  /// Explicit [first, last] contour index (0-based) overriding detection.
  std::optional<std::pair<int, int>> window;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct PlateauStats {
  int start = 0;  // 0-based index into the series, inclusive
  int end = 0;
  bool no_plateau = false;
  bool explicit_window = false;
  MeanStd J;
  std::optional<MeanStd> K_I, K_II, K_II_pseudo, K_III, J_III, J_total;

  int length() const { return end - start + 1; }
};

PlateauStats plateau_over(const ContourSeries& series, int start, int end);

/// Longest window after `skip` in which every tracked quantity has both its
/// std and its largest deviation from the window mean within rel_tol of its
/// scale. J uses |mean J|; K components share the mean K
/// magnitude so a vanishing mode does not block detection.
PlateauStats detect_plateau(const ContourSeries& series, const PlateauOptions& options = {},
                            Diagnostics* diag = nullptr);

}  // namespace crackfield
