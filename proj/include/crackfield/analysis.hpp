#pragma once

#include <optional>
#include <vector>

#include "crackfield/fracture.hpp"

/// Field + crack + material -> contour series and plateau. Shared by the CLI,
/// the HTTP service and the studies.
namespace crackfield {

struct AnalysisOptions {
  ConstitutiveModel model = ConstitutiveModel::elastic;
  int n_contours = 20;
  PlateauOptions plateau;
  PseudoMode pseudo_mode = PseudoMode::plane_stress;
  bool mode3 = true;  // run the pseudo problem when the field carries Uz
  SolverOptions solver;
};

/// Everything that does not depend on the q direction.
struct PreparedProblem {
  DisplacementField field;  // mask applied
  CrackDefinition crack;
  Material material;
  AnalysisOptions options;
  SeamMesh mesh;
  std::vector<ContourDomain> domains;
  SolutionState solution;
  std::optional<PseudoProblem> pseudo;
  bool k_available = false;
  Diagnostics diagnostics;
};

PreparedProblem prepare_problem(const DisplacementField& field, const CrackDefinition& crack,
                                const Material& material, const AnalysisOptions& options);

/// Contour series for the given virtual extension direction.
ContourSeries evaluate_series(const PreparedProblem& problem, double q_angle);

struct AnalysisResult {
  ContourSeries series;
  PlateauStats plateau;
  ConstitutiveModel model_used = ConstitutiveModel::elastic;
  int iterations = 0;
  double residual = 0.0;
  std::size_t free_dofs = 0;
  std::size_t seam_pairs = 0;
  int tip_node = -1;
  double q_angle = 0.0;
  std::vector<std::string> warnings;
};

AnalysisResult summarize(const PreparedProblem& problem, ContourSeries series, double q_angle);

AnalysisResult run_analysis(const DisplacementField& field, const CrackDefinition& crack,
                            const Material& material, const AnalysisOptions& options = {});

}  // namespace crackfield
