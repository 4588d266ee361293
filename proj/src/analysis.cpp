#include "crackfield/analysis.hpp"

namespace crackfield {

PreparedProblem prepare_problem(const DisplacementField& field, const CrackDefinition& crack,
                                const Material& material, const AnalysisOptions& options) {
  material.validate();
  crack.validate();
  PreparedProblem p;
  p.crack = crack;
  p.material = material;
  p.options = options;
  p.field = crack.mask ? apply_mask(field, *crack.mask, &p.diagnostics) : field;
  p.mesh = build_seam_mesh(p.field, crack, &p.diagnostics);
  p.domains = build_domains(p.mesh, options.n_contours, &p.diagnostics);

  if (options.model == ConstitutiveModel::deformation_plasticity) {
    p.solution = solve_deformation_plasticity(p.mesh, material, options.solver);
  } else {
    p.solution = solve_elastic(p.mesh, material, options.solver);
  }

  p.k_available = options.model == ConstitutiveModel::elastic && material.model != MaterialModel::anisotropic;
  if (!p.k_available) {
    p.diagnostics.warn(options.model == ConstitutiveModel::elastic
                           ? "K decomposition skipped for a general anisotropic material; J only"
                           : "elastoplastic run: J only, no K decomposition");
  }
  if (options.mode3) {
    if (!field.has_out_of_plane) {
      // 4-column data: nothing to do.
    } else if (!p.k_available) {
      p.diagnostics.warn("mode-III pipeline skipped: it needs the elastic interaction integral");
    } else {
      p.pseudo = solve_pseudo(p.field, p.mesh, material, options.pseudo_mode, p.crack.crack_direction(),
                             options.solver.policy);
    }
  }
  return p;
}

ContourSeries evaluate_series(const PreparedProblem& p, double q_angle) {
  const IntegralFrame frame = IntegralFrame::from_crack(p.crack).with_q_angle(q_angle);
  const ExecPolicy policy = p.options.solver.policy;
  ContourSeries s;
  for (const auto& d : p.domains) {
    s.ring.push_back(d.ring);
    s.outer_radius.push_back(d.outer_radius);
  }
  s.J = compute_j_edi(p.solution, p.mesh, frame, p.domains, policy);
  if (p.k_available) {
    const auto k = compute_interaction_k(p.solution, p.mesh, frame, p.domains, effective_constants(p.material),
                                         p.material.plane_state, policy);
    for (const KPair& v : k) {
      s.K_I.push_back(v.K_I);
      s.K_II.push_back(v.K_II);
    }
  }
  if (p.pseudo) {
    Mode3Series m = evaluate_mode3(*p.pseudo, p.material, frame, p.domains, policy);
    s.J_total = combine_total_j(s.J, m.J_III);
    s.K_II_pseudo = std::move(m.K_II_pseudo);
    s.K_III = std::move(m.K_III);
    s.J_III = std::move(m.J_III);
  }
  return s;
}

AnalysisResult summarize(const PreparedProblem& p, ContourSeries series, double q_angle) {
  AnalysisResult r;
  Diagnostics diag = p.diagnostics;
  r.plateau = detect_plateau(series, p.options.plateau, &diag);
  r.series = std::move(series);
  r.model_used = p.solution.model_used;
  r.iterations = p.solution.iterations;
  r.residual = p.solution.residual;
  r.free_dofs = p.solution.free_dofs;
  r.seam_pairs = p.mesh.seam_pairs.size();
  r.tip_node = p.mesh.tip_node;
  r.q_angle = q_angle;
  r.warnings = std::move(diag.warnings);
  return r;
}

AnalysisResult run_analysis(const DisplacementField& field, const CrackDefinition& crack, const Material& material,
                            const AnalysisOptions& options) {
  const PreparedProblem p = prepare_problem(field, crack, material, options);
  const double q = crack.q_direction();
  return summarize(p, evaluate_series(p, q), q);
}

}  // namespace crackfield
