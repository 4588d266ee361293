#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "crackfield/kernels.hpp"
#include "crackfield/material.hpp"
#include "crackfield/mesh.hpp"

namespace crackfield {

using kernels::ExecPolicy;

enum class ConstitutiveModel { elastic, deformation_plasticity };

std::string_view to_string(ConstitutiveModel model);

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 50;
  ExecPolicy policy = ExecPolicy::parallel;
};

/// Nodal displacements plus Gauss-point fields (element-major, 4 points per
/// element) of a solved boundary value problem.
struct SolutionState {
  std::vector<Vec2> nodal_u;
  std::vector<Eigen::Vector3d> gp_stress;   // (sxx, syy, sxy)
  std::vector<Eigen::Vector3d> gp_strain;   // (exx, eyy, gxy)
  std::vector<Eigen::Matrix2d> gp_grad_u;   // du_i/dx_j
  std::vector<double> gp_energy_density;    // J/m^3
  std::vector<double> gp_sigma_eq;          // von Mises, Pa
  std::vector<Eigen::Vector2d> gp_position;
  std::vector<double> gp_weight;            // det(J) * Gauss weight
  ConstitutiveModel model_used = ConstitutiveModel::elastic;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  std::size_t free_dofs = 0;
};

/// Free-DOF block of the stiffness with prescribed DOFs condensed into the
/// right-hand side. Global DOF of node n, component c is 2n + c.
struct ReducedSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd rhs;
  std::vector<int> free_index;  // global DOF -> row, or -1 when prescribed
  std::vector<int> free_dofs;   // row -> global DOF
};

ReducedSystem assemble_reduced(const SeamMesh& mesh, const std::vector<kernels::Matrix8>& element_matrices);

/// Throws SingularSystem when a free node cannot reach any prescribed node.
void check_free_nodes_anchored(const SeamMesh& mesh);

SolutionState solve_elastic(const SeamMesh& mesh, const Material& material,
                            const SolverOptions& options = {});

/// Secant-stiffness fixed point for Ramberg-Osgood deformation plasticity
/// (Hencky form: elastic bulk response, secant shear modulus).
SolutionState solve_deformation_plasticity(const SeamMesh& mesh, const Material& material,
                                           const SolverOptions& options = {});

/// Deformation-plasticity stress state at one point for a given in-plane strain.
struct HenckyPoint {
  Eigen::Vector3d stress;
  double sigma_eq = 0.0;
  double secant_shear = 0.0;
  double energy_density = 0.0;
};

HenckyPoint hencky_response(const Eigen::Vector3d& strain, const Material& material);

/// Quadrature-point dump: elem,gp,x,y,sxx,syy,sxy,W.
void write_gauss_csv(const SolutionState& state, std::ostream& out);

}  // namespace crackfield
