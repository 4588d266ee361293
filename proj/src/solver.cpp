#include "crackfield/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "format.hpp"

namespace crackfield {
namespace {

constexpr const char* kModule = "solver";
constexpr int kGp = kernels::kGaussPoints;

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, kModule, message);
}

double von_mises(const Eigen::Vector3d& s, double szz) {
  const double a = s[0] - s[1];
  const double b = s[1] - szz;
  const double c = szz - s[0];
  return std::sqrt(0.5 * (a * a + b * b + c * c) + 3.0 * s[2] * s[2]);
}

/// Out-of-plane normal stress for the elastic plane state.
double out_of_plane_stress(const Material& material, const Eigen::Vector3d& strain) {
  if (material.plane_state == PlaneState::stress) return 0.0;
  const Stiffness6 C = material.model == MaterialModel::isotropic
                           ? isotropic_stiffness(material.E, material.nu)
                           : *material.C;
  return C(2, 0) * strain[0] + C(2, 1) * strain[1] + C(2, 5) * strain[2];
}

void check_finite(const SeamMesh& mesh) {
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (mesh.constrained[n] && !mesh.bc_values[n].allFinite()) {
      fail(ErrorKind::NonFiniteInput, "non-finite prescribed displacement at node " + std::to_string(n));
    }
  }
}

int find_root(std::vector<int>& parent, int a) {
  while (parent[static_cast<std::size_t>(a)] != a) {
    parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    a = parent[static_cast<std::size_t>(a)];
  }
  return a;
}

Eigen::VectorXd solve_reduced(const ReducedSystem& sys) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(sys.K);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::SingularSystem, "factorisation of the free-DOF stiffness failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.minCoeff();
  if (!(dmin > 1e-13 * dmax)) {
    fail(ErrorKind::SingularSystem, "free-DOF stiffness is singular (unconstrained rigid motion)");
  }
  Eigen::VectorXd x = ldlt.solve(sys.rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) fail(ErrorKind::SingularSystem, "solve failed");
  return x;
}

std::vector<Vec2> expand(const SeamMesh& mesh, const ReducedSystem& sys, const Eigen::VectorXd& x) {
  std::vector<Vec2> u(mesh.node_count());
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    u[n] = mesh.constrained[n] ? mesh.bc_values[n] : Vec2::Zero();
  }
  for (std::size_t row = 0; row < sys.free_dofs.size(); ++row) {
    const int dof = sys.free_dofs[row];
    u[static_cast<std::size_t>(dof / 2)][dof % 2] = x[static_cast<Eigen::Index>(row)];
  }
  return u;
}

void fill_kinematics(SolutionState& state, const SeamMesh& mesh, ExecPolicy policy) {
  kernels::GaussKinematics kin = kernels::gauss_kinematics(mesh, state.nodal_u, policy);
  state.gp_grad_u = std::move(kin.grad_u);
  state.gp_strain = std::move(kin.strain);
  state.gp_position = std::move(kin.position);
  state.gp_weight = std::move(kin.weight);
}

std::size_t count_free_dofs(const SeamMesh& mesh) {
  return 2 * (mesh.node_count() - mesh.constrained_count());
}

}  // namespace

std::string_view to_string(ConstitutiveModel model) {
  return model == ConstitutiveModel::elastic ? "elastic" : "deformation_plasticity";
}

ReducedSystem assemble_reduced(const SeamMesh& mesh, const std::vector<kernels::Matrix8>& element_matrices) {
  ReducedSystem sys;
  const std::size_t ndof = 2 * mesh.node_count();
  sys.free_index.assign(ndof, -1);
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (mesh.constrained[n]) continue;
    for (int c = 0; c < 2; ++c) {
      sys.free_index[2 * n + static_cast<std::size_t>(c)] = static_cast<int>(sys.free_dofs.size());
      sys.free_dofs.push_back(static_cast<int>(2 * n) + c);
    }
  }
  const auto nf = static_cast<Eigen::Index>(sys.free_dofs.size());
  sys.rhs = Eigen::VectorXd::Zero(nf);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.element_count() * 64);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& conn = mesh.elements[e];
    const kernels::Matrix8& Ke = element_matrices[e];
    std::array<int, 8> dof;
    for (int a = 0; a < 4; ++a) {
      dof[static_cast<std::size_t>(2 * a)] = 2 * conn[static_cast<std::size_t>(a)];
      dof[static_cast<std::size_t>(2 * a + 1)] = 2 * conn[static_cast<std::size_t>(a)] + 1;
    }
    for (int a = 0; a < 8; ++a) {
      const int row = sys.free_index[static_cast<std::size_t>(dof[static_cast<std::size_t>(a)])];
      if (row < 0) continue;
      for (int b = 0; b < 8; ++b) {
        const int gb = dof[static_cast<std::size_t>(b)];
        const int col = sys.free_index[static_cast<std::size_t>(gb)];
        if (col >= 0) {
          triplets.emplace_back(row, col, Ke(a, b));
        } else {
          sys.rhs[row] -= Ke(a, b) * mesh.bc_values[static_cast<std::size_t>(gb / 2)][gb % 2];
        }
      }
    }
  }
  sys.K.resize(nf, nf);
  sys.K.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

void check_free_nodes_anchored(const SeamMesh& mesh) {
  const std::size_t nn = mesh.node_count();
  std::vector<int> parent(nn);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& conn : mesh.elements) {
    int first_free = -1;
    for (int v : conn) {
      if (mesh.constrained[static_cast<std::size_t>(v)]) continue;
      if (first_free < 0) {
        first_free = v;
      } else {
        parent[static_cast<std::size_t>(find_root(parent, v))] = find_root(parent, first_free);
      }
    }
  }
  std::vector<std::uint8_t> anchored(nn, 0);
  for (const auto& conn : mesh.elements) {
    const bool has_constrained = std::any_of(conn.begin(), conn.end(), [&](int v) {
      return mesh.constrained[static_cast<std::size_t>(v)] != 0;
    });
    if (!has_constrained) continue;
    for (int v : conn) {
      if (!mesh.constrained[static_cast<std::size_t>(v)]) anchored[static_cast<std::size_t>(find_root(parent, v))] = 1;
    }
  }
  std::vector<std::uint8_t> used(nn, 0);
  for (const auto& conn : mesh.elements)
    for (int v : conn) used[static_cast<std::size_t>(v)] = 1;
  for (std::size_t n = 0; n < nn; ++n) {
    if (mesh.constrained[n] || !used[n]) continue;
    if (!anchored[static_cast<std::size_t>(find_root(parent, static_cast<int>(n)))]) {
      fail(ErrorKind::SingularSystem, "free node " + std::to_string(n) + " is not connected to any measured node");
    }
  }
}

SolutionState solve_elastic(const SeamMesh& mesh, const Material& material, const SolverOptions& options) {
  material.validate();
  check_finite(mesh);
  const Matrix3 D = plane_stiffness(material);

  SolutionState state;
  state.model_used = ConstitutiveModel::elastic;
  state.free_dofs = count_free_dofs(mesh);
  if (state.free_dofs == 0) {
    state.nodal_u = mesh.bc_values;
  } else {
    check_free_nodes_anchored(mesh);
    const auto Ke = kernels::element_stiffness_all(mesh, std::span<const Matrix3>(&D, 1), options.policy);
    const ReducedSystem sys = assemble_reduced(mesh, Ke);
    state.nodal_u = expand(mesh, sys, solve_reduced(sys));
  }
  state.iterations = 1;
  state.residual = 0.0;
  state.residual_history = {0.0};

  fill_kinematics(state, mesh, options.policy);
  const std::size_t nq = state.gp_strain.size();
  state.gp_stress.resize(nq);
  state.gp_energy_density.resize(nq);
  state.gp_sigma_eq.resize(nq);
  kernels::for_each_index(options.policy, static_cast<std::ptrdiff_t>(nq), [&](std::ptrdiff_t k) {
    const auto q = static_cast<std::size_t>(k);
    const Eigen::Vector3d& eps = state.gp_strain[q];
    const Eigen::Vector3d sigma = D * eps;
    state.gp_stress[q] = sigma;
    state.gp_energy_density[q] = 0.5 * sigma.dot(eps);
    state.gp_sigma_eq[q] = von_mises(sigma, out_of_plane_stress(material, eps));
  });
  return state;
}

HenckyPoint hencky_response(const Eigen::Vector3d& strain, const Material& material) {
  const RambergOsgood& ro = *material.ro;
  const double E = material.E;
  const double nu = material.nu;
  const double G = E / (2.0 * (1.0 + nu));
  const double K = E / (3.0 * (1.0 - 2.0 * nu));

  // Equivalent stress from the deviatoric strain: sigma/(3G) + alpha sigma
  // (sigma/sigma0)^(n-1) / E = e_bar. Newton from the elastic upper bound.
  auto solve_sigma = [&](double e_bar) {
    double sigma = 3.0 * G * e_bar;
    if (ro.alpha == 0.0 || e_bar == 0.0) return sigma;
    for (int it = 0; it < 200; ++it) {
      const double ratio = std::pow(sigma / ro.sigma0, ro.n - 1.0);
      const double f = sigma / (3.0 * G) + ro.alpha * sigma * ratio / E - e_bar;
      const double df = 1.0 / (3.0 * G) + ro.n * ro.alpha * ratio / E;
      const double step = f / df;
      sigma -= step;
      if (std::abs(step) <= 1e-15 * sigma) break;
    }
    return sigma;
  };

  auto state_for = [&](double ezz, double& e_bar) {
    const double tr = strain[0] + strain[1] + ezz;
    const double exx = strain[0] - tr / 3.0;
    const double eyy = strain[1] - tr / 3.0;
    const double e33 = ezz - tr / 3.0;
    const double exy = 0.5 * strain[2];
    e_bar = std::sqrt(2.0 / 3.0 * (exx * exx + eyy * eyy + e33 * e33 + 2.0 * exy * exy));
    return tr;
  };

  double shear = G;
  double ezz = 0.0;
  double e_bar = 0.0;
  double sigma_eq = 0.0;
  for (int it = 0; it < 200; ++it) {
    if (material.plane_state == PlaneState::stress) {
      ezz = -(K - 2.0 * shear / 3.0) / (K + 4.0 * shear / 3.0) * (strain[0] + strain[1]);
    }
    state_for(ezz, e_bar);
    sigma_eq = solve_sigma(e_bar);
    double next = G;
    if (sigma_eq > 0.0) {
      const double E_sec = secant_modulus(ro, E, sigma_eq);
      next = 1.0 / (3.0 * (1.0 / E_sec - 1.0 / (9.0 * K)));
    }
    const bool settled = std::abs(next - shear) <= 1e-14 * G;
    shear = next;
    if (material.plane_state == PlaneState::strain || settled) break;
  }

  HenckyPoint out;
  out.secant_shear = shear;
  out.sigma_eq = sigma_eq;
  const double E_s = 9.0 * K * shear / (3.0 * K + shear);
  const double nu_s = (3.0 * K - 2.0 * shear) / (2.0 * (3.0 * K + shear));
  out.stress = plane_stiffness_isotropic(E_s, nu_s, material.plane_state) * strain;
  const double p = K * (strain[0] + strain[1] + ezz);
  const double plastic_strain =
      ro.alpha == 0.0 ? 0.0 : ro.alpha * ro.sigma0 / E * std::pow(sigma_eq / ro.sigma0, ro.n);
  out.energy_density = p * p / (2.0 * K) + sigma_eq * sigma_eq / (6.0 * G) +
                       ro.n / (ro.n + 1.0) * sigma_eq * plastic_strain;
  return out;
}

SolutionState solve_deformation_plasticity(const SeamMesh& mesh, const Material& material,
                                           const SolverOptions& options) {
  material.validate();
  if (!material.ro) fail(ErrorKind::InvalidMaterial, "deformation plasticity needs Ramberg-Osgood parameters");
  if (material.model != MaterialModel::isotropic) {
    fail(ErrorKind::InvalidMaterial, "deformation plasticity is implemented for isotropic materials only");
  }
  if (!(options.tol > 0.0)) fail(ErrorKind::InvalidMaterial, "tolerance must be positive");

  // Elastic predictor.
  SolutionState state = solve_elastic(mesh, material, options);
  state.model_used = ConstitutiveModel::deformation_plasticity;
  state.residual_history.clear();
  const std::size_t nq = state.gp_strain.size();
  std::vector<HenckyPoint> points(nq);
  std::vector<Matrix3> D_sec(nq);
  const double K = material.E / (3.0 * (1.0 - 2.0 * material.nu));

  auto update_points = [&]() {
    kernels::for_each_index(options.policy, static_cast<std::ptrdiff_t>(nq), [&](std::ptrdiff_t k) {
      const auto q = static_cast<std::size_t>(k);
      points[q] = hencky_response(state.gp_strain[q], material);
      const double G_s = points[q].secant_shear;
      const double E_s = 9.0 * K * G_s / (3.0 * K + G_s);
      const double nu_s = (3.0 * K - 2.0 * G_s) / (2.0 * (3.0 * K + G_s));
      D_sec[q] = plane_stiffness_isotropic(E_s, nu_s, material.plane_state);
    });
  };

  update_points();
  int iteration = 0;
  double residual = 0.0;
  if (state.free_dofs > 0) {
    while (true) {
      ++iteration;
      const auto Ke = kernels::element_stiffness_all(mesh, D_sec, options.policy);
      const ReducedSystem sys = assemble_reduced(mesh, Ke);
      std::vector<Vec2> next = expand(mesh, sys, solve_reduced(sys));
      double change = 0.0;
      double scale = 0.0;
      for (std::size_t n = 0; n < mesh.node_count(); ++n) {
        if (mesh.constrained[n]) continue;
        change = std::max(change, (next[n] - state.nodal_u[n]).cwiseAbs().maxCoeff());
        scale = std::max(scale, next[n].cwiseAbs().maxCoeff());
      }
      residual = scale > 0.0 ? change / scale : change;
      state.residual_history.push_back(residual);
      state.nodal_u = std::move(next);
      fill_kinematics(state, mesh, options.policy);
      update_points();
      if (residual < options.tol) break;
      if (iteration >= options.max_iter) {
        std::ostringstream msg;
        msg << "deformation plasticity did not converge in " << options.max_iter
            << " iterations (last relative change " << residual << ")";
        fail(ErrorKind::NoConvergence, msg.str());
      }
    }
  } else {
    iteration = 1;
    state.residual_history.push_back(0.0);
  }
  state.iterations = iteration;
  state.residual = residual;
  for (std::size_t q = 0; q < nq; ++q) {
    state.gp_stress[q] = points[q].stress;
    state.gp_energy_density[q] = points[q].energy_density;
    state.gp_sigma_eq[q] = points[q].sigma_eq;
  }
  return state;
}

void write_gauss_csv(const SolutionState& state, std::ostream& out) {
  using detail::format_double;
  out << "elem,gp,x,y,sxx,syy,sxy,W\n";
  for (std::size_t q = 0; q < state.gp_stress.size(); ++q) {
    out << q / kGp << ',' << q % kGp << ',' << format_double(state.gp_position[q].x()) << ','
        << format_double(state.gp_position[q].y()) << ',' << format_double(state.gp_stress[q][0]) << ','
        << format_double(state.gp_stress[q][1]) << ',' << format_double(state.gp_stress[q][2]) << ','
        << format_double(state.gp_energy_density[q]) << '\n';
  }
}

}  // namespace crackfield
