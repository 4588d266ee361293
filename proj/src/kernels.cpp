#include "crackfield/kernels.hpp"

#include <cmath>

#include <Eigen/LU>

namespace crackfield::kernels {
namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)
constexpr double kXi[4] = {-kGauss, kGauss, kGauss, -kGauss};
constexpr double kEta[4] = {-kGauss, -kGauss, kGauss, kGauss};
constexpr double kNodeXi[4] = {-1.0, 1.0, 1.0, -1.0};
constexpr double kNodeEta[4] = {-1.0, -1.0, 1.0, 1.0};

Eigen::Matrix<double, 3, 8> strain_matrix(const ShapeAt& s) {
  Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    B(0, 2 * a) = s.dN_dx(a, 0);
    B(1, 2 * a + 1) = s.dN_dx(a, 1);
    B(2, 2 * a) = s.dN_dx(a, 1);
    B(2, 2 * a + 1) = s.dN_dx(a, 0);
  }
  return B;
}

}  // namespace

ElementNodes element_nodes(const SeamMesh& mesh, std::size_t element) {
  const auto& conn = mesh.elements[element];
  return {mesh.nodes[static_cast<std::size_t>(conn[0])], mesh.nodes[static_cast<std::size_t>(conn[1])],
          mesh.nodes[static_cast<std::size_t>(conn[2])], mesh.nodes[static_cast<std::size_t>(conn[3])]};
}

ShapeAt shape_at(const ElementNodes& X, int gauss_point) {
  const double xi = kXi[gauss_point];
  const double eta = kEta[gauss_point];
  ShapeAt s;
  Eigen::Matrix<double, 4, 2> dN_dxi;
  for (int a = 0; a < 4; ++a) {
    s.N[a] = 0.25 * (1.0 + kNodeXi[a] * xi) * (1.0 + kNodeEta[a] * eta);
    dN_dxi(a, 0) = 0.25 * kNodeXi[a] * (1.0 + kNodeEta[a] * eta);
    dN_dxi(a, 1) = 0.25 * kNodeEta[a] * (1.0 + kNodeXi[a] * xi);
  }
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();  // J(i, j) = dx_j / dxi_i
  s.x.setZero();
  for (int a = 0; a < 4; ++a) {
    J(0, 0) += dN_dxi(a, 0) * X[a].x();
    J(0, 1) += dN_dxi(a, 0) * X[a].y();
    J(1, 0) += dN_dxi(a, 1) * X[a].x();
    J(1, 1) += dN_dxi(a, 1) * X[a].y();
    s.x += s.N[a] * X[a];
  }
  const double det = J.determinant();
  const Eigen::Matrix2d J_inv = J.inverse();
  s.dN_dx = dN_dxi * J_inv.transpose();
  s.weight = det;  // Gauss weights are 1
  return s;
}

Matrix8 element_stiffness(const ElementNodes& X, std::span<const Matrix3, kGaussPoints> D) {
  Matrix8 K = Matrix8::Zero();
  for (int g = 0; g < kGaussPoints; ++g) {
    const ShapeAt s = shape_at(X, g);
    const Eigen::Matrix<double, 3, 8> B = strain_matrix(s);
    K.noalias() += B.transpose() * D[static_cast<std::size_t>(g)] * B * s.weight;
  }
  return K;
}

std::vector<Matrix8> element_stiffness_all(const SeamMesh& mesh, std::span<const Matrix3> D,
                                           ExecPolicy policy) {
  const std::size_t ne = mesh.element_count();
  const bool uniform = D.size() == 1;
  std::vector<Matrix8> out(ne);
  for_each_index(policy, static_cast<std::ptrdiff_t>(ne), [&](std::ptrdiff_t k) {
    const auto e = static_cast<std::size_t>(k);
    std::array<Matrix3, kGaussPoints> De;
    for (int g = 0; g < kGaussPoints; ++g) De[static_cast<std::size_t>(g)] = uniform ? D[0] : D[e * kGaussPoints + static_cast<std::size_t>(g)];
    out[e] = element_stiffness(element_nodes(mesh, e), De);
  });
  return out;
}

GaussKinematics gauss_kinematics(const SeamMesh& mesh, std::span<const Eigen::Vector2d> nodal_u,
                                 ExecPolicy policy) {
  const std::size_t ne = mesh.element_count();
  GaussKinematics out;
  out.grad_u.resize(ne * kGaussPoints);
  out.strain.resize(ne * kGaussPoints);
  out.position.resize(ne * kGaussPoints);
  out.weight.resize(ne * kGaussPoints);
  for_each_index(policy, static_cast<std::ptrdiff_t>(ne), [&](std::ptrdiff_t k) {
    const auto e = static_cast<std::size_t>(k);
    const ElementNodes X = element_nodes(mesh, e);
    const auto& conn = mesh.elements[e];
    for (int g = 0; g < kGaussPoints; ++g) {
      const ShapeAt s = shape_at(X, g);
      Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
      for (int a = 0; a < 4; ++a) {
        const Eigen::Vector2d& u = nodal_u[static_cast<std::size_t>(conn[static_cast<std::size_t>(a)])];
        G(0, 0) += u.x() * s.dN_dx(a, 0);
        G(0, 1) += u.x() * s.dN_dx(a, 1);
        G(1, 0) += u.y() * s.dN_dx(a, 0);
        G(1, 1) += u.y() * s.dN_dx(a, 1);
      }
      const std::size_t q = e * kGaussPoints + static_cast<std::size_t>(g);
      out.grad_u[q] = G;
      out.strain[q] = Vector3(G(0, 0), G(1, 1), G(0, 1) + G(1, 0));
      out.position[q] = s.x;
      out.weight[q] = s.weight;
    }
  });
  return out;
}

}  // namespace crackfield::kernels
