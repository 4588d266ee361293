#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crackfield/mesh.hpp"

/// Element-level data-parallel loops. Every kernel runs either through the
/// plain serial loop (the reference path used by the tests) or through an
/// OpenMP worksharing loop. Per-element results are written to disjoint slots
/// and any reduction is summed afterwards in element order, so both policies
/// return bit-identical results.
namespace crackfield::kernels {

enum class ExecPolicy { serial, parallel };

using Matrix8 = Eigen::Matrix<double, 8, 8>;
using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

constexpr int kGaussPoints = 4;

template <typename Body>
void for_each_index(ExecPolicy policy, std::ptrdiff_t count, Body&& body) {
  if (policy == ExecPolicy::serial) {
    for (std::ptrdiff_t k = 0; k < count; ++k) body(k);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < count; ++k) body(k);
}

/// Bilinear shape functions at one 2x2 Gauss point.
struct ShapeAt {
  std::array<double, 4> N;
  Eigen::Matrix<double, 4, 2> dN_dx;  // row a: (dN_a/dx, dN_a/dy)
  double weight;                      // det(J) * Gauss weight
  Eigen::Vector2d x;
};

using ElementNodes = std::array<Eigen::Vector2d, 4>;

ElementNodes element_nodes(const SeamMesh& mesh, std::size_t element);
ShapeAt shape_at(const ElementNodes& X, int gauss_point);

/// K_e = sum_g B^T D_g B w_g for one element. DOF order (u0x, u0y, u1x, ...).
Matrix8 element_stiffness(const ElementNodes& X, std::span<const Matrix3, kGaussPoints> D);

/// D is either one matrix for the whole mesh or one per Gauss point
/// (element-major, 4 per element).
std::vector<Matrix8> element_stiffness_all(const SeamMesh& mesh, std::span<const Matrix3> D,
                                           ExecPolicy policy);

/// Displacement gradient, engineering strain, position and weight at every
/// Gauss point (element-major).
struct GaussKinematics {
  std::vector<Eigen::Matrix2d> grad_u;  // du_i/dx_j
  std::vector<Vector3> strain;          // (exx, eyy, gxy)
  std::vector<Eigen::Vector2d> position;
  std::vector<double> weight;
};

GaussKinematics gauss_kinematics(const SeamMesh& mesh, std::span<const Eigen::Vector2d> nodal_u,
                                 ExecPolicy policy);

/// Sum over `elements` of a per-element value, evaluated under `policy` and
/// accumulated in the order given.
template <typename Eval>
double ordered_sum(std::span<const int> elements, ExecPolicy policy, Eval&& eval) {
  std::vector<double> parts(elements.size());
  for_each_index(policy, static_cast<std::ptrdiff_t>(elements.size()),
                 [&](std::ptrdiff_t k) { parts[static_cast<std::size_t>(k)] = eval(elements[static_cast<std::size_t>(k)]); });
  double total = 0.0;
  for (double p : parts) total += p;
  return total;
}

}  // namespace crackfield::kernels
