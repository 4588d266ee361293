#pragma once

#include <gtest/gtest.h>

#include <functional>
#include <sstream>
#include <string>

#include "crackfield/analysis.hpp"
#include "crackfield/synthfield.hpp"

namespace crackfield::test {

inline constexpr double kMPa = 1e6;

/// nx x ny lattice with u = f(x, y).
inline DisplacementField lattice(int nx, int ny, double h, const std::function<Vec2(const Vec2&)>& f,
                                 Vec2 lower = Vec2::Zero()) {
  DisplacementField d = DisplacementField::zeros(nx, ny, h, h, lower);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 u = f(d.position(i, j));
      d.ux[d.index(i, j)] = u.x();
      d.uy[d.index(i, j)] = u.y();
    }
  return d;
}

inline std::string lattice_csv(int nx, int ny, double h, bool six_columns,
                               const std::function<std::string(int, int)>& row_suffix) {
  std::ostringstream s;
  s << (six_columns ? "X,Y,Z,Ux,Uy,Uz\n" : "X,Y,Ux,Uy\n");
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) s << i * h << "," << j * h << "," << row_suffix(i, j) << "\n";
  return s.str();
}

/// 51 x 51 nodes at 0.04 um, K = (3, 1, 5) MPa sqrt(m), E = 210 GPa, nu = 0.3, plane strain.
inline SyntheticSpec validation_spec(double K_I = 3.0, double K_II = 1.0, double K_III = 5.0) {
  return SyntheticSpec::centred(K_I * kMPa, K_II * kMPa, K_III * kMPa, 51, 51, 4e-8,
                                Material::isotropic(210e9, 0.3, PlaneState::strain));
}

inline ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::ConfigError;
}

inline DisplacementField negated(DisplacementField d) {
  for (auto* c : {&d.ux, &d.uy, &d.uz})
    for (double& v : *c) v = -v;
  return d;
}

}  // namespace crackfield::test
