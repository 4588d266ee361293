// Serial reference path vs OpenMP path for the element kernels and a full analysis.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include "crackfield/analysis.hpp"
#include "crackfield/kernels.hpp"
#include "crackfield/studies.hpp"
#include "crackfield/synthfield.hpp"

using namespace crackfield;

namespace {

SyntheticSpec spec_of(int nodes) {
  return SyntheticSpec::centred(3e6, 1e6, 5e6, nodes, nodes, 2e-6 / (nodes - 1),
                                Material::isotropic(210e9, 0.3, PlaneState::strain));
}

SeamMesh mesh_of(int nodes) {
  const auto spec = spec_of(nodes);
  const auto crack = synthetic_crack(spec);
  return build_seam_mesh(apply_mask(generate_williams_field(spec), *crack.mask), crack);
}

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(1) ? ExecPolicy::parallel : ExecPolicy::serial;
}

void BM_ElementStiffness(benchmark::State& state) {
  const auto mesh = mesh_of(static_cast<int>(state.range(0)));
  const Eigen::Matrix3d D = plane_stiffness(Material::isotropic(210e9, 0.3, PlaneState::strain));
  for (auto _ : state) {
    auto K = kernels::element_stiffness_all(mesh, std::span<const Eigen::Matrix3d>(&D, 1), policy_of(state));
    benchmark::DoNotOptimize(K.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh.element_count()));
}

void BM_GaussKinematics(benchmark::State& state) {
  const auto mesh = mesh_of(static_cast<int>(state.range(0)));
  const auto s = solve_elastic(mesh, Material::isotropic(210e9, 0.3, PlaneState::strain));
  for (auto _ : state) {
    auto g = kernels::gauss_kinematics(mesh, s.nodal_u, policy_of(state));
    benchmark::DoNotOptimize(g.strain.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh.element_count()));
}

void BM_FullAnalysis(benchmark::State& state) {
  const auto spec = spec_of(static_cast<int>(state.range(0)));
  const auto field = generate_williams_field(spec);
  const auto crack = synthetic_crack(spec);
  AnalysisOptions o;
  o.solver.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_analysis(field, crack, spec.material, o).plateau.J.mean);
}

}  // namespace

BENCHMARK(BM_ElementStiffness)->ArgNames({"nodes", "omp"})->ArgsProduct({{51, 101, 201}, {0, 1}});
BENCHMARK(BM_GaussKinematics)->ArgNames({"nodes", "omp"})->ArgsProduct({{51, 101, 201}, {0, 1}});
BENCHMARK(BM_FullAnalysis)->ArgNames({"nodes", "omp"})->ArgsProduct({{51, 101}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
