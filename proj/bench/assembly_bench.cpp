// Compares the OpenMP element-loop kernels against the serial reference.
#include <benchmark/benchmark.h>

#include "iga/assembly.hpp"
#include "iga/cases.hpp"

using namespace iga;

namespace {

GeometryMap benchmark_patch(int p, Index n_el) {
  return refine_to(make_quarter_annulus(1.0, 2.0), {p, p}, {n_el, n_el});
}

PatchCoefficients benchmark_coeffs() {
  PatchCoefficients c;
  c.alpha = [](const Vector& x) { return 1.0 + x[0]; };
  c.f = [](const Vector& x) { return std::sin(x[0]) * x[1]; };
  return c;
}

const std::vector<BoundaryKind> kTags(4, BoundaryKind::Dirichlet);

void assembly_serial(benchmark::State& state) {
  const GeometryMap geo = benchmark_patch(static_cast<int>(state.range(0)), state.range(1));
  const PatchCoefficients coeffs = benchmark_coeffs();
  for (auto _ : state) {
    auto sys = assemble_patch_system_serial(geo, coeffs, kTags);
    benchmark::DoNotOptimize(sys.load.sum());
  }
}

void assembly_openmp(benchmark::State& state) {
  const GeometryMap geo = benchmark_patch(static_cast<int>(state.range(0)), state.range(1));
  const PatchCoefficients coeffs = benchmark_coeffs();
  for (auto _ : state) {
    auto sys = assemble_patch_system(geo, coeffs, kTags);
    benchmark::DoNotOptimize(sys.load.sum());
  }
}

void broken_error_openmp(benchmark::State& state) {
  CaseOptions opt;
  opt.p = static_cast<int>(state.range(0));
  opt.nbar = state.range(1);
  const CaseInstance inst = build_case("t1_balanced", opt);
  std::vector<Vector> u;
  for (const auto& geo : inst.mp.patches) u.push_back(Vector::Zero(geo.space.total_basis()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(broken_error(inst.mp, u, inst.exact));
  }
}

}  // namespace

BENCHMARK(assembly_serial)->Args({2, 16})->Args({2, 32})->Args({3, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(assembly_openmp)->Args({2, 16})->Args({2, 32})->Args({3, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(broken_error_openmp)->Args({2, 16})->Args({2, 32})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
