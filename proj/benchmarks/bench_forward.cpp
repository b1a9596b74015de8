#include <benchmark/benchmark.h>

#include "torsion/forward.hpp"
#include "torsion/grid.hpp"
#include "torsion/plasticity.hpp"

namespace {

torsion::GridSpec unit_grid(int n) {
  torsion::GridSpec g;
  g.nx = n;
  g.ny = n;
  return g;
}

const torsion::MaterialParams kPlastic{0.3, 0.02, 42.3};
const torsion::MaterialParams kElastic{1.0, 0.02, 42.3};

void BM_forward_elastic(benchmark::State& state) {
  const auto g = unit_grid(static_cast<int>(state.range(0)));
  const auto fn = torsion::power_hardening(kElastic);
  for (auto _ : state) {
    auto res = torsion::solve_forward(g, fn, 1.0);
    benchmark::DoNotOptimize(res.u_star.v.data());
  }
}
BENCHMARK(BM_forward_elastic)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_forward_plastic(benchmark::State& state) {
  const auto g = unit_grid(static_cast<int>(state.range(0)));
  const auto fn = torsion::power_hardening(kPlastic);
  for (auto _ : state) {
    auto res = torsion::solve_forward(g, fn, 1.0);
    benchmark::DoNotOptimize(res.u_star.v.data());
  }
}
BENCHMARK(BM_forward_plastic)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_operator_apply(benchmark::State& state) {
  const auto g = unit_grid(static_cast<int>(state.range(0)));
  const auto fn = torsion::power_hardening(kPlastic);
  const auto res = torsion::solve_forward(g, fn, 1.0);
  torsion::ScalarField g_node = torsion::gradient_sq(res.u_star);
  for (double& s : g_node.v) s = fn(s);
  const torsion::FaceCoeffs fc = torsion::half_point_coeffs(g_node);
  const auto rhs = torsion::make_field(g, [](double, double) { return 2.0; });
  const auto ls = torsion::assemble(fc, rhs);
  std::vector<double> x(static_cast<std::size_t>(ls.size()), 1.0);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    ls.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_operator_apply)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_gradient_sq(benchmark::State& state) {
  const auto g = unit_grid(static_cast<int>(state.range(0)));
  const auto u = torsion::make_field(
      g, [](double x, double y) { return (x - x * x) * (y - y * y); });
  for (auto _ : state) {
    auto gsq = torsion::gradient_sq(u);
    benchmark::DoNotOptimize(gsq.v.data());
  }
}
BENCHMARK(BM_gradient_sq)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_torque(benchmark::State& state) {
  const auto g = unit_grid(static_cast<int>(state.range(0)));
  const auto u = torsion::make_field(
      g, [](double x, double y) { return (x - x * x) * (y - y * y); });
  for (auto _ : state) {
    benchmark::DoNotOptimize(torsion::torque(u));
  }
}
BENCHMARK(BM_torque)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
