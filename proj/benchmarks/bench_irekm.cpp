#include <benchmark/benchmark.h>

#include <vector>

#include "torsion/irekm.hpp"
#include "torsion/rng.hpp"

namespace {

const torsion::PriorSpec kPrior{};

// Synthetic ensemble and predictions with the shapes used in the
// inversions: 200 members, 4 observation angles.
struct Fixture {
  torsion::Ensemble ens;
  torsion::Predictions w;
  std::vector<double> d;
  std::vector<std::vector<double>> d_perturbed;
  torsion::KalmanStats stats;

  Fixture(int n_members, int m) {
    ens = torsion::init_ensemble(kPrior, n_members, 7);
    w.resize(n_members, std::vector<double>(m));
    d_perturbed = w;
    for (int j = 0; j < n_members; ++j) {
      for (int i = 0; i < m; ++i) {
        w[j][i] = torsion::uniform01(11, torsion::Role::EnsembleNoise, j, i);
        d_perturbed[j][i] =
            torsion::uniform01(13, torsion::Role::EnsembleNoise, j, i);
      }
    }
    d.resize(m);
    for (int i = 0; i < m; ++i) d[i] = 0.5 + 0.1 * i;
    stats = torsion::ensemble_stats(ens, w);
  }
};

void BM_ensemble_stats(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    auto stats = torsion::ensemble_stats(f.ens, f.w);
    benchmark::DoNotOptimize(stats.c_ww.a.data());
  }
}
BENCHMARK(BM_ensemble_stats)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_update_ensemble(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), 4);
  const auto box = torsion::clamp_box(kPrior);
  for (auto _ : state) {
    torsion::Ensemble ens = f.ens;
    torsion::update_ensemble(ens, f.w, f.stats, f.d_perturbed, 1.0, 1e-4, box);
    benchmark::DoNotOptimize(ens.members.data());
  }
}
BENCHMARK(BM_update_ensemble)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_select_gamma(benchmark::State& state) {
  Fixture f(200, 4);
  for (auto _ : state) {
    auto choice =
        torsion::select_gamma(f.stats.c_ww, f.d, f.stats.w_mean, 0.1, 0.7, 1.0);
    benchmark::DoNotOptimize(choice.gamma);
  }
}
BENCHMARK(BM_select_gamma)->Unit(benchmark::kMicrosecond);

void BM_init_ensemble(benchmark::State& state) {
  for (auto _ : state) {
    auto ens = torsion::init_ensemble(kPrior, 200, 7);
    benchmark::DoNotOptimize(ens.members.data());
  }
}
BENCHMARK(BM_init_ensemble)->Unit(benchmark::kMicrosecond);

}  // namespace
