#include "flowcert/analysis.hpp"
#include "flowcert/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace flowcert;

namespace {

// arg 0: paths, arg 1: parallel
void BM_SimulateSde(benchmark::State& state) {
  const int d = 8;
  const auto f = log_spectrum_quadratic(d, 1e-2, 1.0);
  const Eigen::MatrixXd Sigma = 0.01 * Eigen::MatrixXd::Identity(d, d);
  FirstOrderSde sde;
  sde.h_t = Profile::power_shift(1, -0.5, 1);
  sde.averaging = Averaging::PolyakRuppert;
  const int paths = static_cast<int>(state.range(0));
  const bool parallel = state.range(1) != 0;
  for (auto _ : state) {
    auto rec = simulate_sde(sde, f, Sigma, Eigen::VectorXd::Ones(d), 0, 10, 1e-2, paths, 1, {}, parallel);
    benchmark::DoNotOptimize(rec.f_values.back());
  }
  state.SetItemsProcessed(state.iterations() * paths * 1000);
}
BENCHMARK(BM_SimulateSde)->ArgsProduct({{64, 512}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_RateSweep(benchmark::State& state) {
  const auto mus = log_grid(1e-3, 1.0, static_cast<int>(state.range(0)));
  const bool oscillator = state.range(1) != 0;
  for (auto _ : state) {
    auto rows = oscillator ? rate_sweep(DampedOscillator{}, mus, false) : rate_sweep(GradientFlow{}, mus, false);
    benchmark::DoNotOptimize(rows.back().tau_pep);
  }
}
BENCHMARK(BM_RateSweep)->ArgsProduct({{5, 20}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_CheckSuGrid(benchmark::State& state) {
  Certificate c;
  c.family.family = Family::Agf;
  c.family.coeffs["beta"] = Profile::reciprocal(3);
  c.cls = FunctionClass(0.0);
  c.ansatz = default_ansatz(Family::Agf);
  c.ansatz.a_terms[0] = Profile::power_shift(1, 2, 0);
  c.ansatz.quad.set(0, 0, Profile::constant(2));
  c.ansatz.quad.set(0, 1, Profile::power_shift(1, 1, 0));
  c.ansatz.quad.set(1, 1, Profile::power_shift(0.5, 2, 0));
  c.multiplier_profiles["lambda1"] = Profile::power_shift(2, 1, 0);
  c.multipliers["lambda2"] = 0.0;
  const auto grid = log_grid(1e-2, 1e3, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(check_certificate(c, grid).certified);
}
BENCHMARK(BM_CheckSuGrid)->Arg(400)->Arg(2401)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
