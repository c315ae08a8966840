#include <benchmark/benchmark.h>

#include <cmath>

#include <Eigen/Dense>

#include "sahiqc/certify.hpp"
#include "sahiqc/delay_profile.hpp"
#include "sahiqc/events.hpp"
#include "sahiqc/multiplier.hpp"
#include "sahiqc/piecewise.hpp"
#include "sahiqc/rng.hpp"
#include "sahiqc/simulate.hpp"
#include "sahiqc/state_space.hpp"

namespace {

using namespace sahiqc;

StateSpace integrator() { return StateSpace::from_transfer({1.0}, {1.0, 0.0}); }
StateSpace lag() { return StateSpace::from_transfer({1.0}, {0.1, 1.0}); }

/// Deterministic stable system with n states: poles -1..-n, unit couplings.
StateSpace diagonal_chain(int n) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) A(i, i) = -(i + 1.0);
  return StateSpace(A, Eigen::MatrixXd::Ones(n, 1),
                    Eigen::MatrixXd::Ones(1, n) / n,
                    Eigen::MatrixXd::Zero(1, 1));
}

void BM_HinfNorm(benchmark::State& state) {
  const StateSpace sys = diagonal_chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hinf_norm(sys).norm);
}
BENCHMARK(BM_HinfNorm)->Arg(2)->Arg(5)->Arg(10);

void BM_DelayProfileBuild(benchmark::State& state) {
  const double horizon = static_cast<double>(state.range(0));
  const auto [tp, ts] = gen_admissible(bounds_from_h_delta(0.1, 0.5), horizon,
                                       GenMode::jittered_delay, 42);
  for (auto _ : state)
    benchmark::DoNotOptimize(delay_profile(tp, ts, horizon).max_reset());
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(ts.size()));
}
BENCHMARK(BM_DelayProfileBuild)->Arg(10)->Arg(100);

void BM_DeltaApply(benchmark::State& state) {
  const double horizon = static_cast<double>(state.range(0));
  const auto [tp, ts] = gen_admissible(bounds_from_h_delta(0.1, 0.5), horizon,
                                       GenMode::jittered_delay, 42);
  const DelayProfile profile = delay_profile(tp, ts, horizon);
  Rng rng(7);
  const PiecewiseSignal v =
      random_polynomial_signal(rng, horizon, 0.9 * horizon, 3, 64);
  for (auto _ : state)
    benchmark::DoNotOptimize(delta_apply(profile, v).segments());
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(ts.size()));
}
BENCHMARK(BM_DeltaApply)->Arg(10)->Arg(100);

void BM_FdiMarginStability(benchmark::State& state) {
  const StateSpace Gvw = assemble_G(integrator(), lag(), lag()).Gvw();
  const auto [beta, eta] = beta_eta(bounds_from_h_delta(1.5, 0.0));
  const Multiplier m(beta, eta, 1.0, 0.0);
  const SearchSpec spec;
  for (auto _ : state)
    benchmark::DoNotOptimize(fdi_margin_stability(Gvw, m, spec));
}
BENCHMARK(BM_FdiMarginStability);

void BM_CertifyStability(benchmark::State& state) {
  const StateSpace P = integrator(), F = lag();
  for (auto _ : state)
    benchmark::DoNotOptimize(certify_stability(P, F, 0.3, 0.5).margin);
}
BENCHMARK(BM_CertifyStability)->Unit(benchmark::kMillisecond);

void BM_CertifyPerformance(benchmark::State& state) {
  const StateSpace P = integrator(), F = lag();
  for (auto _ : state)
    benchmark::DoNotOptimize(certify_performance(P, F, F, 0.3, 0.5).gamma);
}
BENCHMARK(BM_CertifyPerformance)->Unit(benchmark::kMillisecond);

void BM_MaxH(benchmark::State& state) {
  const StateSpace P = integrator(), F = lag();
  for (auto _ : state) benchmark::DoNotOptimize(max_h(P, F, 0.5));
}
BENCHMARK(BM_MaxH)->Unit(benchmark::kMillisecond);

void BM_SimulateLoop(benchmark::State& state) {
  const double horizon = static_cast<double>(state.range(0));
  const StateSpace P = integrator(), F = lag();
  const auto [tp, ts] = gen_admissible(bounds_from_h_delta(0.25, 0.5),
                                       horizon, GenMode::jittered_delay, 11);
  const PiecewiseSignal d({0.0, 1.0, horizon}, {{1.0}, {0.0}});
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_loop(P, F, F, tp, ts, d).norm_z);
}
BENCHMARK(BM_SimulateLoop)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
