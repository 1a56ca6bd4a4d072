#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "pdprox/experiment.hpp"
#include "pdprox/projections.hpp"
#include "pdprox/regularizers.hpp"
#include "pdprox/solvers.hpp"

using namespace pdprox;

namespace {

Vector gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

void BM_ProxL1(benchmark::State& state) {
  const auto v = gaussian(static_cast<std::size_t>(state.range(0)), 1);
  const auto r = Regularizer::l1();
  for (auto _ : state) benchmark::DoNotOptimize(reg_prox(r, v, 0.1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProxL1)->Range(64, 1 << 16);

void BM_ProxLInf(benchmark::State& state) {
  const auto v = gaussian(static_cast<std::size_t>(state.range(0)), 2);
  const auto r = Regularizer::linf();
  for (auto _ : state) benchmark::DoNotOptimize(reg_prox(r, v, 0.5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProxLInf)->Range(64, 1 << 16);

void BM_ProxGroupLasso(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const auto v = gaussian(d, 3);
  const auto r = make_regularizer("group-lasso", d, 8);
  for (auto _ : state) benchmark::DoNotOptimize(reg_prox(r, v, 0.3));
}
BENCHMARK(BM_ProxGroupLasso)->Range(64, 1 << 14);

void BM_ProxExclusiveLasso(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const auto v = gaussian(d, 4);
  const auto r = make_regularizer("exclusive-lasso", d, 8);
  for (auto _ : state) benchmark::DoNotOptimize(reg_prox(r, v, 0.3));
}
BENCHMARK(BM_ProxExclusiveLasso)->Range(64, 1 << 12);

void BM_ProxTraceNorm(benchmark::State& state) {
  const std::size_t s = static_cast<std::size_t>(state.range(0));
  const auto v = gaussian(s * s, 5);
  const auto r = Regularizer::trace_norm(s, s);
  for (auto _ : state) benchmark::DoNotOptimize(reg_prox(r, v, 1.0));
}
BENCHMARK(BM_ProxTraceNorm)->RangeMultiplier(2)->Range(8, 64);

void BM_ProjectBoxLinear(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto t = gaussian(n, 6);
  const Vector w(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(project_box_linear(t, 1.0, w, static_cast<double>(n) / 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProjectBoxLinear)->Range(64, 1 << 16);

void BM_ProjectEpsBlocks(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  DualDomain d;
  d.block = BoxLinearBlock{1.0, {1.0, 1.0}, 1.0};
  d.blocks = n;
  const auto t = gaussian(2 * n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(project_dual_domain(d, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProjectEpsBlocks)->Range(64, 1 << 14);

SaddleProblem hinge_problem(std::size_t n, std::size_t d, std::optional<double> cap = {}) {
  auto ds = std::make_shared<const Dataset>(gen_synthetic(SynthKind::Classification, n, d, 0.1, 8));
  return make_problem(LossSpec::hinge(), ds, Regularizer::squared_l2_half(), 1e-3, cap);
}

void BM_PartialGradients(benchmark::State& state) {
  const auto p = hinge_problem(static_cast<std::size_t>(state.range(0)), 50);
  const Vector w = gaussian(50, 9);
  const Vector a(p.dual_dim(), 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(partial_grad_alpha(p.form, w));
    benchmark::DoNotOptimize(partial_grad_w(p.form, a));
  }
}
BENCHMARK(BM_PartialGradients)->Range(256, 1 << 14);

// Per-iteration cost with tracing off.
void BM_SolverIteration(benchmark::State& state) {
  const auto p = hinge_problem(2000, 50, state.range(1) ? std::optional<double>(100.0) : std::nullopt);
  SolverConfig cfg;
  cfg.variant = static_cast<Variant>(state.range(0));
  cfg.max_iters = 100;
  cfg.trace_stride = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, cfg));
  state.SetItemsProcessed(state.iterations() * 100);
  state.SetLabel(std::string(to_string(cfg.variant)) + (state.range(1) ? " capped" : ""));
}
BENCHMARK(BM_SolverIteration)->ArgsProduct({{0, 1, 2}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_PegasosIteration(benchmark::State& state) {
  auto ds = gen_synthetic(SynthKind::Classification, 2000, 50, 0.1, 8);
  for (auto _ : state) benchmark::DoNotOptimize(solve_pegasos(ds, 1e-3, 100, 0));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_PegasosIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
