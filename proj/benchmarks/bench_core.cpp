#include <benchmark/benchmark.h>

#include <vector>

#include "ogpsa/linalg.hpp"
#include "ogpsa/optimizer.hpp"
#include "ogpsa/presets.hpp"
#include "ogpsa/rng.hpp"
#include "ogpsa/subspace.hpp"
#include "ogpsa/tasks.hpp"

namespace {

using namespace ogpsa;

std::vector<linalg::ParamVector> candidates(std::size_t d, std::size_t m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<linalg::ParamVector> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(random_normal(d, rng));
  return out;
}

void BM_Dot(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto v = candidates(d, 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::dot(v[0], v[1]));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d));
}
BENCHMARK(BM_Dot)->RangeMultiplier(10)->Range(100, 100000);

void BM_GramSchmidt(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const auto c = candidates(d, m, 2);
  const double delta = linalg::relative_delta(c);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::gram_schmidt(c, delta));
}
BENCHMARK(BM_GramSchmidt)->ArgsProduct({{1000, 10000}, {2, 8}});

void BM_ProjectComplement(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const auto c = candidates(d, m + 1, 3);
  const auto basis = linalg::gram_schmidt(std::span(c).first(m), 1e-8);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::project_complement(c.back(), basis));
}
BENCHMARK(BM_ProjectComplement)->ArgsProduct({{1000, 10000}, {2, 8}});

void BM_Gradient(benchmark::State& state) {
  const auto kind = static_cast<tasks::FamilyKind>(state.range(0));
  const auto fam = tasks::make_family(presets::family_spec(kind, 0));
  const auto& task = fam.safety.front();
  Rng rng = make_rng(4);
  const auto batch = task.sample(32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(models::gradient(task.spec, task.kind, fam.theta0, batch));
  state.SetLabel(std::string(models::to_string(task.spec.kind)));
}
BENCHMARK(BM_Gradient)
    ->Arg(static_cast<int>(tasks::FamilyKind::regression_mlp))
    ->Arg(static_cast<int>(tasks::FamilyKind::policy_sft_dpo));

void BM_OgpsaStep(benchmark::State& state) {
  const auto fam = tasks::make_family(presets::family_spec(tasks::FamilyKind::regression_mlp, 0));
  const auto& task = fam.safety.front();
  Rng rng = make_rng(5);
  const auto sub = subspace::estimate_subspace(fam.theta0, fam.capability, 0, rng, std::nullopt, 0.0, 0);
  const auto batch = task.sample(0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(optimizer::ogpsa_step(fam.theta0, task, batch, sub, 0.02));
}
BENCHMARK(BM_OgpsaStep);

void BM_SubspaceRefresh(benchmark::State& state) {
  const auto fam = tasks::make_family(presets::family_spec(tasks::FamilyKind::policy_sft_dpo, 0));
  Rng rng = make_rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(subspace::estimate_subspace(fam.theta0, fam.capability, 32, rng, std::nullopt, 0.0, 0));
  }
}
BENCHMARK(BM_SubspaceRefresh);

}  // namespace

BENCHMARK_MAIN();
