#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "fedcs/channel.hpp"
#include "fedcs/dataset.hpp"
#include "fedcs/learning.hpp"
#include "fedcs/protocol.hpp"
#include "fedcs/random.hpp"
#include "fedcs/resources.hpp"
#include "fedcs/selection.hpp"

using namespace fedcs;

namespace {

selection::CandidateSet random_candidates(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, "bench");
  selection::CandidateSet out;
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = rng.uniform(0.5, 8.64);
    out.push_back({ClientId{static_cast<int>(i) + 1}, Seconds(rng.uniform(5.0, 500.0)),
                   Seconds(146.4 / theta), MegabitsPerSecond(theta)});
  }
  return out;
}

void BM_ElapsedTheta(benchmark::State& state) {
  const auto cands = random_candidates(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(selection::elapsed_theta(cands));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ElapsedTheta)->RangeMultiplier(4)->Range(8, 1024)->Complexity();

void BM_GreedySelect(benchmark::State& state) {
  const auto cands = random_candidates(static_cast<std::size_t>(state.range(0)), 2);
  TimeBudget budget;
  budget.t_round = Seconds(1800.0);
  for (auto _ : state) benchmark::DoNotOptimize(selection::greedy_select(cands, budget));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GreedySelect)->RangeMultiplier(2)->Range(25, 400)->Complexity();

void BM_OracleSelect(benchmark::State& state) {
  const auto cands = random_candidates(static_cast<std::size_t>(state.range(0)), 3);
  TimeBudget budget;
  budget.t_round = Seconds(400.0);
  for (auto _ : state) benchmark::DoNotOptimize(selection::oracle_select(cands, budget));
}
BENCHMARK(BM_OracleSelect)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

void BM_FedCsRound(benchmark::State& state) {
  RngStream rng(4, "profiles");
  const auto profiles =
      resources::generate_profiles(1000, channel::CellConfig{}, ResourceRanges{}, rng);
  const learning::SurrogateTrainer trainer{learning::SurrogateCurve{}};
  protocol::ProtocolConfig config;
  config.fluct.r = 0.1;
  protocol::SimulationState sim(4, trainer);
  for (auto _ : state) benchmark::DoNotOptimize(protocol::run_round_fedcs(sim, profiles, config, trainer));
}
BENCHMARK(BM_FedCsRound);

void BM_LocalUpdate(benchmark::State& state) {
  RngStream data_rng(5, "dataset");
  const auto n_features = static_cast<std::size_t>(state.range(0));
  const auto data = learning::make_gaussian_blobs(1000, n_features, 10, 0.15, data_rng);
  const learning::ModelShape shape{n_features, 0, 10};
  RngStream init(5, "init");
  const auto model = learning::init_model(shape, init);
  std::vector<std::size_t> shard(500);
  for (std::size_t i = 0; i < shard.size(); ++i) shard[i] = i;
  const learning::TrainerHyper hyper;
  RngStream rng(5, "training");
  for (auto _ : state) {
    benchmark::DoNotOptimize(learning::local_update(model, shape, data, shard, hyper, rng));
  }
}
BENCHMARK(BM_LocalUpdate)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
