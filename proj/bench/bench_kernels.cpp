#include <benchmark/benchmark.h>

#include "naklab/adversary.hpp"
#include "naklab/engine.hpp"
#include "naklab/indicators.hpp"
#include <map>

#include "naklab/runner.hpp"

using namespace naklab;

namespace {

const RoundTallies& tallies(std::int64_t tau) {
  static std::map<std::int64_t, RoundTallies> cache;
  auto it = cache.find(tau);
  if (it == cache.end()) {
    SimParams p;
    p.tau = tau;
    Rng rng(1);
    it = cache.emplace(tau, sample_tallies(p, 1 << 22, rng)).first;
  }
  return it->second;
}

void BM_ErSerial(benchmark::State& s) {
  const auto& t = tallies(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(detect_er(t.honest, s.range(0)));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(t.size()));
}

void BM_ErParallel(benchmark::State& s) {
  const auto& t = tallies(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(detect_er_parallel(t.honest, s.range(0)));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(t.size()));
}

void BM_UerSerial(benchmark::State& s) {
  const auto& t = tallies(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(detect_uer(t.honest, s.range(0)));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(t.size()));
}

void BM_UerParallel(benchmark::State& s) {
  const auto& t = tallies(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(detect_uer_parallel(t.honest, s.range(0)));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(t.size()));
}

Height one_trial(std::int64_t, std::uint64_t seed) {
  SimParams p;
  p.beta = 0.3;
  p.mining_rate = 1.0;
  p.tau = 2;
  p.horizon = 5000;
  p.seed = seed;
  TieRusherStrategy s;
  EngineOptions o;
  o.tiebreak = TieBreak::AdversaryPrefer;
  return run(p, s, o).longest.back();
}

void BM_TrialsSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(run_trials_serial<Height>(32, 7, one_trial));
}

void BM_TrialsParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(run_trials<Height>(32, 7, 0, one_trial));
}

}  // namespace

BENCHMARK(BM_ErSerial)->Arg(1)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErParallel)->Arg(1)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UerSerial)->Arg(1)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UerParallel)->Arg(1)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
