#include <benchmark/benchmark.h>

#include "slatebandit/expansion.h"
#include "slatebandit/mab.h"
#include "slatebandit/rng.h"

namespace slatebandit {
namespace {

ContextBank Bank(int candidates) {
  ContextBank bank("page");
  for (int i = 0; i < candidates; ++i) {
    const std::string id = "a" + std::to_string(i);
    bank.AddCandidate(id);
    bank.SetSurveyStats(id, ArmStats::FromCounts(i % 7, 10));
  }
  return bank;
}

void BM_SampleScore(benchmark::State& state) {
  Rng rng(1);
  const PosteriorCounts counts{30, 100};
  for (auto _ : state) benchmark::DoNotOptimize(SampleScore(counts, rng));
}
BENCHMARK(BM_SampleScore);

void BM_PreSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ContextBank bank = Bank(n);
  const std::vector<std::string> ids = bank.CandidateIds();
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(PreSample(bank, ids, 25, rng));
}
BENCHMARK(BM_PreSample)->Arg(100)->Arg(1000);

void BM_ProbBetter(benchmark::State& state) {
  const ArmStats cand = ArmStats::FromCounts(12, 15);
  const ArmStats null_item = ArmStats::FromCounts(40, 100);
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ProbBetter(cand, null_item, static_cast<int>(state.range(0)), rng));
  }
}
BENCHMARK(BM_ProbBetter)->Arg(10000)->Arg(100000);

}  // namespace
}  // namespace slatebandit

BENCHMARK_MAIN();
