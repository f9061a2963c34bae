#include <benchmark/benchmark.h>

#include "slatebandit/linear.h"
#include "slatebandit/rng.h"

namespace slatebandit {
namespace {

SufficientStats Problem(int d, int n) {
  Rng rng(1);
  SufficientStats s(d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd phi(d);
    for (int j = 0; j < d; ++j) phi[j] = SampleStandardNormal(rng);
    s.Absorb(phi, SampleUniform(rng) * 2 - 1, i);
  }
  return s;
}

void BM_Absorb(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  SufficientStats s(d);
  Rng rng(2);
  Eigen::VectorXd phi(d);
  for (int j = 0; j < d; ++j) phi[j] = SampleStandardNormal(rng);
  std::int64_t ts = 0;
  for (auto _ : state) s.Absorb(phi, 1.0, ts++);
}
BENCHMARK(BM_Absorb)->Arg(16)->Arg(64)->Arg(256);

void BM_Fit(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const SufficientStats s = Problem(d, 4 * d);
  for (auto _ : state) benchmark::DoNotOptimize(Fit(s, 0.99));
}
BENCHMARK(BM_Fit)->Arg(16)->Arg(64)->Arg(256);

void BM_Bonus(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const BanditHead head = Fit(Problem(d, 4 * d), 0.99);
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(d);
  for (auto _ : state) benchmark::DoNotOptimize(head.Bonus(phi));
}
BENCHMARK(BM_Bonus)->Arg(16)->Arg(64)->Arg(256);

void BM_EwsSample(benchmark::State& state) {
  Rng rng(3);
  std::vector<ArmEstimate> arms;
  for (int i = 0; i < state.range(0); ++i) {
    arms.push_back({"a" + std::to_string(i), SampleUniform(rng), 1 + 100 * SampleUniform(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(EwsSample(arms, rng));
}
BENCHMARK(BM_EwsSample)->Arg(8)->Arg(64);

}  // namespace
}  // namespace slatebandit
