#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "slatebandit/linear.h"
#include "slatebandit/rng.h"
#include "slatebandit/types.h"

namespace slatebandit {
namespace {

Eigen::VectorXd RandomVector(int d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = SampleStandardNormal(rng);
  return v;
}

Eigen::VectorXd Unit(int d, int i) { return Eigen::VectorXd::Unit(d, i); }

// Well-conditioned problem: many more samples than dimensions.
SufficientStats RandomProblem(int d, int n, Rng& rng, Eigen::VectorXd* w_star = nullptr,
                              double noise = 0.1) {
  SufficientStats stats(d);
  const Eigen::VectorXd w = RandomVector(d, rng);
  if (w_star != nullptr) *w_star = w;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd phi = RandomVector(d, rng);
    stats.Absorb(phi, w.dot(phi) + noise * SampleStandardNormal(rng), i);
  }
  return stats;
}

TEST(SufficientStatsTest, OneHotAbsorb) {
  SufficientStats s(4);
  s.Absorb(Unit(4, 0), 2.0, 0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(4);
  f[0] = 2.0;
  EXPECT_EQ(s.f(), f);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 4);
  B(0, 0) = 1.0;
  EXPECT_EQ(s.B(), B);
  EXPECT_EQ(s.n(), 1u);
}

TEST(SufficientStatsTest, AbsorbThenEvictReturnsToZero) {
  Rng rng(1);
  SufficientStats s(6, 100);
  s.Absorb(RandomVector(6, rng), 0.7, 0);
  s.AdvanceClock(100);
  EXPECT_EQ(s.n(), 0u);
  EXPECT_LE(s.f().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(s.B().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SufficientStatsTest, IncrementalEqualsBatchRecomputation) {
  Rng rng(2);
  const int d = 7;
  SufficientStats s(d, 500);
  for (int i = 0; i < 100; ++i) s.Absorb(RandomVector(d, rng), SampleStandardNormal(rng), i * 10);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
  for (const auto& sample : s.buffer()) {
    f += sample.reward * sample.phi;
    B += sample.phi * sample.phi.transpose();
  }
  EXPECT_EQ(s.n(), 50u);
  EXPECT_LE((s.f() - f).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((s.B() - B).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SufficientStatsTest, SymmetricPositiveSemidefinite) {
  Rng rng(3);
  SufficientStats s(5, 50);
  for (int i = 0; i < 300; ++i) s.Absorb(RandomVector(5, rng), 1.0, i);
  EXPECT_LE((s.B() - s.B().transpose()).cwiseAbs().maxCoeff(), 0.0);
  for (int probe = 0; probe < 100; ++probe) {
    const Eigen::VectorXd x = RandomVector(5, rng);
    EXPECT_GE(x.dot(s.B() * x), -1e-9 * x.squaredNorm());
  }
}

TEST(FitTest, MatchesDenseNormalEquationSolve) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 16);
    const SufficientStats s = RandomProblem(d, 20 * d + 10, rng);
    const BanditHead head = Fit(s, 1.0);
    ASSERT_EQ(head.rank(), d);
    const Eigen::VectorXd oracle = s.B().fullPivLu().solve(s.f());
    EXPECT_LE((head.w_hat() - oracle).cwiseAbs().maxCoeff(), 1e-8) << "d=" << d;
  }
}

TEST(FitTest, ResidualAndFactorInvariants) {
  Rng rng(5);
  const SufficientStats s = RandomProblem(8, 400, rng);
  const BanditHead head = Fit(s, 1.0);
  const Eigen::VectorXd residual = s.B() * head.w_hat() - s.f();
  EXPECT_LE(residual.norm(), 1e-6 * s.f().norm());
  const MatrixXld L = head.l_inv().inverse();
  const MatrixXld projected =
      head.basis().transpose() * s.B().cast<long double>() * head.basis();
  EXPECT_LE(static_cast<double>((L * L.transpose() - projected).cwiseAbs().maxCoeff()), 1e-8);
  EXPECT_EQ(head.ridge(), 0.0);
}

TEST(FitTest, RankOneIsMinimumNorm) {
  Eigen::VectorXd phi(3);
  phi << 1.0, 2.0, -2.0;
  SufficientStats s(3);
  s.Absorb(phi, 4.5, 0);
  const BanditHead head = Fit(s, 0.99);
  EXPECT_EQ(head.rank(), 1);
  const Eigen::VectorXd expected = (4.5 / phi.squaredNorm()) * phi;
  EXPECT_LE((head.w_hat() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(head.Predict(phi), 4.5, 1e-12);
}

TEST(FitTest, DominantEigenvalueTruncation) {
  SufficientStats s(2);
  for (int i = 0; i < 1000; ++i) s.Absorb(Unit(2, 0), 1.0, i);
  s.Absorb(Unit(2, 1), 1.0, 1000);
  EXPECT_EQ(Fit(s, 0.99).rank(), 1);
  EXPECT_EQ(Fit(s, 1.0).rank(), 2);
}

TEST(FitTest, RetainedComponentsArithmetic) {
  const long double ev[] = {1.0L, 1000.0L};
  EXPECT_EQ(RetainedComponents(ev, 0.99), 1);
  const long double flat[] = {1.0L, 1.0L, 1.0L, 1.0L};
  EXPECT_EQ(RetainedComponents(flat, 0.99), 4);
  EXPECT_EQ(RetainedComponents(flat, 0.5), 2);
  const long double zero[] = {0.0L, 0.0L};
  EXPECT_EQ(RetainedComponents(zero, 0.99), 0);
}

TEST(FitTest, ZeroDataIsNoDataError) {
  SufficientStats s(3);
  EXPECT_THROW(Fit(s), NoDataError);
  s.Absorb(Eigen::VectorXd::Zero(3), 1.0, 0);
  EXPECT_THROW(Fit(s), NoDataError);
  EXPECT_THROW(Fit(s, 0.0), ValidationError);
}

TEST(FitTest, RegressionConsistency) {
  Rng rng(6);
  Eigen::VectorXd w_star;
  const SufficientStats s = RandomProblem(8, 500, rng, &w_star, 0.01);
  const BanditHead head = Fit(s, 1.0);
  EXPECT_LE((head.w_hat() - w_star).norm(), 0.05);
}

TEST(BonusTest, OneHotBonusIsTrialCount) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 32);
    std::vector<int> counts(d);
    SufficientStats s(d);
    std::int64_t ts = 0;
    for (int a = 0; a < d; ++a) {
      counts[a] = 1 + static_cast<int>(rng() % 200);
      for (int c = 0; c < counts[a]; ++c) s.Absorb(Unit(d, a), SampleUniform(rng), ts++);
    }
    const BanditHead head = Fit(s, 1.0);
    ASSERT_EQ(head.rank(), d);
    for (int a = 0; a < d; ++a) {
      EXPECT_EQ(head.Bonus(Unit(d, a)), static_cast<double>(counts[a])) << "d=" << d;
    }
  }
}

TEST(BonusTest, IsotropicCase) {
  const int d = 4;
  SufficientStats s(d);
  for (int rep = 0; rep < 5; ++rep) {
    for (int i = 0; i < d; ++i) s.Absorb(Unit(d, i), 1.0, rep * d + i);
  }
  const BanditHead head = Fit(s, 1.0);
  Eigen::VectorXd phi(d);
  phi << 1.0, -2.0, 0.5, 3.0;
  EXPECT_NEAR(head.Bonus(phi), 5.0 / phi.squaredNorm(), 1e-12);
}

TEST(BonusTest, JointRescalingLeavesOneHotBonusUnchanged) {
  const int d = 4;
  const int counts[] = {3, 7, 1, 12};
  const double c = 3.5;
  SufficientStats base(d);
  SufficientStats scaled(d);
  std::int64_t ts = 0;
  for (int a = 0; a < d; ++a) {
    for (int k = 0; k < counts[a]; ++k) {
      base.Absorb(Unit(d, a), 1.0, ts);
      scaled.Absorb(c * Unit(d, a), c, ts++);
    }
  }
  const BanditHead h1 = Fit(base, 1.0);
  const BanditHead h2 = Fit(scaled, 1.0);
  for (int a = 0; a < d; ++a) {
    const Eigen::VectorXd phi = Unit(d, a);
    const double oracle = 1.0 / phi.dot(base.B().fullPivLu().solve(phi));
    EXPECT_NEAR(h1.Bonus(phi), oracle, 1e-9);
    EXPECT_NEAR(h2.Bonus(c * phi), h1.Bonus(phi), 1e-9);
    EXPECT_NEAR(h2.Bonus(phi), h1.Bonus(phi) * c * c, 1e-9);
  }
}

TEST(BonusTest, OutsideRetainedSubspaceIsZero) {
  SufficientStats s(3);
  s.Absorb(Unit(3, 0), 1.0, 0);
  const BanditHead head = Fit(s, 0.99);
  EXPECT_EQ(head.Bonus(Unit(3, 2)), 0.0);
  EXPECT_EQ(head.Predict(Eigen::VectorXd::Zero(3)), 0.0);
}

TEST(HeadTest, JsonRoundTripPreservesPredictions) {
  Rng rng(8);
  const SufficientStats s = RandomProblem(6, 100, rng);
  const BanditHead head = Fit(s);
  const BanditHead back = BanditHead::FromJson(head.ToJson());
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd phi = RandomVector(6, rng);
    EXPECT_EQ(back.Predict(phi), head.Predict(phi));
    EXPECT_EQ(back.Bonus(phi), head.Bonus(phi));
  }
  EXPECT_EQ(back.ToJson().dump(), head.ToJson().dump());
}

TEST(EwsTest, HandComputedNormalization) {
  const std::vector<std::vector<double>> bonus = {{4, 4}, {1, 2, 3}, {10, 0.5, 0, 7}};
  const std::vector<std::vector<double>> gaps = {{0, 0.5}, {0, 0.3, 0.9}, {0.2, 0, 1.5, 0.01}};
  for (std::size_t c = 0; c < bonus.size(); ++c) {
    const auto p = EwsProbabilities(bonus[c], gaps[c]);
    std::vector<double> w;
    for (std::size_t i = 0; i < bonus[c].size(); ++i) {
      w.push_back(std::exp(-2.0 * bonus[c][i] * gaps[c][i] * gaps[c][i]));
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(p[i], w[i] / total, 1e-12);
  }
  const auto two = EwsProbabilities(bonus[0], gaps[0]);
  EXPECT_NEAR(two[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(two[0], 0.8808, 1e-4);
}

TEST(EwsTest, ProbabilityVectorProperties) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<double> b(n);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
      b[i] = 50.0 * SampleUniform(rng);
      g[i] = i == 0 ? 0.0 : SampleUniform(rng);
    }
    const auto p = EwsProbabilities(b, g);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pb(n);
    std::vector<double> pg(n);
    for (int i = 0; i < n; ++i) {
      pb[i] = b[perm[i]];
      pg[i] = g[perm[i]];
    }
    const auto q = EwsProbabilities(pb, pg);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(q[i], p[perm[i]], 1e-12);
  }
}

TEST(EwsTest, MoreTrialsNeverIncreaseRelativeProbability) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> b = {5.0, 20.0 * SampleUniform(rng), 20.0 * SampleUniform(rng)};
    const std::vector<double> g = {0.0, SampleUniform(rng), SampleUniform(rng)};
    const auto before = EwsProbabilities(b, g);
    b[1] += 10.0 * SampleUniform(rng);
    const auto after = EwsProbabilities(b, g);
    EXPECT_LE(after[1] / after[0], before[1] / before[0] + 1e-15);
  }
}

TEST(EwsTest, SingleCandidateAndBestWeight) {
  Rng rng(11);
  const std::vector<ArmEstimate> one = {{"a", 0.3, 10.0}};
  const EwsDecision d = EwsSample(one, rng);
  EXPECT_EQ(d.chosen, 0u);
  EXPECT_EQ(d.probabilities[0], 1.0);

  const std::vector<ArmEstimate> arms = {{"a", 0.1, 3.0}, {"b", 0.7, 1.0}, {"c", 0.4, 2.0}};
  const EwsDecision e = EwsSample(arms, rng);
  EXPECT_EQ(e.best, 1u);
  EXPECT_EQ(e.gaps[1], 0.0);
  for (std::size_t i = 0; i < arms.size(); ++i) EXPECT_LE(e.probabilities[i], e.probabilities[1]);
}

TEST(EwsTest, SampledFrequenciesMatchProbabilities) {
  const std::vector<ArmEstimate> arms = {{"a", 0.5, 4.0}, {"b", 0.0, 4.0}, {"c", 0.3, 9.0}};
  Rng rng(12);
  std::vector<int> hits(arms.size(), 0);
  std::vector<double> p;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const EwsDecision d = EwsSample(arms, rng);
    p = d.probabilities;
    ++hits[d.chosen];
  }
  for (std::size_t i = 0; i < arms.size(); ++i) {
    EXPECT_NEAR(static_cast<double>(hits[i]) / n, p[i], 0.01);
  }
}

TEST(EwsTest, RankingIsPermutationWithFirstDrawDistribution) {
  const std::vector<ArmEstimate> arms = {{"a", 0.5, 4.0}, {"b", 0.0, 4.0}, {"c", 0.3, 9.0}};
  Rng rng(13);
  std::vector<double> first;
  auto order = EwsRanking(arms, rng, &first);
  ASSERT_EQ(order.size(), 3u);
  std::sort(order.begin(), order.end());
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2}));
  Rng rng2(13);
  EXPECT_EQ(first, EwsSample(arms, rng2).probabilities);
}

TEST(EwsTest, DeterministicGivenSeed) {
  const std::vector<ArmEstimate> arms = {{"a", 0.5, 1.0}, {"b", 0.4, 1.0}, {"c", 0.3, 1.0}};
  Rng r1(5);
  Rng r2(5);
  EXPECT_EQ(EwsRanking(arms, r1, nullptr), EwsRanking(arms, r2, nullptr));
}

TEST(ThompsonTest, VanishingPriorScaleIsGreedy) {
  Rng rng(14);
  const SufficientStats s = RandomProblem(4, 200, rng);
  const BanditHead head = Fit(s, 1.0);
  std::vector<LinearCandidate> cands;
  for (int i = 0; i < 5; ++i) cands.push_back({"c" + std::to_string(i), RandomVector(4, rng)});
  std::size_t greedy = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (head.Predict(cands[i].phi) > head.Predict(cands[greedy].phi)) greedy = i;
  }
  int agree = 0;
  for (int i = 0; i < 1000; ++i) agree += ThompsonSample(head, cands, 1e-12, rng) == greedy;
  EXPECT_GE(agree, 990);
  EXPECT_THROW(ThompsonSample(head, cands, 0.0, rng), ValidationError);
}

TEST(ThompsonTest, IdenticalCandidatesTieToSmallerId) {
  Rng rng(15);
  const SufficientStats s = RandomProblem(3, 50, rng);
  const BanditHead head = Fit(s, 1.0);
  const Eigen::VectorXd phi = RandomVector(3, rng);
  const std::vector<LinearCandidate> cands = {{"b", phi}, {"a", phi}};
  for (int i = 0; i < 200; ++i) EXPECT_EQ(ThompsonSample(head, cands, 1.0, rng), 1u);
}

TEST(ThompsonTest, MirroredArmsSplitEvenly) {
  SufficientStats s(2);
  for (int i = 0; i < 20; ++i) {
    s.Absorb(Unit(2, 0), i % 2 ? 1.0 : -1.0, 2 * i);
    s.Absorb(Unit(2, 1), i % 2 ? 1.0 : -1.0, 2 * i + 1);
  }
  const BanditHead head = Fit(s, 1.0);
  const std::vector<LinearCandidate> cands = {{"a", Unit(2, 0)}, {"b", Unit(2, 1)}};
  Rng rng(16);
  int a = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) a += ThompsonSample(head, cands, 1.0, rng) == 0;
  EXPECT_NEAR(static_cast<double>(a) / n, 0.5, 0.02);
}

TEST(ThompsonTest, DrawCovarianceMatchesInverseB) {
  Rng rng(17);
  const SufficientStats s = RandomProblem(3, 30, rng);
  const BanditHead head = Fit(s, 1.0);
  const Eigen::VectorXd phi = RandomVector(3, rng);
  const std::vector<LinearCandidate> cand = {{"a", phi}};
  const int n = 40000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = ThompsonScores(head, cand, 2.0, rng)[0];
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double oracle_var = 2.0 * phi.dot(s.B().fullPivLu().solve(phi));
  EXPECT_NEAR(mean, head.Predict(phi), 5.0 * std::sqrt(oracle_var / n));
  EXPECT_NEAR(var, oracle_var, 0.05 * oracle_var);
}

}  // namespace
}  // namespace slatebandit
