#include <algorithm>

#include <gtest/gtest.h>

#include "slatebandit/eval.h"
#include "slatebandit/rng.h"
#include "test_util.h"

namespace slatebandit {
namespace {

using testing::MakeEvent;

LoggedEvent Logged(const std::string& action, Survey survey, double propensity) {
  LoggedEvent e = MakeEvent("x", {action, "_"}, 0, survey);
  e.propensity = propensity;
  return e;
}

TargetPolicy Echo() {
  return [](const LoggedEvent& e) {
    return std::map<std::string, double>{{e.ClickedAction()->id, *e.propensity}};
  };
}

std::vector<LoggedEvent> RandomLog(Rng& rng, int n) {
  std::vector<LoggedEvent> events;
  for (int i = 0; i < n; ++i) {
    const std::string a = "a" + std::to_string(rng() % 4);
    LoggedEvent e = Logged(a, static_cast<Survey>(rng() % 3), 0.05 + 0.95 * SampleUniform(rng));
    if (rng() % 5 == 0) e.feedback.click.reset();
    events.push_back(e);
  }
  return events;
}

TargetPolicy RandomTarget() {
  return [](const LoggedEvent& e) {
    const std::string& id = e.ClickedAction()->id;
    std::map<std::string, double> p;
    if (id != "a3") p[id] = 0.1 + 0.2 * (id[1] - '0');
    return p;
  };
}

TEST(SnipsTest, TargetEqualToLoggingGivesEmpiricalMeanExactly) {
  Rng rng(1);
  const std::vector<LoggedEvent> events = RandomLog(rng, 1000);
  const OpeResult r = Snips(events, Echo(), {});
  double sum = 0.0;
  std::size_t n = 0;
  for (const LoggedEvent& e : events) {
    if (e.ClickedAction() == nullptr) continue;
    if (const auto reward = RewardOf(e.feedback, {})) {
      sum += *reward;
      ++n;
    }
  }
  EXPECT_EQ(r.snips_estimate, sum / static_cast<double>(n));
  EXPECT_EQ(r.snips_estimate, r.logging_policy_mean);
  EXPECT_EQ(r.matched_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.effective_sample_size, static_cast<double>(n));
}

TEST(SnipsTest, ZeroWeightExclusion) {
  std::vector<LoggedEvent> events;
  for (int i = 0; i < 10; ++i) events.push_back(Logged("good", Survey::kYes, 0.5));
  for (int i = 0; i < 10; ++i) events.push_back(Logged("bad", Survey::kNo, 0.5));
  const TargetPolicy target = [](const LoggedEvent&) {
    return std::map<std::string, double>{{"good", 1.0}};
  };
  const OpeResult r = Snips(events, target, {});
  EXPECT_EQ(r.snips_estimate, 1.0);
  EXPECT_EQ(r.logging_policy_mean, 0.0);
  EXPECT_EQ(r.matched_fraction, 0.5);
  EXPECT_EQ(r.matched_events, 10u);
}

TEST(SnipsTest, TwoArmGroundTruth) {
  // Arm rewards are +-1 with P(yes) = 0.8 and 0.3: true means 0.6 and -0.4.
  Rng rng(2);
  std::vector<LoggedEvent> events;
  for (int i = 0; i < 10000; ++i) {
    const bool pick_a = SampleUniform(rng) < 0.5;
    const double p_yes = pick_a ? 0.8 : 0.3;
    events.push_back(Logged(pick_a ? "a" : "b",
                            SampleUniform(rng) < p_yes ? Survey::kYes : Survey::kNo, 0.5));
  }
  const TargetPolicy always_a = [](const LoggedEvent&) {
    return std::map<std::string, double>{{"a", 1.0}, {"b", 0.0}};
  };
  const OpeResult r = Snips(events, always_a, {});
  EXPECT_NEAR(r.snips_estimate, 0.6, 0.05);
  EXPECT_NEAR(r.logging_policy_mean, 0.1, 0.05);
  EXPECT_TRUE(PromotionGate(r, {}).pass);
}

TEST(SnipsTest, DuplicationInvariance) {
  Rng rng(3);
  const std::vector<LoggedEvent> events = RandomLog(rng, 300);
  std::vector<LoggedEvent> doubled = events;
  doubled.insert(doubled.end(), events.begin(), events.end());
  const OpeResult a = Snips(events, RandomTarget(), {});
  const OpeResult b = Snips(doubled, RandomTarget(), {});
  EXPECT_NEAR(a.snips_estimate, b.snips_estimate, 1e-12);
  EXPECT_NEAR(a.matched_fraction, b.matched_fraction, 1e-12);
  EXPECT_NEAR(2.0 * a.effective_sample_size, b.effective_sample_size, 1e-9);
}

TEST(SnipsTest, ConvexCombinationProperty) {
  Rng rng(4);
  const RewardSpec spec{RewardMode::kSurveyAndEscalation, -0.7};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LoggedEvent> events = RandomLog(rng, 50);
    for (LoggedEvent& e : events) e.feedback.escalation = rng() % 3 == 0;
    double lo = 1e9;
    double hi = -1e9;
    const TargetPolicy target = RandomTarget();
    for (const LoggedEvent& e : events) {
      if (e.ClickedAction() == nullptr) continue;
      const auto r = RewardOf(e.feedback, spec);
      if (!r || target(e).empty()) continue;
      lo = std::min(lo, *r);
      hi = std::max(hi, *r);
    }
    if (lo > hi) continue;
    const OpeResult res = Snips(events, target, spec);
    EXPECT_GE(res.snips_estimate, lo - 1e-12);
    EXPECT_LE(res.snips_estimate, hi + 1e-12);
    EXPECT_GE(res.matched_fraction, 0.0);
    EXPECT_LE(res.matched_fraction, 1.0);
    EXPECT_LE(res.effective_sample_size, static_cast<double>(res.matched_events) + 1e-9);
  }
}

TEST(SnipsTest, PartitionedMergeIsExact) {
  Rng rng(5);
  const std::vector<LoggedEvent> events = RandomLog(rng, 400);
  const TargetPolicy target = RandomTarget();
  SnipsAccumulator parts[3];
  for (std::size_t i = 0; i < events.size(); ++i) {
    const LoggedEvent& e = events[i];
    if (e.ClickedAction() == nullptr) continue;
    const auto r = RewardOf(e.feedback, {});
    if (!r) continue;
    const auto pi = target(e);
    const auto it = pi.find(e.ClickedAction()->id);
    parts[i % 3].Add((it == pi.end() ? 0.0 : it->second) / *e.propensity, *r);
  }
  SnipsAccumulator merged;
  for (const auto& p : parts) merged.Merge(p);
  const OpeResult whole = Snips(events, target, {});
  const OpeResult split = merged.Finish();
  EXPECT_NEAR(whole.snips_estimate, split.snips_estimate, 1e-12);
  EXPECT_NEAR(whole.variance_estimate, split.variance_estimate, 1e-12);
  EXPECT_NEAR(whole.effective_sample_size, split.effective_sample_size, 1e-9);
  EXPECT_EQ(whole.matched_events, split.matched_events);
}

TEST(SnipsTest, VarianceMatchesDirectFormula) {
  Rng rng(6);
  const std::vector<LoggedEvent> events = RandomLog(rng, 200);
  const TargetPolicy target = RandomTarget();
  const OpeResult r = Snips(events, target, {});
  double s = 0.0;
  double num = 0.0;
  for (const LoggedEvent& e : events) {
    if (e.ClickedAction() == nullptr) continue;
    const auto reward = RewardOf(e.feedback, {});
    if (!reward) continue;
    const auto pi = target(e);
    const auto it = pi.find(e.ClickedAction()->id);
    const double rho = (it == pi.end() ? 0.0 : it->second) / *e.propensity;
    s += rho;
    num += rho * rho * (*reward - r.snips_estimate) * (*reward - r.snips_estimate);
  }
  EXPECT_NEAR(r.variance_estimate, num / (s * s), 1e-12);
}

TEST(SnipsTest, MissingPropensityListsEvents) {
  std::vector<LoggedEvent> events = {Logged("a", Survey::kYes, 0.5), Logged("a", Survey::kYes, 0.5),
                                     Logged("a", Survey::kSkipped, 0.5),
                                     Logged("a", Survey::kNo, 0.5)};
  events[1].propensity.reset();
  events[2].propensity.reset();  // unusable: skipped survey
  events[3].propensity.reset();
  try {
    Snips(events, Echo(), {});
    FAIL() << "expected MissingPropensityError";
  } catch (const MissingPropensityError& e) {
    EXPECT_EQ(e.event_ids, (std::vector<std::size_t>{1, 3}));
  }
}

TEST(SnipsTest, NoUsableOrMatchedEventsIsNoData) {
  const std::vector<LoggedEvent> skipped = {Logged("a", Survey::kSkipped, 0.5)};
  EXPECT_THROW(Snips(skipped, Echo(), {}), NoDataError);
  const std::vector<LoggedEvent> one = {Logged("a", Survey::kYes, 0.5)};
  const TargetPolicy never = [](const LoggedEvent&) { return std::map<std::string, double>{}; };
  EXPECT_THROW(Snips(one, never, {}), NoDataError);
}

TEST(PromotionGateTest, Examples) {
  OpeResult r;
  r.snips_estimate = 0.4;
  r.logging_policy_mean = 0.3;
  r.variance_estimate = 0.01;
  r.effective_sample_size = 500;
  EXPECT_TRUE(PromotionGate(r, {}).pass);
  EXPECT_TRUE(PromotionGate(r, {}).reasons.empty());

  r.effective_sample_size = 50;
  const GateVerdict low_ess = PromotionGate(r, {});
  EXPECT_FALSE(low_ess.pass);
  EXPECT_EQ(low_ess.reasons, (std::vector<std::string>{"insufficient effective sample size"}));

  r.effective_sample_size = 500;
  r.snips_estimate = 0.2;
  EXPECT_FALSE(PromotionGate(r, {}).pass);

  r.variance_estimate = 1.0;
  r.effective_sample_size = 1;
  EXPECT_EQ(PromotionGate(r, {}).reasons.size(), 3u);
}

std::vector<LoggedEvent> Surveys(const std::vector<Survey>& s) {
  std::vector<LoggedEvent> events;
  for (Survey x : s) events.push_back(MakeEvent("x", {"a", "_"}, 0, x));
  return events;
}

TEST(PrrHatTest, Examples) {
  EXPECT_NEAR(*PrrHat(Surveys({Survey::kYes, Survey::kNo, Survey::kSkipped, Survey::kYes})),
              2.0 / 3.0, 1e-15);
  EXPECT_FALSE(PrrHat(Surveys({Survey::kSkipped, Survey::kSkipped})).has_value());
  EXPECT_EQ(*PrrHat(Surveys({Survey::kYes, Survey::kYes})), 1.0);
}

TEST(PrrHatTest, RangeAndSkipInvariance) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Survey> s;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) s.push_back(static_cast<Survey>(rng() % 3));
    auto events = Surveys(s);
    const auto before = PrrHat(events);
    events.push_back(MakeEvent("x", {"a", "_"}, 0, Survey::kSkipped));
    EXPECT_EQ(PrrHat(events), before);
    if (before) {
      EXPECT_GE(*before, 0.0);
      EXPECT_LE(*before, 1.0);
    }
  }
}

TEST(EasHatTest, Examples) {
  std::vector<LoggedEvent> events = Surveys({Survey::kNo, Survey::kNo, Survey::kNo, Survey::kNo});
  EXPECT_EQ(EasHat(events), 0.0);
  events[0].feedback.escalation = true;
  EXPECT_EQ(EasHat(events), 0.25);
  for (auto& e : events) e.feedback.escalation = true;
  EXPECT_EQ(EasHat(events), 1.0);
  EXPECT_THROW(EasHat(std::vector<LoggedEvent>{}), NoDataError);
}

}  // namespace
}  // namespace slatebandit
