// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "cli.h"
#include "slatebandit/eval.h"
#include "slatebandit/expansion.h"
#include "slatebandit/io.h"
#include "slatebandit/linear.h"
#include "slatebandit/mab.h"
#include "slatebandit/network.h"
#include "slatebandit/policy.h"
#include "slatebandit/sim.h"
#include "test_util.h"

namespace slatebandit {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

template <typename... Args>
std::string Fmt(const char* format, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const char* Ok(bool ok) { return ok ? "ok" : "broken"; }

Outcome PosteriorMath() {
  const std::pair<double, double> grid[] = {{0, 0}, {3, 10}, {1e6, 1e6}, {0, 50}, {25, 50}};
  Rng rng(101);
  const int n = 100000;
  Outcome o;
  double worst = 0.0;
  for (const auto& [alpha, trials] : grid) {
    const double a = alpha + 1.0;
    const double b = trials - alpha + 1.0;
    const double mean = a / (a + b);
    const double se = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)) / n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += SampleScore(PosteriorCounts{alpha, trials}, rng);
    const double z = std::abs(sum / n - mean) / se;
    worst = std::max(worst, z);
    if (z > 3.0) o.pass = false;
  }
  o.detail = Fmt("max |mean error| = %.2f standard errors", worst);
  return o;
}

Outcome OneHotCount() {
  Rng rng(102);
  Outcome o;
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 32);
    SufficientStats s(d);
    std::vector<int> counts(d);
    std::int64_t ts = 0;
    for (int a = 0; a < d; ++a) {
      counts[a] = 1 + static_cast<int>(rng() % 500);
      for (int c = 0; c < counts[a]; ++c) {
        s.Absorb(Eigen::VectorXd::Unit(d, a), SampleUniform(rng) * 2 - 1, ts++);
      }
    }
    const BanditHead head = Fit(s, 1.0);
    for (int a = 0; a < d; ++a) {
      ++checked;
      if (head.Bonus(Eigen::VectorXd::Unit(d, a)) != static_cast<double>(counts[a])) o.pass = false;
    }
  }
  o.detail = Fmt("%d one-hot bonuses compared for exact equality", checked);
  return o;
}

Outcome LeastSquares() {
  Rng rng(103);
  Outcome o;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 16);
    SufficientStats s(d);
    Eigen::VectorXd w(d);
    for (int i = 0; i < d; ++i) w[i] = SampleStandardNormal(rng);
    for (int i = 0; i < 20 * d + 10; ++i) {
      Eigen::VectorXd phi(d);
      for (int j = 0; j < d; ++j) phi[j] = SampleStandardNormal(rng);
      s.Absorb(phi, w.dot(phi) + 0.1 * SampleStandardNormal(rng), i);
    }
    const Eigen::VectorXd oracle = s.B().fullPivLu().solve(s.f());
    worst = std::max(worst, (Fit(s, 1.0).w_hat() - oracle).cwiseAbs().maxCoeff());
  }
  SufficientStats dominated(2);
  for (int i = 0; i < 1000; ++i) dominated.Absorb(Eigen::VectorXd::Unit(2, 0), 1.0, i);
  dominated.Absorb(Eigen::VectorXd::Unit(2, 1), 1.0, 1000);
  const int rank = Fit(dominated, 0.99).rank();
  o.pass = worst <= 1e-8 && rank == 1;
  o.detail = Fmt("max-abs deviation %.3g; rank kept at 0.99 in the 1000:1 case = %d", worst, rank);
  return o;
}

Outcome GradientCheck() {
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const double h = 1e-5;
  Rng rng(104);
  double worst = 0.0;
  Outcome o;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sizes = {1 + static_cast<int>(rng() % 6)};
    const int depth = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < depth; ++k) sizes.push_back(1 + static_cast<int>(rng() % 8));
    const Mlp net = Mlp::Initialize(sizes, 500 + trial);
    const int m = 1 + static_cast<int>(rng() % 8);
    LMatrix X(m, sizes[0]);
    LVector y(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < sizes[0]; ++j) X(i, j) = SampleUniform(rng) * 2 - 1;
      y[i] = SampleUniform(rng) * 2 - 1;
    }
    std::vector<long double> grad;
    SquaredErrorLoss<long double>(net, X, y, &grad);
    const std::vector<double> params = net.Flatten();
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> p = params;
      Mlp probe = net;
      p[k] = params[k] + h;
      probe.Unflatten(p);
      const long double up = SquaredErrorLoss<long double>(probe, X, y, nullptr);
      p[k] = params[k] - h;
      probe.Unflatten(p);
      const long double down = SquaredErrorLoss<long double>(probe, X, y, nullptr);
      const long double step = static_cast<long double>(params[k] + h) -
                               static_cast<long double>(params[k] - h);
      const long double numeric = (up - down) / step;
      const long double diff = std::fabs(numeric - grad[k]);
      const long double scale = std::max(std::fabs(numeric), std::fabs(grad[k]));
      if (diff <= 1e-10L) continue;  // both vanish
      const double rel = static_cast<double>(diff / scale);
      worst = std::max(worst, rel);
      if (rel > 1e-4) o.pass = false;
    }
  }
  o.detail = Fmt("max relative error %.3g over 20 networks", worst);
  return o;
}

Outcome EwsCorrectness() {
  const std::vector<std::vector<double>> bonus = {{4, 4}, {1, 2, 3}, {10, 0.5, 0, 7}};
  const std::vector<std::vector<double>> gaps = {{0, 0.5}, {0, 0.3, 0.9}, {0.2, 0, 1.5, 0.01}};
  double worst_p = 0.0;
  for (std::size_t c = 0; c < bonus.size(); ++c) {
    const auto p = EwsProbabilities(bonus[c], gaps[c]);
    std::vector<double> w;
    for (std::size_t i = 0; i < bonus[c].size(); ++i) {
      w.push_back(std::exp(-2.0 * bonus[c][i] * gaps[c][i] * gaps[c][i]));
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      worst_p = std::max(worst_p, std::abs(p[i] - w[i] / total));
    }
  }
  const std::vector<ArmEstimate> arms = {{"a", 0.5, 4.0}, {"b", 0.0, 4.0}, {"c", 0.3, 9.0}};
  Rng rng(105);
  std::vector<int> hits(arms.size(), 0);
  std::vector<double> p;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const EwsDecision d = EwsSample(arms, rng);
    p = d.probabilities;
    ++hits[d.chosen];
  }
  double worst_f = 0.0;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    worst_f = std::max(worst_f, std::abs(static_cast<double>(hits[i]) / n - p[i]));
  }
  return {worst_p <= 1e-12 && worst_f <= 0.01,
          Fmt("max probability error %.3g; max frequency error %.4f", worst_p, worst_f)};
}

Outcome SnipsConsistency() {
  Rng rng(106);
  std::vector<LoggedEvent> events;
  for (int i = 0; i < 10000; ++i) {
    const bool pick_a = SampleUniform(rng) < 0.5;
    LoggedEvent e = testing::MakeEvent("x", {pick_a ? "a" : "b", "_"}, 0);
    e.feedback.survey = SampleUniform(rng) < (pick_a ? 0.8 : 0.3) ? Survey::kYes : Survey::kNo;
    e.propensity = 0.5;
    events.push_back(e);
  }
  const TargetPolicy echo = [](const LoggedEvent& e) {
    return std::map<std::string, double>{{e.ClickedAction()->id, *e.propensity}};
  };
  const OpeResult self = Snips(events, echo, {});
  const TargetPolicy always_a = [](const LoggedEvent&) {
    return std::map<std::string, double>{{"a", 1.0}};
  };
  const double estimate = Snips(events, always_a, {}).snips_estimate;
  // Truth for always-a: 0.8 * 1 + 0.2 * (-1).
  const bool exact = self.snips_estimate == self.logging_policy_mean;
  return {exact && std::abs(estimate - 0.6) <= 0.05,
          Fmt("pi = mu exact: %s; always-best estimate %.4f vs truth 0.6", exact ? "yes" : "no",
              estimate)};
}

// PRR-hat over the final 10% of serving events.
double FinalPrr(const RunResult& r, const std::string& tag) {
  std::vector<LoggedEvent> serving;
  for (const LoggedEvent& e : r.events) {
    if (e.policy_tag == tag) serving.push_back(e);
  }
  const std::size_t start = serving.size() * 9 / 10;
  return PrrHat(std::span<const LoggedEvent>(serving).subspan(start)).value_or(0.0);
}

Outcome DiscreteLearning() {
  DiscreteWorldOptions opts;
  opts.seed = 1;
  opts.hidden_per_context = 4;
  opts.free_type_rate = 0.5;
  const WorldSpec world = MakeDiscreteWorld(opts);
  Schedule schedule;
  schedule.horizon = 50000;
  std::map<std::string, std::vector<std::string>> pools;
  for (const ContextSpec& c : world.contexts) pools[c.id] = c.candidates;

  const auto t0 = std::chrono::steady_clock::now();
  MabPolicy mab(MabPolicyConfig{}, world.actions, pools);
  const double mab_prr = FinalPrr(Run(world, mab, schedule, 11), "mab");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  UniformPolicy uniform{SlatePolicyConfig{}};
  const double uniform_prr = FinalPrr(Run(world, uniform, schedule, 11), "uniform");

  // Expected PRR of always serving [best, null], arrival-weighted.
  double yes = 0.0;
  double answered = 0.0;
  for (const ContextSpec& c : world.contexts) {
    Slate s;
    s.items = {world.actions.at(BestActionByYes(world, c.id)), NullAction()};
    s.scores = {1.0, 0.0};
    const SurveyMass m = ExpectedSurvey(world, c.id, s);
    yes += c.weight * m.yes;
    answered += c.weight * m.answered;
  }
  const double oracle = yes / answered;
  const bool pass = oracle - mab_prr <= 0.05 && mab_prr - uniform_prr >= 0.15 && secs < 120;
  return {pass, Fmt("MAB %.4f, oracle %.4f, uniform %.4f, MAB run %.1f s", mab_prr, oracle,
                    uniform_prr, secs)};
}

Outcome RichLearning() {
  const WorldSpec world = MakeLinearWorld({});
  Schedule schedule;
  schedule.horizon = 20000;
  NlbPolicyConfig cfg;
  cfg.slate.mode = SlateMode::kDisambiguation;
  cfg.slate.max_length = 4;
  cfg.slate.allow_direct_trigger = true;
  const LinearTruth& truth = *world.linear;
  NlbPolicy nlb(cfg, truth.d, [&truth](const Context& c, const Action& a) {
    return truth.features.at(c.id).at(a.id);
  });
  const RunResult r = Run(world, nlb, schedule, 5);
  const double first = r.timeline.windows.front().regret_per_event();
  const double last = r.timeline.windows.back().regret_per_event();
  return {last < 0.2 * first,
          Fmt("regret per event: first window %.4f, final window %.6f (ratio %.2g)", first, last,
              first > 0 ? last / first : 0.0)};
}

Outcome SafeExploration() {
  DiscreteWorldOptions opts;
  opts.seed = 1;
  opts.hidden_per_context = 4;
  opts.free_type_rate = 0.5;
  opts.baseline_size = 6;
  const WorldSpec world = MakeDiscreteWorld(opts);
  Schedule schedule;
  schedule.horizon = 20000;
  schedule.metrics_period = 4 * 60 * 60;
  SlatePolicyConfig slate;
  slate.safe_exploration = true;
  for (const ContextSpec& c : world.contexts) slate.baseline[c.id] = world.BaselineSlate(c.id);
  std::map<std::string, std::vector<std::string>> pools;
  for (const ContextSpec& c : world.contexts) pools[c.id] = c.candidates;
  MabPolicyConfig cfg;
  cfg.slate = slate;
  MabPolicy gated(cfg, world.actions, pools);
  const RunResult g = Run(world, gated, schedule, 3);
  auto baseline = MakeBaselinePolicy(slate);
  const RunResult b = Run(world, *baseline, schedule, 3);

  double min_margin = 0.0;
  double worst_gap = 0.0;
  std::size_t worst_window = 0;
  for (std::size_t i = 0; i < g.timeline.windows.size(); ++i) {
    const WindowMetrics& gw = g.timeline.windows[i];
    const WindowMetrics& bw = b.timeline.windows[i];
    if (gw.min_gate_margin) min_margin = std::min(min_margin, *gw.min_gate_margin);
    if (gw.prr_hat && bw.prr_hat && *gw.prr_hat - *bw.prr_hat < worst_gap) {
      worst_gap = *gw.prr_hat - *bw.prr_hat;
      worst_window = i;
    }
  }
  const bool margin_ok = min_margin >= 0.0;
  const bool prr_ok = worst_gap >= -0.02;
  return {margin_ok && prr_ok,
          Fmt("min gate margin %.3g (%s); worst windowed PRR gap vs baseline %.4f at window %zu",
              min_margin, margin_ok ? "ok" : "violated", worst_gap, worst_window)};
}

Outcome ExpansionCorrectness() {
  const std::pair<double, double> grid[] = {{0, 0},  {1, 3},   {2, 10},  {5, 10},  {9, 10},
                                            {0, 12}, {12, 30}, {25, 40}, {3, 4.5}, {60, 100}};
  Rng rng(110);
  double worst = 0.0;
  for (const auto& [ca, cn] : grid) {
    for (const auto& [na, nn] : grid) {
      const ArmStats cand = ArmStats::FromCounts(ca, cn);
      const ArmStats null_item = ArmStats::FromCounts(na, nn);
      const double oracle = testing::BetaGreaterQuadrature(ca + 1, cn - ca + 1, na + 1, nn - na + 1);
      worst = std::max(worst, std::abs(ProbBetter(cand, null_item, 100000, rng) - oracle));
    }
  }

  ContextBank bank("page");
  for (int i = 0; i < 30; ++i) {
    LoggedEvent e = testing::MakeEvent("page", {"old", "_"},
                                       i % 3 == 0 ? std::optional(0) : std::nullopt,
                                       i % 2 ? Survey::kYes : Survey::kNo, i);
    e.feedback.free_type = !e.feedback.click;
    bank.Update(e);
  }
  const ExpansionReport filtered =
      Expand(bank, {{"nine", ArmStats::FromCounts(9, 9)}}, ExpansionConfig{}, 1);
  const bool filter_ok = filtered.entries.size() == 1 &&
                         filtered.entries[0].verdict == ExpansionVerdict::kInsufficientTrials &&
                         !bank.HasCandidate("nine");
  ArmStats strong;
  strong.Add(10, 10, 12);
  strong.Add(20, 6, 7);
  const ExpansionReport promoted = Expand(bank, {{"new", strong}}, ExpansionConfig{}, 1);
  const bool copy_ok = promoted.promoted == std::vector<std::string>{"new"} &&
                       bank.FindClick("new")->counts() == PosteriorCounts{0, 0} &&
                       *bank.FindSurvey("new") == strong;
  return {worst <= 0.01 && filter_ok && copy_ok,
          Fmt("max |prob_better - quadrature| %.4f; min-trials filter %s; zero-click copy %s",
              worst, Ok(filter_ok), Ok(copy_ok))};
}

int Cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::Run(args, out, err);
  if (code != cli::kExitOk) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// Runs simulate -> train -> fit -> evaluate (plus expand and report) into
// `dir` and returns the concatenated bytes of every output.
std::string Pipeline(const std::filesystem::path& dir, bool* ok) {
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  *ok = Cli({"--seed", "1", "make-world", "--kind", "text", "--out", p("world.json")}) == 0 &&
        Cli({"--seed", "7", "--horizon", "4000", "simulate", "--world", p("world.json"),
             "--policy", "uniform", "--events", p("log.jsonl"), "--metrics", p("m.tsv")}) == 0 &&
        Cli({"--seed", "7", "train-repr", "--log", p("log.jsonl"), "--epochs", "5", "--hidden",
             "32,16", "--embed-dim", "16", "--out", p("map.json")}) == 0 &&
        Cli({"fit-bandit", "--log", p("log.jsonl"), "--feature-map", p("map.json"), "--out",
             p("head.json")}) == 0 &&
        Cli({"--seed", "7", "evaluate", "--log", p("log.jsonl"), "--target", "nlb", "--head",
             p("head.json"), "--feature-map", p("map.json"), "--world", p("world.json"), "--out",
             p("eval.json")}) == 0 &&
        Cli({"--seed", "7", "--horizon", "4000", "simulate", "--world", p("world.json"),
             "--policy", "mab", "--events", p("mab.jsonl"), "--metrics", p("mab.tsv"),
             "--snapshot", p("snap.json")}) == 0 &&
        Cli({"--seed", "7", "expand", "--log", p("mab.jsonl"), "--report", p("exp.json")}) == 0 &&
        Cli({"report", "--log", p("mab.jsonl"), "--out", p("report.tsv")}) == 0;
  std::string bytes;
  for (const char* f : {"world.json", "log.jsonl", "m.tsv", "map.json", "head.json", "eval.json",
                        "mab.jsonl", "mab.tsv", "snap.json", "exp.json", "report.tsv"}) {
    if (std::filesystem::exists(dir / f)) bytes += ReadFile(dir / f) + '\x1e';
  }
  return bytes;
}

Outcome Determinism() {
  bool ok1 = false;
  bool ok2 = false;
  const std::string a = Pipeline(testing::ScratchDir("acceptance_a"), &ok1);
  const std::string b = Pipeline(testing::ScratchDir("acceptance_b"), &ok2);
  const bool same = a == b;
  return {ok1 && ok2 && same,
          Fmt("pipelines ran: %s; outputs byte-identical: %s (%zu bytes)",
              ok1 && ok2 ? "yes" : "no", same ? "yes" : "no", a.size())};
}

}  // namespace
}  // namespace slatebandit

int main() {
  using slatebandit::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"posterior math", slatebandit::PosteriorMath},
      {"one-hot count identity", slatebandit::OneHotCount},
      {"least-squares oracle", slatebandit::LeastSquares},
      {"gradient check", slatebandit::GradientCheck},
      {"EwS correctness", slatebandit::EwsCorrectness},
      {"SNIPS self-consistency", slatebandit::SnipsConsistency},
      {"simulator learning (discrete)", slatebandit::DiscreteLearning},
      {"simulator learning (rich)", slatebandit::RichLearning},
      {"safe exploration", slatebandit::SafeExploration},
      {"expansion correctness", slatebandit::ExpansionCorrectness},
      {"determinism", slatebandit::Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %zu %s: %s (%s; %.1f s)\n", i + 1, criteria[i].first,
                o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
