#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "slatebandit/eval.h"
#include "slatebandit/event_log.h"
#include "slatebandit/expansion.h"
#include "slatebandit/io.h"
#include "slatebandit/linear.h"
#include "slatebandit/mab.h"
#include "slatebandit/policy.h"
#include "slatebandit/repr.h"
#include "slatebandit/sim.h"
#include "slatebandit/world.h"

namespace slatebandit::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kNullBonus = 1e12;

// Tunables shared by the subcommands. Defaults here, then the config file,
// then command-line flags.
struct Overrides {
  std::optional<std::uint64_t> seed;
  int max_length = 7;
  std::string mode = "recommendation";
  bool direct_trigger = false;
  double direct_trigger_margin = 0.4;
  bool safe_exploration = false;
  std::string combiner = "interpolate";
  double k_lambda = 50.0;
  double window_days = 28.0;
  std::size_t pre_sample = 25;
  double fp = 0.05;
  int min_trials = 10;
  int mc_draws = 100000;
  double pcr_threshold = 0.99;
  double prior_scale = 1.0;
  std::string sampler = "ews";
  double null_reward = 0.0;
  std::int64_t aggregation_period = 4 * 60 * 60;
  std::int64_t expansion_period = kSecondsPerDay;
  std::int64_t refit_period = 60 * 60;
  std::int64_t metrics_period = 0;
  std::int64_t horizon = 10000;
  std::string reward_mode = "survey_only";
  double escalation_weight = 0.0;
  double variance_ceiling = 0.05;
  double ess_floor = 100.0;
};

struct SimulateArgs {
  std::string world;
  std::string policy = "mab";
  std::string feature_map;
  std::string events;
  std::string metrics;
  std::string snapshot;
};

struct TrainArgs {
  std::string log;
  std::string out;
  TrainConfig train;
};

struct FitArgs {
  std::string log;
  std::string feature_map;
  std::string world;
  std::string out;
  std::optional<std::int64_t> since;
  std::optional<std::int64_t> until;
};

struct ExpandArgs {
  std::string log;
  std::string context;
  std::string report;
  std::string out_bank;
};

struct EvaluateArgs {
  std::string log;
  std::string target = "nlb";
  std::string head;
  std::string feature_map;
  std::string world;
  std::string bank_snapshot;
  std::string rule = "ews";
  int propensity_draws = 10000;
  std::string out;
};

struct ReportArgs {
  std::string log;
  std::int64_t window = 0;
  std::string out;
};

struct MakeWorldArgs {
  std::string kind = "discrete";
  std::string out;
  int contexts = 5;
  int actions = 20;
  int hidden = 0;
  double free_type_rate = 0.0;
  double skip_rate = 0.7;
  int d = 16;
  int intents = 4;
};

void RequireWritable(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ValidationError(flag + " is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw ValidationError(flag + ": directory " + parent.string() + " does not exist");
  }
}

void RequireReadable(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ValidationError(flag + " is required");
  if (!fs::is_regular_file(path)) throw ValidationError(flag + ": cannot read " + path);
}

std::uint64_t SeedOf(const Overrides& o) { return o.seed.value_or(0); }

SlatePolicyConfig SlateConfigOf(const Overrides& o) {
  SlatePolicyConfig cfg;
  if (o.mode == "recommendation") {
    cfg.mode = SlateMode::kRecommendation;
  } else if (o.mode == "disambiguation") {
    cfg.mode = SlateMode::kDisambiguation;
  } else {
    throw ValidationError("--mode must be recommendation or disambiguation");
  }
  cfg.max_length = o.max_length;
  cfg.allow_direct_trigger = o.direct_trigger;
  cfg.direct_trigger_margin = o.direct_trigger_margin;
  cfg.safe_exploration = o.safe_exploration;
  cfg.Validate();
  return cfg;
}

std::int64_t WindowSeconds(const Overrides& o) {
  if (!(o.window_days > 0.0)) throw ValidationError("--window-days must be positive");
  return static_cast<std::int64_t>(o.window_days * static_cast<double>(kSecondsPerDay));
}

LambdaConfig LambdaOf(const Overrides& o) {
  LambdaConfig l;
  l.combiner = CombinerFromString(o.combiner);
  l.k_lambda = o.k_lambda;
  if (!(l.k_lambda > 0.0)) throw ValidationError("--k-lambda must be positive");
  return l;
}

ExpansionConfig ExpansionOf(const Overrides& o) {
  ExpansionConfig e;
  e.fp = o.fp;
  e.min_trials = o.min_trials;
  e.mc_draws = o.mc_draws;
  e.Validate();
  return e;
}

RewardSpec RewardOfOverrides(const Overrides& o) {
  RewardSpec r;
  r.mode = RewardModeFromString(o.reward_mode);
  r.escalation_weight = o.escalation_weight;
  if (!(r.escalation_weight <= 0.0)) {
    throw ValidationError("--escalation-weight must be <= 0");
  }
  return r;
}

Schedule ScheduleOf(const Overrides& o) {
  Schedule s;
  s.aggregation_period = o.aggregation_period;
  s.expansion_period = o.expansion_period;
  s.refit_period = o.refit_period;
  s.metrics_period = o.metrics_period;
  s.horizon = o.horizon;
  s.Validate();
  return s;
}

NlbPolicyConfig NlbConfigOf(const Overrides& o) {
  NlbPolicyConfig n;
  n.slate = SlateConfigOf(o);
  n.sampler = LinearSamplerFromString(o.sampler);
  n.pcr_threshold = o.pcr_threshold;
  n.prior_scale = o.prior_scale;
  n.null_reward = o.null_reward;
  n.reward = RewardOfOverrides(o);
  n.Validate();
  return n;
}

// Feature function from a trained map or, failing that, the world's own
// linear features.
struct Features {
  std::shared_ptr<FeatureMap> map;
  std::shared_ptr<WorldSpec> world;
  int d = 0;

  FeatureFn fn() const {
    if (map) {
      auto m = map;
      return [m](const Context& c, const Action& a) { return m->Phi(c, a); };
    }
    auto w = world;
    return [w](const Context& c, const Action& a) -> Eigen::VectorXd {
      const auto& row = w->linear->features;
      auto r = row.find(c.id);
      if (r == row.end() || !r->second.contains(a.id)) {
        throw ValidationError("no linear features for (" + c.id + ", " + a.id + ")");
      }
      return r->second.at(a.id);
    };
  }
};

Features LoadFeatures(const std::string& feature_map, const std::string& world_path) {
  Features f;
  if (!feature_map.empty()) {
    f.map = std::make_shared<FeatureMap>(FeatureMap::FromJson(ReadJsonFile(feature_map)));
    f.d = f.map->d();
    return f;
  }
  if (!world_path.empty()) {
    auto w = std::make_shared<WorldSpec>(WorldSpec::FromJson(ReadJsonFile(world_path)));
    if (!w->linear) {
      throw ValidationError("world has no linear features; pass --feature-map");
    }
    f.d = w->linear->d;
    f.world = std::move(w);
    return f;
  }
  throw ValidationError("pass --feature-map or a world with linear features");
}

nlohmann::json MabSnapshotJson(const MabPolicy& p) {
  nlohmann::json banks = nlohmann::json::object();
  for (const auto& [ctx, bank] : p.learner()) banks[ctx] = bank.ToJson();
  return {{"format", "slatebandit.mab_snapshot/1"}, {"banks", banks}};
}

std::map<std::string, ContextBank> BanksFromSnapshot(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "slatebandit.mab_snapshot/1") {
    throw ValidationError("not a MAB snapshot");
  }
  std::map<std::string, ContextBank> banks;
  for (const auto& [ctx, bj] : j.at("banks").items()) {
    banks.emplace(ctx, ContextBank::FromJson(bj));
  }
  return banks;
}

int CmdSimulate(const Overrides& o, const SimulateArgs& a, std::ostream& out) {
  RequireReadable(a.world, "--world");
  RequireWritable(a.events, "--events");
  RequireWritable(a.metrics, "--metrics");
  if (!a.snapshot.empty()) RequireWritable(a.snapshot, "--snapshot");
  if (!a.feature_map.empty()) RequireReadable(a.feature_map, "--feature-map");
  const WorldSpec world = WorldSpec::FromJson(ReadJsonFile(a.world));
  const Schedule schedule = ScheduleOf(o);
  SlatePolicyConfig slate = SlateConfigOf(o);
  for (const ContextSpec& c : world.contexts) {
    std::vector<Action> b = world.BaselineSlate(c.id);
    if (!b.empty()) slate.baseline[c.id] = std::move(b);
  }

  std::unique_ptr<Policy> policy;
  MabPolicy* mab = nullptr;
  NlbPolicy* nlb = nullptr;
  if (a.policy == "mab") {
    MabPolicyConfig cfg;
    cfg.slate = slate;
    cfg.window_seconds = WindowSeconds(o);
    cfg.lambda = LambdaOf(o);
    cfg.pre_sample = o.pre_sample;
    cfg.expansion = ExpansionOf(o);
    std::map<std::string, std::vector<std::string>> pools;
    for (const ContextSpec& c : world.contexts) pools[c.id] = c.candidates;
    auto p = std::make_unique<MabPolicy>(cfg, world.actions, pools);
    mab = p.get();
    policy = std::move(p);
  } else if (a.policy == "nlb") {
    Features f = LoadFeatures(a.feature_map, a.feature_map.empty() ? a.world : "");
    NlbPolicyConfig cfg = NlbConfigOf(o);
    cfg.slate.baseline = slate.baseline;
    auto p = std::make_unique<NlbPolicy>(cfg, f.d, f.fn());
    nlb = p.get();
    policy = std::move(p);
  } else if (a.policy == "uniform") {
    policy = std::make_unique<UniformPolicy>(slate);
  } else if (a.policy == "baseline") {
    policy = MakeBaselinePolicy(slate);
  } else if (a.policy == "oracle") {
    std::map<std::string, std::vector<Action>> best;
    for (const ContextSpec& c : world.contexts) {
      best[c.id] = {world.actions.at(BestActionByYes(world, c.id))};
    }
    policy = std::make_unique<FixedSlatePolicy>("oracle", slate, best);
  } else {
    throw ValidationError("--policy must be one of mab, nlb, uniform, baseline, oracle");
  }

  const RunResult result = Run(world, *policy, schedule, SeedOf(o));
  WriteFileAtomic(a.events, EncodeEventLog(result.events));
  WriteFileAtomic(a.metrics, result.timeline.ToTsv());
  if (!a.snapshot.empty()) {
    if (mab) {
      WriteJsonFile(a.snapshot, MabSnapshotJson(*mab));
    } else if (nlb && nlb->head()) {
      WriteJsonFile(a.snapshot, nlb->head()->ToJson());
    } else {
      WriteJsonFile(a.snapshot, {{"format", "slatebandit.static_policy/1"},
                                 {"policy", policy->tag()}});
    }
  }
  out << "simulated " << schedule.horizon << " events, " << result.timeline.windows.size()
      << " windows\n";
  return kExitOk;
}

int CmdTrainRepr(const Overrides& o, TrainArgs a, std::ostream& out) {
  RequireReadable(a.log, "--log");
  RequireWritable(a.out, "--out");
  a.train.seed = SeedOf(o);
  a.train.Validate();
  const std::vector<LoggedEvent> events = ReadEventLog(a.log);
  const TrainResult r = Train(events, RewardOfOverrides(o), a.train);
  WriteJsonFile(a.out, r.map.ToJson());
  out << "trained feature map d=" << r.map.d() << " final_mse="
      << (r.epoch_losses.empty() ? 0.0 : r.epoch_losses.back()) << "\n";
  return kExitOk;
}

int CmdFitBandit(const Overrides& o, const FitArgs& a, std::ostream& out) {
  RequireReadable(a.log, "--log");
  RequireWritable(a.out, "--out");
  if (!a.feature_map.empty()) RequireReadable(a.feature_map, "--feature-map");
  if (!a.world.empty()) RequireReadable(a.world, "--world");
  if (!(o.pcr_threshold > 0.0 && o.pcr_threshold <= 1.0)) {
    throw ValidationError("--pcr-threshold must lie in (0, 1]");
  }
  const Features f = LoadFeatures(a.feature_map, a.world);
  const FeatureFn phi = f.fn();
  const RewardSpec spec = RewardOfOverrides(o);
  SufficientStats stats(f.d);
  for (const LoggedEvent& e : ReadEventLog(a.log)) {
    if (a.since && e.timestamp < *a.since) continue;
    if (a.until && e.timestamp >= *a.until) continue;
    const Action* clicked = e.ClickedAction();
    if (clicked == nullptr) continue;
    const std::optional<double> r = RewardOf(e.feedback, spec);
    if (!r) continue;
    stats.Absorb(phi(e.context, *clicked), *r, e.timestamp);
  }
  if (stats.n() == 0) throw NoDataError("no labeled events in the window");
  const BanditHead head = Fit(stats, o.pcr_threshold);
  WriteJsonFile(a.out, head.ToJson());
  out << "fitted bandit head on " << stats.n() << " samples, rank " << head.rank()
      << " of " << head.d() << "\n";
  return kExitOk;
}

int CmdExpand(const Overrides& o, const ExpandArgs& a, std::ostream& out) {
  RequireReadable(a.log, "--log");
  RequireWritable(a.report, "--report");
  if (!a.out_bank.empty()) RequireWritable(a.out_bank, "--out-bank");
  const ExpansionConfig cfg = ExpansionOf(o);
  const std::int64_t window = WindowSeconds(o);
  const LambdaConfig lambda = LambdaOf(o);

  std::map<std::string, ContextBank> source;
  std::map<std::string, ContextBank> foreign;
  std::int64_t now = 0;
  for (const LoggedEvent& e : ReadEventLog(a.log)) {
    now = std::max(now, e.timestamp);
    if (!a.context.empty() && e.context.id != a.context) continue;
    auto& banks = e.policy_tag == kDisambiguationTag ? foreign : source;
    auto it = banks.find(e.context.id);
    if (it == banks.end()) {
      it = banks.emplace(e.context.id, ContextBank(e.context.id, window, lambda)).first;
    }
    it->second.Update(e);
  }
  if (source.empty()) throw NoDataError("no serving events for the requested context");

  nlohmann::json reports = nlohmann::json::array();
  nlohmann::json banks = nlohmann::json::object();
  std::size_t promoted = 0;
  for (auto& [ctx, bank] : source) {
    bank.AdvanceClock(now);
    std::map<std::string, ArmStats> foreign_survey;
    if (auto f = foreign.find(ctx); f != foreign.end()) {
      f->second.AdvanceClock(now);
      foreign_survey = f->second.survey_stats();
    }
    const ExpansionReport report =
        Expand(bank, foreign_survey, cfg, SeedFor(SeedOf(o), StableHash(ctx)));
    promoted += report.promoted.size();
    reports.push_back(report.ToJson());
    banks[ctx] = bank.ToJson();
  }
  WriteJsonFile(a.report, {{"format", "slatebandit.expansion_audit/1"},
                           {"fp", cfg.fp},
                           {"min_trials", cfg.min_trials},
                           {"mc_draws", cfg.mc_draws},
                           {"contexts", reports}});
  if (!a.out_bank.empty()) {
    WriteJsonFile(a.out_bank, {{"format", "slatebandit.mab_snapshot/1"}, {"banks", banks}});
  }
  out << "expansion promoted " << promoted << " action(s) across " << source.size()
      << " context(s)\n";
  return kExitOk;
}

// Candidates the target policy chooses among for a logged event: the
// world's pool when given, otherwise the logged slate's content.
std::vector<Action> TargetCandidates(const LoggedEvent& e, const WorldSpec* world) {
  if (world != nullptr) return world->Candidates(e.context.id);
  std::vector<Action> out;
  for (const Action& a : e.slate.items) {
    if (!a.is_null_item) out.push_back(a);
  }
  return out;
}

int CmdEvaluate(const Overrides& o, const EvaluateArgs& a, std::ostream& out) {
  RequireReadable(a.log, "--log");
  if (!a.out.empty()) RequireWritable(a.out, "--out");
  if (!a.world.empty()) RequireReadable(a.world, "--world");
  if (a.propensity_draws < 1) throw ValidationError("--propensity-draws must be >= 1");
  std::shared_ptr<WorldSpec> world;
  if (!a.world.empty()) {
    world = std::make_shared<WorldSpec>(WorldSpec::FromJson(ReadJsonFile(a.world)));
  }
  const RewardSpec spec = RewardOfOverrides(o);
  const GateThresholds thresholds{o.variance_ceiling, o.ess_floor};

  std::vector<LoggedEvent> events;
  for (LoggedEvent& e : ReadEventLog(a.log)) {
    if (e.policy_tag != kDisambiguationTag) events.push_back(std::move(e));
  }
  // Logging propensities of Thompson-sampled slates are rebuilt from the
  // logged posteriors; add-half smoothing keeps them positive.
  std::size_t rebuilt = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    LoggedEvent& e = events[i];
    const Action* clicked = e.ClickedAction();
    if (e.propensity || clicked == nullptr || !e.posteriors) continue;
    Rng rng(SeedFor(SeedOf(o), 0x70726f70, i));
    const auto freq = EstimatePropensities(*e.posteriors, rng, a.propensity_draws);
    const double n = static_cast<double>(a.propensity_draws);
    const double m = static_cast<double>(e.posteriors->size());
    const auto it = freq.find(clicked->id);
    const double f = it == freq.end() ? 0.0 : it->second;
    e.propensity = (f * n + 0.5) / (n + 0.5 * m);
    ++rebuilt;
  }

  TargetPolicy target;
  if (a.target == "logging") {
    target = [](const LoggedEvent& e) {
      std::map<std::string, double> p;
      if (const Action* c = e.ClickedAction(); c && e.propensity) p[c->id] = *e.propensity;
      return p;
    };
  } else if (a.target == "uniform") {
    target = [world](const LoggedEvent& e) {
      const std::vector<Action> cands = TargetCandidates(e, world.get());
      std::map<std::string, double> p;
      const double each = 1.0 / static_cast<double>(cands.size() + 1);
      for (const Action& c : cands) p[c.id] = each;
      p[std::string(kNullActionId)] = each;
      return p;
    };
  } else if (a.target == "nlb") {
    RequireReadable(a.head, "--head");
    if (!a.feature_map.empty()) RequireReadable(a.feature_map, "--feature-map");
    if (a.rule != "ews" && a.rule != "greedy") {
      throw ValidationError("--rule must be ews or greedy");
    }
    auto head = std::make_shared<BanditHead>(BanditHead::FromJson(ReadJsonFile(a.head)));
    const Features f = LoadFeatures(a.feature_map, a.world);
    if (f.d != head->d()) throw ValidationError("head and feature map disagree on d");
    const FeatureFn phi = f.fn();
    const double null_reward = o.null_reward;
    const bool greedy = a.rule == "greedy";
    target = [head, phi, world, null_reward, greedy](const LoggedEvent& e) {
      const std::vector<Action> cands = TargetCandidates(e, world.get());
      std::vector<ArmEstimate> arms;
      for (const Action& c : cands) arms.push_back(Estimate(*head, c.id, phi(e.context, c)));
      arms.push_back({std::string(kNullActionId), null_reward, kNullBonus});
      double best = arms.front().prediction;
      for (const ArmEstimate& x : arms) best = std::max(best, x.prediction);
      std::vector<double> bonus;
      std::vector<double> gaps;
      for (const ArmEstimate& x : arms) {
        bonus.push_back(x.bonus);
        gaps.push_back(best - x.prediction);
      }
      std::map<std::string, double> p;
      if (greedy) {
        // Ties go to the smaller id, as in the samplers.
        std::size_t pick = 0;
        for (std::size_t i = 1; i < arms.size(); ++i) {
          if (arms[i].prediction > arms[pick].prediction ||
              (arms[i].prediction == arms[pick].prediction && arms[i].id < arms[pick].id)) {
            pick = i;
          }
        }
        p[arms[pick].id] = 1.0;
        return p;
      }
      const std::vector<double> probs = EwsProbabilities(bonus, gaps);
      for (std::size_t i = 0; i < arms.size(); ++i) p[arms[i].id] = probs[i];
      return p;
    };
  } else if (a.target == "mab") {
    RequireReadable(a.bank_snapshot, "--bank-snapshot");
    auto banks = std::make_shared<std::map<std::string, ContextBank>>(
        BanksFromSnapshot(ReadJsonFile(a.bank_snapshot)));
    const int draws = a.propensity_draws;
    const std::uint64_t seed = SeedOf(o);
    target = [banks, world, draws, seed](const LoggedEvent& e) {
      std::map<std::string, double> p;
      auto it = banks->find(e.context.id);
      if (it == banks->end()) return p;
      PosteriorTable table;
      std::vector<std::string> ids = it->second.CandidateIds();
      if (world) {
        ids.clear();
        for (const Action& c : world->Candidates(e.context.id)) ids.push_back(c.id);
      }
      for (const std::string& id : ids) table[id] = it->second.Posterior(id);
      const std::string null_id(kNullActionId);
      table[null_id] = it->second.Posterior(null_id);
      Rng rng(SeedFor(seed, 0x74617267, static_cast<std::uint64_t>(e.timestamp)));
      return EstimatePropensities(table, rng, draws);
    };
  } else {
    throw ValidationError("--target must be one of nlb, mab, uniform, logging");
  }

  const OpeResult result = Snips(events, target, spec);
  const GateVerdict verdict = PromotionGate(result, thresholds);
  nlohmann::json report = result.ToJson();
  report["format"] = "slatebandit.evaluation/1";
  report["target"] = a.target;
  report["rebuilt_propensities"] = rebuilt;
  report["gate"] = {
      {"pass", verdict.pass},
      {"variance_ceiling", thresholds.variance_ceiling},
      {"ess_floor", thresholds.ess_floor},
      {"clauses",
       {{"estimate_exceeds_logging", result.snips_estimate > result.logging_policy_mean},
        {"variance_within_ceiling", result.variance_estimate <= thresholds.variance_ceiling},
        {"ess_above_floor", result.effective_sample_size >= thresholds.ess_floor}}},
      {"reasons", verdict.reasons}};
  if (!a.out.empty()) WriteJsonFile(a.out, report);
  out << report.dump(2) << "\n";
  return kExitOk;
}

int CmdReport(const Overrides& o, const ReportArgs& a, std::ostream& out) {
  RequireReadable(a.log, "--log");
  if (!a.out.empty()) RequireWritable(a.out, "--out");
  const std::int64_t width = a.window > 0 ? a.window : o.aggregation_period;
  if (width < 1) throw ValidationError("--window must be positive");
  std::vector<LoggedEvent> events;
  for (LoggedEvent& e : ReadEventLog(a.log)) {
    if (e.policy_tag != kDisambiguationTag) events.push_back(std::move(e));
  }
  if (events.empty()) throw NoDataError("no serving events in the log");

  auto row = [](const std::string& label, std::span<const LoggedEvent> span) {
    const std::optional<double> prr = PrrHat(span);
    const KpiCounts k = KpiCounters(span);
    std::ostringstream s;
    s << label << '\t' << span.size() << '\t';
    if (prr) {
      s << *prr;
    } else {
      s << "NA";
    }
    s << '\t' << EasHat(span) << '\t' << k.shs << '\t' << k.ue << '\n';
    return s.str();
  };
  std::string table = "window\tevents\tprr_hat\teas_hat\tshs\tue\n";
  std::size_t begin = 0;
  while (begin < events.size()) {
    const std::int64_t index = events[begin].timestamp / width;
    std::size_t end = begin;
    while (end < events.size() && events[end].timestamp / width == index) ++end;
    table += row(std::to_string(index),
                 std::span<const LoggedEvent>(events).subspan(begin, end - begin));
    begin = end;
  }
  table += row("all", events);
  if (!a.out.empty()) WriteFileAtomic(a.out, table);
  out << table;
  return kExitOk;
}

int CmdMakeWorld(const Overrides& o, const MakeWorldArgs& a, std::ostream& out) {
  RequireWritable(a.out, "--out");
  WorldSpec world;
  if (a.kind == "discrete") {
    DiscreteWorldOptions d;
    d.contexts = a.contexts;
    d.actions = a.actions;
    d.hidden_per_context = a.hidden;
    d.free_type_rate = a.free_type_rate;
    d.survey_skip_rate = a.skip_rate;
    d.seed = SeedOf(o);
    world = MakeDiscreteWorld(d);
  } else if (a.kind == "linear") {
    LinearWorldOptions l;
    l.contexts = a.contexts;
    l.actions = a.actions;
    l.d = a.d;
    l.survey_skip_rate = a.skip_rate;
    l.seed = SeedOf(o);
    world = MakeLinearWorld(l);
  } else if (a.kind == "text") {
    TextWorldOptions t;
    t.intents = a.intents;
    t.survey_skip_rate = a.skip_rate;
    t.seed = SeedOf(o);
    world = MakeTextWorld(t);
  } else {
    throw ValidationError("--kind must be discrete, linear or text");
  }
  WriteJsonFile(a.out, world.ToJson());
  out << "wrote " << a.kind << " world with " << world.contexts.size() << " contexts\n";
  return kExitOk;
}

void AddOverrides(CLI::App& app, Overrides& o) {
  const std::string g = "Overrides";
  app.add_option("--seed", o.seed, "Random seed (required by simulate, train-repr)")->group(g);
  app.add_option("-L,--L", o.max_length, "Max slate length L, null item included")
      ->capture_default_str()->group(g);
  app.add_option("--mode", o.mode, "Slate mode: recommendation | disambiguation")
      ->capture_default_str()->group(g);
  app.add_flag("--direct-trigger,!--no-direct-trigger", o.direct_trigger,
               "Allow single-action slates (disambiguation mode)")->group(g);
  app.add_option("--direct-trigger-margin", o.direct_trigger_margin,
                 "Top score must beat the null item by this much to trigger")
      ->capture_default_str()->group(g);
  app.add_flag("--safe-exploration,!--no-safe-exploration", o.safe_exploration,
               "Serve the baseline slate when its summed score is higher")->group(g);
  app.add_option("--combiner", o.combiner, "lambda combiner: interpolate | product")
      ->capture_default_str()->group(g);
  app.add_option("--k-lambda", o.k_lambda,
                 "lambda = k / (k + survey trials in context)")
      ->capture_default_str()->group(g);
  app.add_option("--window-days", o.window_days, "Counter window w_x in days")
      ->capture_default_str()->group(g);
  app.add_option("--pre-sample", o.pre_sample, "Candidates kept by the first Thompson round")
      ->capture_default_str()->group(g);
  app.add_option("--fp", o.fp, "Allowed false-positive probability for expansion")
      ->capture_default_str()->group(g);
  app.add_option("--min-trials", o.min_trials, "Survey trials needed before promotion")
      ->capture_default_str()->group(g);
  app.add_option("--mc-draws", o.mc_draws, "Monte-Carlo draws for prob_better")
      ->capture_default_str()->group(g);
  app.add_option("--pcr-threshold", o.pcr_threshold,
                 "Eigenvalue mass kept by principal component regression")
      ->capture_default_str()->group(g);
  app.add_option("--prior-scale", o.prior_scale, "Posterior scale of linear Thompson sampling")
      ->capture_default_str()->group(g);
  app.add_option("--sampler", o.sampler, "Linear sampler: ews | thompson")
      ->capture_default_str()->group(g);
  app.add_option("--null-reward", o.null_reward, "Reward the null item is pinned to (linear)")
      ->capture_default_str()->group(g);
  app.add_option("--aggregation-period", o.aggregation_period, "Seconds between aggregations")
      ->capture_default_str()->group(g);
  app.add_option("--expansion-period", o.expansion_period, "Seconds between expansion jobs")
      ->capture_default_str()->group(g);
  app.add_option("--refit-period", o.refit_period, "Seconds between bandit refits")
      ->capture_default_str()->group(g);
  app.add_option("--metrics-period", o.metrics_period,
                 "Metrics window in seconds (0: aggregation period)")
      ->capture_default_str()->group(g);
  app.add_option("--horizon", o.horizon, "Simulated events")->capture_default_str()->group(g);
  app.add_option("--reward-mode", o.reward_mode, "Reward: survey_only | survey_and_escalation")
      ->capture_default_str()->group(g);
  app.add_option("--escalation-weight", o.escalation_weight, "Escalation reward (<= 0)")
      ->capture_default_str()->group(g);
  app.add_option("--variance-ceiling", o.variance_ceiling, "Promotion gate variance ceiling")
      ->capture_default_str()->group(g);
  app.add_option("--ess-floor", o.ess_floor, "Promotion gate effective sample size floor")
      ->capture_default_str()->group(g);
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Slate bandits for contextual recommendation and intent disambiguation.\n"
               "Precedence: built-in defaults < --config file < command-line flags.",
               "slatebandit"};
  app.set_config("--config", "", "TOML config file; keys are option names without dashes");
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  AddOverrides(app, o);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run the closed-loop simulator");
  simulate->add_option("--world", sim.world, "World spec (JSON)")->required();
  simulate->add_option("--policy", sim.policy, "mab | nlb | uniform | baseline | oracle")
      ->capture_default_str();
  simulate->add_option("--feature-map", sim.feature_map, "Feature map for the nlb policy");
  simulate->add_option("--events", sim.events, "Output event log")->required();
  simulate->add_option("--metrics", sim.metrics, "Output metrics timeline (TSV)")->required();
  simulate->add_option("--snapshot", sim.snapshot, "Output final policy snapshot");

  TrainArgs train;
  CLI::App* train_repr = app.add_subcommand("train-repr", "Train the representation network");
  train_repr->add_option("--log", train.log, "Input event log")->required();
  train_repr->add_option("--out", train.out, "Output feature map")->required();
  train_repr->add_option("--epochs", train.train.epochs)->capture_default_str();
  train_repr->add_option("--learning-rate", train.train.learning_rate)->capture_default_str();
  train_repr->add_option("--batch-size", train.train.batch_size)->capture_default_str();
  train_repr->add_option("--hidden", train.train.hidden, "Hidden layer widths")
      ->delimiter(',')->capture_default_str();
  train_repr->add_option("--embed-dim", train.train.embed_dim)->capture_default_str();

  FitArgs fit;
  CLI::App* fit_bandit = app.add_subcommand("fit-bandit", "Fit the linear bandit head");
  fit_bandit->add_option("--log", fit.log, "Input event log")->required();
  fit_bandit->add_option("--feature-map", fit.feature_map, "Feature map (from train-repr)");
  fit_bandit->add_option("--world", fit.world, "World with linear features (instead of a map)");
  fit_bandit->add_option("--out", fit.out, "Output bandit head")->required();
  fit_bandit->add_option("--since", fit.since, "Only events with ts >= since");
  fit_bandit->add_option("--until", fit.until, "Only events with ts < until");

  ExpandArgs exp;
  CLI::App* expand = app.add_subcommand("expand", "Promote free-text actions into source pools");
  expand->add_option("--log", exp.log, "Input event log")->required();
  expand->add_option("--context", exp.context, "Restrict to one source context");
  expand->add_option("--report", exp.report, "Output audit report")->required();
  expand->add_option("--out-bank", exp.out_bank, "Output expanded context banks");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Off-policy evaluation and promotion gate");
  evaluate->add_option("--log", ev.log, "Input event log")->required();
  evaluate->add_option("--target", ev.target, "nlb | mab | uniform | logging")
      ->capture_default_str();
  evaluate->add_option("--head", ev.head, "Bandit head of the nlb target");
  evaluate->add_option("--feature-map", ev.feature_map, "Feature map of the nlb target");
  evaluate->add_option("--world", ev.world, "World spec: candidate pools, linear features");
  evaluate->add_option("--bank-snapshot", ev.bank_snapshot, "MAB snapshot of the mab target");
  evaluate->add_option("--rule", ev.rule, "nlb target rule: ews | greedy")->capture_default_str();
  evaluate->add_option("--propensity-draws", ev.propensity_draws,
                       "Monte-Carlo draws for Thompson propensities")
      ->capture_default_str();
  evaluate->add_option("--out", ev.out, "Output evaluation report");

  ReportArgs rep;
  CLI::App* report = app.add_subcommand("report", "Windowed KPI table from an event log");
  report->add_option("--log", rep.log, "Input event log")->required();
  report->add_option("--window", rep.window, "Window in seconds (0: aggregation period)");
  report->add_option("--out", rep.out, "Output table (TSV)");

  MakeWorldArgs mw;
  CLI::App* make_world = app.add_subcommand("make-world", "Generate a synthetic world spec");
  make_world->add_option("--kind", mw.kind, "discrete | linear | text")->capture_default_str();
  make_world->add_option("--out", mw.out, "Output world spec")->required();
  make_world->add_option("--contexts", mw.contexts)->capture_default_str();
  make_world->add_option("--actions", mw.actions)->capture_default_str();
  make_world->add_option("--hidden", mw.hidden, "Hidden actions per context")
      ->capture_default_str();
  make_world->add_option("--free-type-rate", mw.free_type_rate)->capture_default_str();
  make_world->add_option("--skip-rate", mw.skip_rate)->capture_default_str();
  make_world->add_option("--d", mw.d, "Feature dimension (linear)")->capture_default_str();
  make_world->add_option("--intents", mw.intents, "Intents (text)")->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("slatebandit");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const bool seeded = o.seed.has_value();
    if (simulate->parsed()) {
      if (!seeded) throw ValidationError("--seed is required for simulate");
      return CmdSimulate(o, sim, out);
    }
    if (train_repr->parsed()) {
      if (!seeded) throw ValidationError("--seed is required for train-repr");
      return CmdTrainRepr(o, train, out);
    }
    if (fit_bandit->parsed()) return CmdFitBandit(o, fit, out);
    if (expand->parsed()) return CmdExpand(o, exp, out);
    if (evaluate->parsed()) return CmdEvaluate(o, ev, out);
    if (report->parsed()) return CmdReport(o, rep, out);
    if (make_world->parsed()) return CmdMakeWorld(o, mw, out);
    err << "error: no subcommand\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NoDataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace slatebandit::cli
