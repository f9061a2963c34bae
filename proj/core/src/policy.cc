#include "slatebandit/policy.h"

#include <algorithm>
#include <cstdio>

namespace slatebandit {
namespace {

// Stands in for an infinite trial count: the null item's value is known.
constexpr double kNullBonus = 1e12;

std::vector<ScoredAction> SortedScored(std::vector<ScoredAction> scored) {
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredAction& a, const ScoredAction& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.action.id < b.action.id;
                   });
  return scored;
}

SlateDecision UniformDecision(std::span<const Action> candidates,
                              const SlatePolicyConfig& cfg, Rng& rng) {
  std::vector<ScoredAction> scored;
  for (const Action& a : candidates) scored.push_back({a, SampleUniform(rng)});
  scored.push_back({NullAction(), SampleUniform(rng)});
  SlateDecision d = Assemble(SortedScored(std::move(scored)), cfg);
  std::map<std::string, double> p;
  const double each = 1.0 / static_cast<double>(d.scored_all.size());
  for (const ScoredAction& s : d.scored_all) p[s.action.id] = each;
  d.propensities = std::move(p);
  return d;
}

}  // namespace

void Policy::Annotate(const SlateDecision& decision, LoggedEvent& event) const {
  if (decision.posteriors) event.posteriors = decision.posteriors;
  const Action* clicked = event.ClickedAction();
  if (clicked == nullptr || !decision.propensities) return;
  auto it = decision.propensities->find(clicked->id);
  if (it != decision.propensities->end() && it->second > 0.0) {
    event.propensity = std::min(1.0, it->second);
  }
}

void Policy::Aggregate(std::span<const LoggedEvent>, std::int64_t) {}
void Policy::Refit(std::span<const LoggedEvent>, std::int64_t) {}
void Policy::Expand(std::int64_t, std::uint64_t) {}
std::string Policy::SnapshotDigest() const { return "static"; }

std::string DigestOf(const nlohmann::json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(StableHash(j.dump())));
  return buf;
}

UniformPolicy::UniformPolicy(SlatePolicyConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
}

SlateDecision UniformPolicy::Decide(const Context&, std::span<const Action> candidates,
                                    Rng& rng) {
  return UniformDecision(candidates, cfg_, rng);
}

FixedSlatePolicy::FixedSlatePolicy(std::string tag, SlatePolicyConfig cfg,
                                   std::map<std::string, std::vector<Action>> slates)
    : tag_(std::move(tag)), cfg_(std::move(cfg)), slates_(std::move(slates)) {
  cfg_.Validate();
}

SlateDecision FixedSlatePolicy::Decide(const Context& context,
                                       std::span<const Action>, Rng&) {
  std::vector<ScoredAction> ranked;
  auto it = slates_.find(context.id);
  if (it != slates_.end()) {
    const double n = static_cast<double>(it->second.size());
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      ranked.push_back({it->second[i], n - static_cast<double>(i)});
    }
  }
  ranked.push_back({NullAction(), 0.0});
  SlatePolicyConfig cfg = cfg_;
  cfg.allow_direct_trigger = false;
  SlateDecision d = Assemble(std::move(ranked), cfg);
  d.propensities = std::map<std::string, double>{
      {d.scored_all.front().action.id, 1.0}};
  return d;
}

std::unique_ptr<Policy> MakeBaselinePolicy(const SlatePolicyConfig& cfg) {
  return std::make_unique<FixedSlatePolicy>("baseline", cfg, cfg.baseline);
}

void MabPolicyConfig::Validate() const {
  slate.Validate();
  if (window_seconds < 1) throw ValidationError("mab: window must be positive");
  if (!(lambda.k_lambda > 0.0)) throw ValidationError("mab: k_lambda must be positive");
  if (pre_sample < 1) throw ValidationError("mab: pre_sample must be >= 1");
  expansion.Validate();
}

MabPolicy::MabPolicy(MabPolicyConfig cfg, std::map<std::string, Action> catalog,
                     const std::map<std::string, std::vector<std::string>>& pools)
    : cfg_(std::move(cfg)), catalog_(std::move(catalog)) {
  cfg_.Validate();
  for (const auto& [ctx, ids] : pools) {
    ContextBank& bank = LearnerBank(ctx);
    for (const std::string& id : ids) {
      if (!catalog_.contains(id)) throw ValidationError("mab: unknown action " + id);
      bank.AddCandidate(id);
    }
  }
  Swap();
}

ContextBank& MabPolicy::LearnerBank(const std::string& context_id) {
  auto it = learner_.find(context_id);
  if (it == learner_.end()) {
    it = learner_
             .emplace(context_id,
                      ContextBank(context_id, cfg_.window_seconds, cfg_.lambda))
             .first;
  }
  return it->second;
}

void MabPolicy::Swap() {
  snapshot_.clear();
  for (const auto& [ctx, bank] : learner_) snapshot_.emplace(ctx, bank.Compacted());
}

SlateDecision MabPolicy::Decide(const Context& context,
                                std::span<const Action> candidates, Rng& rng) {
  const ContextBank empty(context.id, cfg_.window_seconds, cfg_.lambda);
  auto it = snapshot_.find(context.id);
  const ContextBank& bank = it == snapshot_.end() ? empty : it->second;

  std::vector<std::string> pool = bank.CandidateIds();
  if (pool.empty()) {
    for (const Action& a : candidates) pool.push_back(a.id);
  }
  if (pool.size() > cfg_.pre_sample) {
    pool = PreSample(bank, pool, cfg_.pre_sample, rng);
  }
  pool.push_back(std::string(kNullActionId));

  const std::vector<ScoredId> ranked_ids = RankByJointScore(bank, pool, rng);
  std::vector<ScoredAction> ranked;
  ranked.reserve(ranked_ids.size());
  for (const ScoredId& s : ranked_ids) {
    if (s.id == kNullActionId) {
      ranked.push_back({NullAction(), s.score});
      continue;
    }
    auto a = catalog_.find(s.id);
    if (a == catalog_.end()) {
      auto c = std::find_if(candidates.begin(), candidates.end(),
                            [&](const Action& x) { return x.id == s.id; });
      if (c == candidates.end()) throw ValidationError("mab: unknown action " + s.id);
      ranked.push_back({*c, s.score});
    } else {
      ranked.push_back({a->second, s.score});
    }
  }
  SlateDecision d = Assemble(std::move(ranked), cfg_.slate);
  if (cfg_.slate.safe_exploration) {
    auto b = cfg_.slate.baseline.find(context.id);
    if (b != cfg_.slate.baseline.end()) {
      d = SafeGate(std::move(d), b->second, [&](const Action& a) {
        return bank.JointScoreOrPrior(a.id, rng);
      });
    }
  }

  PosteriorTable table;
  for (const ScoredAction& s : d.scored_all) table[s.action.id] = bank.Posterior(s.action.id);
  for (const Action& a : d.served.items) {
    if (!table.contains(a.id)) table[a.id] = bank.Posterior(a.id);
  }
  // Propensities are reconstructed offline from the logged posteriors.
  d.posteriors = std::move(table);
  return d;
}

void MabPolicy::Aggregate(std::span<const LoggedEvent> events, std::int64_t now) {
  for (const LoggedEvent& e : events) {
    if (e.policy_tag == kDisambiguationTag) {
      auto it = foreign_.find(e.context.id);
      if (it == foreign_.end()) {
        it = foreign_
                 .emplace(e.context.id, ContextBank(e.context.id, cfg_.window_seconds,
                                                    cfg_.lambda))
                 .first;
      }
      it->second.Update(e);
    } else if (e.policy_tag == tag()) {
      LearnerBank(e.context.id).Update(e);
      ++aggregated_;
    }
  }
  for (auto& [ctx, bank] : learner_) bank.AdvanceClock(now);
  for (auto& [ctx, bank] : foreign_) bank.AdvanceClock(now);
  Swap();
}

void MabPolicy::Expand(std::int64_t now, std::uint64_t job_seed) {
  for (auto& [ctx, bank] : learner_) {
    auto f = foreign_.find(ctx);
    if (f == foreign_.end()) continue;
    f->second.AdvanceClock(now);
    bank.AdvanceClock(now);
    reports_.push_back(slatebandit::Expand(bank, f->second.survey_stats(),
                                           cfg_.expansion,
                                           SeedFor(job_seed, StableHash(ctx))));
  }
  Swap();
}

std::string MabPolicy::SnapshotDigest() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [ctx, bank] : snapshot_) j[ctx] = bank.ToJson();
  return DigestOf(j);
}

LinearSampler LinearSamplerFromString(std::string_view text) {
  if (text == "ews") return LinearSampler::kEws;
  if (text == "thompson" || text == "ts") return LinearSampler::kThompson;
  throw ValidationError("unknown sampler '" + std::string(text) + "'");
}

std::string_view ToString(LinearSampler sampler) {
  return sampler == LinearSampler::kEws ? "ews" : "thompson";
}

void NlbPolicyConfig::Validate() const {
  slate.Validate();
  if (!(pcr_threshold > 0.0 && pcr_threshold <= 1.0)) {
    throw ValidationError("nlb: pcr_threshold must lie in (0, 1]");
  }
  if (!(prior_scale > 0.0)) throw ValidationError("nlb: prior_scale must be positive");
  if (window_seconds && *window_seconds < 1) {
    throw ValidationError("nlb: window must be positive");
  }
  if (!(reward.escalation_weight <= 0.0)) {
    throw ValidationError("nlb: escalation weight must be <= 0");
  }
}

NlbPolicy::NlbPolicy(NlbPolicyConfig cfg, int d, FeatureFn features)
    : cfg_(std::move(cfg)), features_(std::move(features)),
      stats_(d, cfg_.window_seconds) {
  cfg_.Validate();
}

SlateDecision NlbPolicy::Decide(const Context& context,
                                std::span<const Action> candidates, Rng& rng) {
  if (!head_) return UniformDecision(candidates, cfg_.slate, rng);

  std::vector<Action> actions(candidates.begin(), candidates.end());
  std::vector<Eigen::VectorXd> phis;
  phis.reserve(actions.size());
  for (const Action& a : actions) phis.push_back(features_(context, a));

  if (cfg_.sampler == LinearSampler::kThompson) {
    std::vector<LinearCandidate> lc;
    for (std::size_t i = 0; i < actions.size(); ++i) lc.push_back({actions[i].id, phis[i]});
    const std::vector<double> scores = ThompsonScores(*head_, lc, cfg_.prior_scale, rng);
    std::vector<ScoredAction> scored;
    for (std::size_t i = 0; i < actions.size(); ++i) scored.push_back({actions[i], scores[i]});
    scored.push_back({NullAction(), cfg_.null_reward});
    return Assemble(SortedScored(std::move(scored)), cfg_.slate);
  }

  std::vector<ArmEstimate> arms;
  arms.reserve(actions.size() + 1);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    arms.push_back(Estimate(*head_, actions[i].id, phis[i]));
  }
  arms.push_back({std::string(kNullActionId), cfg_.null_reward, kNullBonus});
  actions.push_back(NullAction());

  std::vector<double> first;
  const std::vector<std::size_t> order = EwsRanking(arms, rng, &first);
  std::vector<ScoredAction> ranked;
  ranked.reserve(order.size());
  for (std::size_t i : order) ranked.push_back({actions[i], arms[i].prediction});
  SlateDecision d = Assemble(std::move(ranked), cfg_.slate);
  std::map<std::string, double> p;
  for (std::size_t i = 0; i < arms.size(); ++i) p[arms[i].id] = first[i];
  d.propensities = std::move(p);
  return d;
}

void NlbPolicy::Refit(std::span<const LoggedEvent> events, std::int64_t now) {
  for (const LoggedEvent& e : events) {
    if (e.policy_tag != tag()) continue;
    const Action* clicked = e.ClickedAction();
    if (clicked == nullptr) continue;
    const std::optional<double> r = RewardOf(e.feedback, cfg_.reward);
    if (!r) continue;
    stats_.Absorb(features_(e.context, *clicked), *r, e.timestamp);
  }
  stats_.AdvanceClock(now);
  if (stats_.n() == 0) return;
  try {
    head_ = Fit(stats_, cfg_.pcr_threshold);
  } catch (const NoDataError&) {
    // Keep serving the previous head.
  }
}

std::string NlbPolicy::SnapshotDigest() const {
  return head_ ? DigestOf(head_->ToJson()) : "none";
}

}  // namespace slatebandit
