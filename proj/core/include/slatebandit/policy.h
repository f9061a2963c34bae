// Serving policies driven by the simulator and the CLI. Each policy serves
// from an immutable snapshot; the learning jobs (aggregation, refit,
// expansion) update a separate learner state and swap the snapshot when they
// finish.

#ifndef SLATEBANDIT_POLICY_H_
#define SLATEBANDIT_POLICY_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "slatebandit/expansion.h"
#include "slatebandit/linear.h"
#include "slatebandit/mab.h"
#include "slatebandit/reward.h"
#include "slatebandit/rng.h"
#include "slatebandit/slate.h"
#include "slatebandit/types.h"

namespace slatebandit {

// Tag of events logged by the free-text flow.
inline constexpr std::string_view kDisambiguationTag = "disambiguation";

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string tag() const = 0;
  virtual const SlatePolicyConfig& slate_config() const = 0;

  virtual SlateDecision Decide(const Context& context,
                               std::span<const Action> candidates,
                               Rng& rng) = 0;

  // Fills the logging fields (propensity, posteriors) of an event built
  // from `decision`.
  virtual void Annotate(const SlateDecision& decision, LoggedEvent& event) const;

  // Scheduled jobs. `events` holds everything logged since the previous run
  // of the same job, in log order.
  virtual void Aggregate(std::span<const LoggedEvent> events, std::int64_t now);
  virtual void Refit(std::span<const LoggedEvent> events, std::int64_t now);
  virtual void Expand(std::int64_t now, std::uint64_t job_seed);

  // Stable digest of the serving snapshot.
  virtual std::string SnapshotDigest() const;
};

// Orders the candidates and the null item uniformly at random.
class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(SlatePolicyConfig cfg);
  std::string tag() const override { return "uniform"; }
  const SlatePolicyConfig& slate_config() const override { return cfg_; }
  SlateDecision Decide(const Context& context, std::span<const Action> candidates,
                       Rng& rng) override;

 private:
  SlatePolicyConfig cfg_;
};

// Serves a fixed slate per context ([best, null] for the always-serve-best
// oracle).
class FixedSlatePolicy : public Policy {
 public:
  FixedSlatePolicy(std::string tag, SlatePolicyConfig cfg,
                   std::map<std::string, std::vector<Action>> slates);
  std::string tag() const override { return tag_; }
  const SlatePolicyConfig& slate_config() const override { return cfg_; }
  SlateDecision Decide(const Context& context, std::span<const Action> candidates,
                       Rng& rng) override;

 private:
  std::string tag_;
  SlatePolicyConfig cfg_;
  std::map<std::string, std::vector<Action>> slates_;
};

// Always serves cfg.baseline for the context (null item only when absent).
std::unique_ptr<Policy> MakeBaselinePolicy(const SlatePolicyConfig& cfg);

struct MabPolicyConfig {
  SlatePolicyConfig slate;
  std::int64_t window_seconds = 28 * kSecondsPerDay;
  LambdaConfig lambda;
  std::size_t pre_sample = 25;
  ExpansionConfig expansion;

  void Validate() const;
};

// Per-context Beta-Thompson slates over click and survey arms.
class MabPolicy : public Policy {
 public:
  // `pools` registers the initial candidates of each context; `catalog`
  // resolves action ids (including ones promoted later).
  MabPolicy(MabPolicyConfig cfg, std::map<std::string, Action> catalog,
            const std::map<std::string, std::vector<std::string>>& pools);

  std::string tag() const override { return "mab"; }
  const SlatePolicyConfig& slate_config() const override { return cfg_.slate; }
  SlateDecision Decide(const Context& context, std::span<const Action> candidates,
                       Rng& rng) override;
  void Aggregate(std::span<const LoggedEvent> events, std::int64_t now) override;
  void Expand(std::int64_t now, std::uint64_t job_seed) override;
  std::string SnapshotDigest() const override;

  const std::map<std::string, ContextBank>& learner() const { return learner_; }
  const std::map<std::string, ContextBank>& snapshot() const { return snapshot_; }
  const std::vector<ExpansionReport>& expansion_reports() const {
    return reports_;
  }
  // Events folded in by aggregation so far (conservation checks).
  std::size_t aggregated_events() const { return aggregated_; }

 private:
  void Swap();
  ContextBank& LearnerBank(const std::string& context_id);

  MabPolicyConfig cfg_;
  std::map<std::string, Action> catalog_;
  std::map<std::string, ContextBank> learner_;
  std::map<std::string, ContextBank> snapshot_;
  // Survey arms of the free-text flow, per source context.
  std::map<std::string, ContextBank> foreign_;
  std::vector<ExpansionReport> reports_;
  std::size_t aggregated_ = 0;
};

using FeatureFn =
    std::function<Eigen::VectorXd(const Context& context, const Action& action)>;

enum class LinearSampler { kEws, kThompson };

LinearSampler LinearSamplerFromString(std::string_view text);
std::string_view ToString(LinearSampler sampler);

struct NlbPolicyConfig {
  SlatePolicyConfig slate;
  LinearSampler sampler = LinearSampler::kEws;
  double pcr_threshold = 0.99;
  double prior_scale = 1.0;
  // Reward the null item is pinned to; it is ranked with an effectively
  // infinite trial count.
  double null_reward = 0.0;
  std::optional<std::int64_t> window_seconds;
  RewardSpec reward;

  void Validate() const;
};

// Linear bandit head over a feature map, refit on schedule.
class NlbPolicy : public Policy {
 public:
  NlbPolicy(NlbPolicyConfig cfg, int d, FeatureFn features);

  std::string tag() const override { return "nlb"; }
  const SlatePolicyConfig& slate_config() const override { return cfg_.slate; }
  SlateDecision Decide(const Context& context, std::span<const Action> candidates,
                       Rng& rng) override;
  void Refit(std::span<const LoggedEvent> events, std::int64_t now) override;
  std::string SnapshotDigest() const override;

  const std::optional<BanditHead>& head() const { return head_; }
  const SufficientStats& stats() const { return stats_; }
  // Seeds the learner with a fitted head (e.g. loaded from disk).
  void SetHead(BanditHead head) { head_ = std::move(head); }

 private:
  NlbPolicyConfig cfg_;
  FeatureFn features_;
  SufficientStats stats_;
  std::optional<BanditHead> head_;
};

// Hex form of StableHash over a JSON dump.
std::string DigestOf(const nlohmann::json& j);

}  // namespace slatebandit

#endif  // SLATEBANDIT_POLICY_H_
