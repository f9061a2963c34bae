// Discrete-context bandits: per-context click and survey Beta-Bernoulli arms
// over a moving window, Thompson sampling, and the click/survey score
// interpolation.

#ifndef SLATEBANDIT_MAB_H_
#define SLATEBANDIT_MAB_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slatebandit/arm_stats.h"
#include "slatebandit/rng.h"
#include "slatebandit/types.h"

namespace slatebandit {

inline constexpr std::int64_t kSecondsPerDay = 24 * 60 * 60;

enum class Combiner {
  // log q = lambda * log q_click + (1 - lambda) * log q_survey, with
  // lambda = k / (k + survey trials in context).
  kInterpolate,
  // q = q_click * q_survey.
  kProduct,
};

Combiner CombinerFromString(std::string_view text);
std::string_view ToString(Combiner combiner);

struct LambdaConfig {
  Combiner combiner = Combiner::kInterpolate;
  double k_lambda = 50.0;

  friend bool operator==(const LambdaConfig&, const LambdaConfig&) = default;
};

struct ScoreWeights {
  double click = 1.0;
  double survey = 0.0;
};

// exp(w.click * log q_click + w.survey * log q_survey). Degenerate weights
// return the corresponding draw unchanged.
double CombineScores(double q_click, double q_survey, ScoreWeights weights);

struct ScoredId {
  std::string id;
  double score;
};

// Descending score; ties go to the lexicographically smaller id.
void SortByScore(std::vector<ScoredId>& scored);

class ContextBank {
 public:
  explicit ContextBank(std::string context_id,
                       std::int64_t window_seconds = 28 * kSecondsPerDay,
                       LambdaConfig lambda = {});

  const std::string& context_id() const { return context_id_; }
  std::int64_t window_seconds() const { return window_seconds_; }
  const LambdaConfig& lambda_config() const { return lambda_; }
  std::int64_t clock() const { return clock_; }

  const std::map<std::string, ArmStats>& click_stats() const {
    return click_;
  }
  const std::map<std::string, ArmStats>& survey_stats() const {
    return survey_;
  }
  const ArmStats* FindClick(const std::string& id) const;
  const ArmStats* FindSurvey(const std::string& id) const;

  // Registers a candidate with zero click counters. Returns false when the
  // action is already present.
  bool AddCandidate(const std::string& id);
  bool HasCandidate(const std::string& id) const { return click_.contains(id); }
  // Content candidates, excluding the null item, in id order.
  std::vector<std::string> CandidateIds() const;

  // Replaces the survey counters of a registered action.
  void SetSurveyStats(const std::string& id, ArmStats stats);

  // Moves the clock forward and drops entries that left the window.
  void AdvanceClock(std::int64_t now);

  double SurveyTrialsTotal() const;
  double Lambda() const;
  ScoreWeights Weights(const std::string& id) const;
  ArmPosterior Posterior(const std::string& id) const;

  // One joint Thompson score. The action must be registered.
  double JointScore(const std::string& id, Rng& rng) const;
  // As JointScore, but unregistered actions draw from the uniform prior.
  double JointScoreOrPrior(const std::string& id, Rng& rng) const;
  // Same draws with Lambda() precomputed, for scoring many actions at once.
  double JointScore(const std::string& id, double lambda, Rng& rng) const;
  double JointScoreOrPrior(const std::string& id, double lambda, Rng& rng) const;

  // Applies one logged interaction (window eviction first):
  //  - every content action above the null item gets a click trial, the
  //    clicked one a click success;
  //  - when some content was observed, the null item gets a click trial,
  //    and a success when no content was clicked;
  //  - the clicked action's survey arm absorbs yes (1, 1) or no (0, 1);
  //  - a free-typed session's answered survey goes to the null item.
  void Update(const LoggedEvent& event);

  // Same counters with each arm collapsed to one entry at the current
  // clock. Scores identically; meant for read-only serving snapshots.
  ContextBank Compacted() const;

  nlohmann::json ToJson() const;
  static ContextBank FromJson(const nlohmann::json& j);

  friend bool operator==(const ContextBank&, const ContextBank&) = default;

 private:
  ScoreWeights WeightsWith(const std::string& id, double lambda) const;

  std::string context_id_;
  std::int64_t window_seconds_;
  LambdaConfig lambda_;
  std::int64_t clock_ = 0;
  std::map<std::string, ArmStats> click_;
  std::map<std::string, ArmStats> survey_;
};

// Top-k candidates by one round of joint-score draws. Candidates fewer than k
// are all returned (in ranked order).
std::vector<std::string> PreSample(const ContextBank& bank,
                                   std::span<const std::string> candidates,
                                   std::size_t k, Rng& rng);

// One round of joint-score draws over `ids`, ranked.
std::vector<ScoredId> RankByJointScore(const ContextBank& bank,
                                       std::span<const std::string> ids,
                                       Rng& rng);

// Monte-Carlo probability of each arm being ranked first, replaying the
// logged posterior parameters n_draws times.
std::map<std::string, double> EstimatePropensities(
    const PosteriorTable& posteriors, Rng& rng, int n_draws);

}  // namespace slatebandit

#endif  // SLATEBANDIT_MAB_H_
