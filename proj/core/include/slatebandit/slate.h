#ifndef SLATEBANDIT_SLATE_H_
#define SLATEBANDIT_SLATE_H_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slatebandit/types.h"

namespace slatebandit {

enum class SlateMode {
  kRecommendation,  // slates always end with the null item
  kDisambiguation,  // may directly trigger a single action
};

struct SlatePolicyConfig {
  SlateMode mode = SlateMode::kRecommendation;
  int max_length = 7;  // including the null item
  bool allow_direct_trigger = false;
  // Top score must beat the null item's score by this much to trigger.
  double direct_trigger_margin = 0.4;
  bool safe_exploration = false;
  // Context id -> baseline content actions (the null item is appended).
  std::map<std::string, std::vector<Action>> baseline;

  void Validate() const;
};

struct ScoredAction {
  Action action;
  double score;
};

struct SlateDecision {
  Slate served;
  std::vector<ScoredAction> scored_all;  // ranked
  std::size_t null_position = 0;         // index of the null item in scored_all
  bool used_baseline = false;
  // Summed score of the baseline slate when the safe gate ran.
  std::optional<double> baseline_value;
  bool direct_trigger = false;
  // First-slot probability of each ranked action, when known in closed form.
  std::optional<std::map<std::string, double>> propensities;
  // Posterior parameters behind the scores, for offline reconstruction.
  std::optional<PosteriorTable> posteriors;
};

// Builds the served slate from a ranked list: every action above the null
// item up to max_length - 1 content slots, then the null item. In
// disambiguation mode with direct triggering allowed, a top action that
// clears the margin over the null item is served alone. Throws
// ValidationError when the null item is missing or repeated.
SlateDecision Assemble(std::vector<ScoredAction> ranked,
                       const SlatePolicyConfig& cfg);

// True when a disambiguation slate holds only the null item, i.e. the agent
// gives up on the query.
bool IsGiveUp(const SlateDecision& decision, const SlatePolicyConfig& cfg);

using ScoreFn = std::function<double(const Action&)>;

// Sum of the scores of every action in the slate.
double SlateValue(const Slate& slate);

// Serves the baseline slate (content + null item) only when its value is
// strictly higher than the sampled slate's. Baseline actions reuse their
// score from the sampled round when they were scored there, and call
// `score_fn` otherwise.
SlateDecision SafeGate(SlateDecision sampled,
                       std::span<const Action> baseline_content,
                       const ScoreFn& score_fn);

// Content actions the user saw: everything served above the null item.
std::vector<std::string> ObservedActions(const SlateDecision& decision);
std::vector<std::string> ObservedActions(const Slate& served);

}  // namespace slatebandit

#endif  // SLATEBANDIT_SLATE_H_
