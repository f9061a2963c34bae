// Synthetic ground truth for the closed-loop simulator. This is test
// scaffolding standing in for production traffic: users pick among the
// served content items with weights p_click (the null item gets
// max(1 - max p_click, floor)), answer the survey with p_yes unless they
// skip, and may escalate after a bad outcome.

#ifndef SLATEBANDIT_WORLD_H_
#define SLATEBANDIT_WORLD_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "slatebandit/types.h"

namespace slatebandit {

struct ActionTruth {
  double p_click = 0.0;
  double p_yes = 0.0;
  // Chance of escalating after answering the survey "no".
  double p_escalate_on_failure = 0.3;
};

struct ContextSpec {
  std::string id;
  double weight = 1.0;
  FeatureValues features;
  std::vector<std::string> queries;     // rich contexts draw one per event
  std::vector<std::string> candidates;  // initial recommendation pool
  // Where free-typed queries resolve (id -> weight). May include actions
  // outside the candidate pool.
  std::map<std::string, double> free_type_targets;
};

struct LinearTruth {
  int d = 0;
  Eigen::VectorXd w_star;
  std::map<std::string, std::map<std::string, Eigen::VectorXd>> features;
};

struct WorldSpec {
  std::uint64_t seed = 0;
  std::int64_t seconds_per_event = 60;
  double survey_skip_rate = 0.7;
  // Chance of escalating when the served slate holds no content.
  double p_escalate_on_empty = 0.3;
  double null_weight_floor = 0.05;
  // Probability that a user who picks the null item types a query. Zero
  // disables the free-type branch.
  double free_type_rate = 0.0;

  std::map<std::string, Action> actions;
  std::vector<ContextSpec> contexts;
  std::map<std::string, std::map<std::string, ActionTruth>> truth;
  std::map<std::string, std::vector<std::string>> baseline;
  std::optional<LinearTruth> linear;

  void Validate() const;
  const ContextSpec& Context(const std::string& id) const;
  const ActionTruth& Truth(const std::string& context_id,
                           const std::string& action_id) const;
  std::vector<Action> Candidates(const std::string& context_id) const;
  std::vector<Action> BaselineSlate(const std::string& context_id) const;

  nlohmann::json ToJson() const;
  static WorldSpec FromJson(const nlohmann::json& j);
};

// Probability that the user clicks each content item of `served` (parallel
// to its content items); the remainder goes to the null item. A slate
// without the null item is a direct trigger: the single item is delivered.
std::vector<double> ClickProbabilities(const WorldSpec& world,
                                       const std::string& context_id,
                                       const Slate& served);

// Expected number of "yes" outcomes per event for the served slate.
double SlateValue(const WorldSpec& world, const std::string& context_id,
                  const Slate& served);

// Expected answered-survey and yes-answer mass per event for a served slate,
// counting surveys from the free-text branch. Their ratio is the expected
// PRR of always serving this slate.
struct SurveyMass {
  double yes = 0.0;
  double answered = 0.0;
};
SurveyMass ExpectedSurvey(const WorldSpec& world, const std::string& context_id,
                          const Slate& served);

// Best SlateValue over all slates of at most max_content items (plus the
// null item) drawn from every action with ground truth in the context; a
// direct trigger is also considered when allowed.
double OracleSlateValue(const WorldSpec& world, const std::string& context_id,
                        int max_content, bool allow_direct_trigger);

// Content action with the highest p_yes in the initial pool.
std::string BestActionByYes(const WorldSpec& world, const std::string& context_id);

struct DiscreteWorldOptions {
  int contexts = 5;
  int actions = 20;
  int hidden_per_context = 0;  // reachable only through free-typing
  // Chance that a user who picks the null item types a query; needs hidden
  // actions to resolve to.
  double free_type_rate = 0.0;
  int baseline_size = 3;
  double survey_skip_rate = 0.7;
  std::int64_t seconds_per_event = 60;
  std::uint64_t seed = 1;
};

// Recommendation-style world: one categorical source page per context and a
// shared content catalog with per-context click/yes rates.
WorldSpec MakeDiscreteWorld(const DiscreteWorldOptions& options);

struct LinearWorldOptions {
  int contexts = 5;
  int actions = 20;
  int d = 16;
  double p_click = 0.5;
  double survey_skip_rate = 0.0;
  std::int64_t seconds_per_event = 60;
  std::uint64_t seed = 1;
};

// E[reward | x, a] = w*^T phi(x, a) with reward +-1 on the survey, so
// p_yes = (1 + w*^T phi) / 2. Features are stored in `linear`.
WorldSpec MakeLinearWorld(const LinearWorldOptions& options);

struct TextWorldOptions {
  int intents = 4;
  int actions_per_intent = 3;
  double survey_skip_rate = 0.3;
  std::int64_t seconds_per_event = 60;
  std::uint64_t seed = 1;
};

// Intent-disambiguation world: each context is a latent intent with
// templated queries; actions carry titles sharing the intent's keywords.
WorldSpec MakeTextWorld(const TextWorldOptions& options);

}  // namespace slatebandit

#endif  // SLATEBANDIT_WORLD_H_
