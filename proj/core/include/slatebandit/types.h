// Domain types shared across the decision engine: contexts, actions, slates,
// feedback and the logged interaction record.

#ifndef SLATEBANDIT_TYPES_H_
#define SLATEBANDIT_TYPES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slatebandit {

// Reserved id of the "none of the above" pseudo-action. Content ids must not
// collide with it.
inline constexpr std::string_view kNullActionId = "__null__";

// Raised when a value violates one of its documented invariants. The message
// names the violated invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an estimator has nothing to work with (empty training set,
// all-zero sufficient statistics, ...).
class NoDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using FeatureValues = std::map<std::string, std::string>;

struct Context {
  std::string id;
  FeatureValues features;
  std::optional<std::string> query;

  friend bool operator==(const Context&, const Context&) = default;
};

struct Action {
  std::string id;
  std::string title;
  bool is_null_item = false;
  FeatureValues payload_features;

  friend bool operator==(const Action&, const Action&) = default;
};

// The null item. Every candidate set carries exactly one of these.
Action NullAction();

struct Slate {
  std::vector<Action> items;
  std::vector<double> scores;  // parallel to items

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  // Slot of the null item, if present.
  std::optional<std::size_t> NullSlot() const;

  friend bool operator==(const Slate&, const Slate&) = default;
};

enum class Survey { kYes, kNo, kSkipped };

std::string_view ToString(Survey survey);
Survey SurveyFromString(std::string_view text);

struct Feedback {
  // Clicked slot of the served slate, or none. A click never lands on the
  // null item's slot; choosing "none of the above" is encoded as no click.
  std::optional<int> click;
  Survey survey = Survey::kSkipped;
  bool escalation = false;
  // The user picked the null item and went on to type a free-text query.
  bool free_type = false;

  friend bool operator==(const Feedback&, const Feedback&) = default;
};

// Beta-posterior counters of one arm as seen by a logging policy at decision
// time. The score of the arm is
//   exp(click_weight * log q_click + survey_weight * log q_survey)
// with q_* drawn from Beta(alpha + 1, trials - alpha + 1).
struct PosteriorCounts {
  double alpha = 0.0;
  double trials = 0.0;

  friend bool operator==(const PosteriorCounts&, const PosteriorCounts&) =
      default;
};

struct ArmPosterior {
  PosteriorCounts click;
  std::optional<PosteriorCounts> survey;
  double click_weight = 1.0;
  double survey_weight = 0.0;

  friend bool operator==(const ArmPosterior&, const ArmPosterior&) = default;
};

using PosteriorTable = std::map<std::string, ArmPosterior>;

struct LoggedEvent {
  std::int64_t timestamp = 0;
  Context context;
  Slate slate;
  Feedback feedback;
  // Logging-policy probability of the clicked action, in (0, 1].
  std::optional<double> propensity;
  std::optional<PosteriorTable> posteriors;
  std::string policy_tag;

  // The clicked content action, if any.
  const Action* ClickedAction() const;

  friend bool operator==(const LoggedEvent&, const LoggedEvent&) = default;
};

// Checks the slate and event invariants; throws ValidationError naming the
// first violated one.
void ValidateSlate(const Slate& slate);
void ValidateEvent(const LoggedEvent& event);

}  // namespace slatebandit

#endif  // SLATEBANDIT_TYPES_H_
