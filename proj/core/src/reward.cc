#include "slatebandit/reward.h"

#include <string>

namespace slatebandit {

RewardMode RewardModeFromString(std::string_view text) {
  if (text == "survey_only") return RewardMode::kSurveyOnly;
  if (text == "survey_and_escalation") return RewardMode::kSurveyAndEscalation;
  throw ValidationError("unknown reward mode '" + std::string(text) + "'");
}

std::string_view ToString(RewardMode mode) {
  return mode == RewardMode::kSurveyOnly ? "survey_only"
                                         : "survey_and_escalation";
}

std::optional<double> RewardOf(const Feedback& feedback,
                               const RewardSpec& spec) {
  std::optional<double> reward;
  if (feedback.survey == Survey::kYes) reward = 1.0;
  if (feedback.survey == Survey::kNo) reward = -1.0;
  if (spec.mode == RewardMode::kSurveyOnly) return reward;

  if (spec.escalation_weight > 0.0) {
    throw ValidationError("reward spec: escalation_weight must be <= 0");
  }
  if (feedback.escalation) {
    return reward.value_or(0.0) + spec.escalation_weight;
  }
  return reward;
}

}  // namespace slatebandit
