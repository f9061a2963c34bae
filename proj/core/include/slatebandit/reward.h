#ifndef SLATEBANDIT_REWARD_H_
#define SLATEBANDIT_REWARD_H_

#include <optional>
#include <string_view>

#include "slatebandit/types.h"

namespace slatebandit {

enum class RewardMode { kSurveyOnly, kSurveyAndEscalation };

struct RewardSpec {
  RewardMode mode = RewardMode::kSurveyOnly;
  double escalation_weight = 0.0;  // must be <= 0
};

RewardMode RewardModeFromString(std::string_view text);
std::string_view ToString(RewardMode mode);

// Maps feedback to a scalar reward. A skipped survey yields no reward sample
// (not zero) unless an escalation contributes one.
std::optional<double> RewardOf(const Feedback& feedback,
                               const RewardSpec& spec);

}  // namespace slatebandit

#endif  // SLATEBANDIT_REWARD_H_
