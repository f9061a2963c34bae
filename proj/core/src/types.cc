#include "slatebandit/types.h"

#include <cmath>
#include <set>

namespace slatebandit {

Action NullAction() {
  Action null_item;
  null_item.id = std::string(kNullActionId);
  null_item.title = "None of the above";
  null_item.is_null_item = true;
  return null_item;
}

std::optional<std::size_t> Slate::NullSlot() const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].is_null_item) return i;
  }
  return std::nullopt;
}

std::string_view ToString(Survey survey) {
  switch (survey) {
    case Survey::kYes:
      return "yes";
    case Survey::kNo:
      return "no";
    case Survey::kSkipped:
      return "skipped";
  }
  return "skipped";
}

Survey SurveyFromString(std::string_view text) {
  if (text == "yes") return Survey::kYes;
  if (text == "no") return Survey::kNo;
  if (text == "skipped") return Survey::kSkipped;
  throw ValidationError("survey must be one of yes/no/skipped, got '" +
                        std::string(text) + "'");
}

const Action* LoggedEvent::ClickedAction() const {
  if (!feedback.click) return nullptr;
  const int slot = *feedback.click;
  if (slot < 0 || static_cast<std::size_t>(slot) >= slate.items.size()) {
    return nullptr;
  }
  const Action& action = slate.items[slot];
  return action.is_null_item ? nullptr : &action;
}

void ValidateSlate(const Slate& slate) {
  if (slate.items.size() != slate.scores.size()) {
    throw ValidationError("slate: scores must be parallel to items");
  }
  std::set<std::string_view> seen;
  int null_count = 0;
  for (const Action& action : slate.items) {
    if (action.id.empty()) throw ValidationError("slate: empty action id");
    if (!seen.insert(action.id).second) {
      throw ValidationError("slate: duplicate action id '" + action.id + "'");
    }
    if (action.is_null_item) {
      ++null_count;
      if (action.id != kNullActionId) {
        throw ValidationError("slate: null item must use the reserved id");
      }
    } else if (action.id == kNullActionId) {
      throw ValidationError("slate: content action uses the reserved null id");
    }
  }
  if (null_count > 1) {
    throw ValidationError("slate: null item appears more than once");
  }
  for (double score : slate.scores) {
    if (!std::isfinite(score)) throw ValidationError("slate: non-finite score");
  }
}

void ValidateEvent(const LoggedEvent& event) {
  ValidateSlate(event.slate);
  const Feedback& fb = event.feedback;
  if (fb.click) {
    const int slot = *fb.click;
    if (slot < 0 || static_cast<std::size_t>(slot) >= event.slate.size()) {
      throw ValidationError("feedback: click index " + std::to_string(slot) +
                            " outside served slate of length " +
                            std::to_string(event.slate.size()));
    }
    if (event.slate.items[slot].is_null_item) {
      throw ValidationError(
          "feedback: click must not index the null item's slot");
    }
    if (fb.free_type) {
      throw ValidationError("feedback: free_type requires no content click");
    }
  }
  if (event.propensity) {
    const double p = *event.propensity;
    if (!(p > 0.0 && p <= 1.0)) {
      throw ValidationError("event: propensity must lie in (0, 1]");
    }
  }
  if (event.posteriors) {
    for (const Action& action : event.slate.items) {
      if (!event.posteriors->contains(action.id)) {
        throw ValidationError("event: posteriors do not cover action '" +
                              action.id + "'");
      }
    }
    for (const auto& [id, post] : *event.posteriors) {
      auto check = [&id](const PosteriorCounts& c) {
        if (!(c.alpha >= 0.0 && c.alpha <= c.trials)) {
          throw ValidationError("event: posterior for '" + id +
                                "' violates 0 <= alpha <= trials");
        }
      };
      check(post.click);
      if (post.survey) check(*post.survey);
    }
  }
}

}  // namespace slatebandit
