#include "slatebandit/slate.h"

#include <algorithm>

namespace slatebandit {

void SlatePolicyConfig::Validate() const {
  if (max_length < 1) throw ValidationError("slate config: L must be >= 1");
  if (allow_direct_trigger && mode != SlateMode::kDisambiguation) {
    throw ValidationError(
        "slate config: direct trigger requires disambiguation mode");
  }
  if (!(direct_trigger_margin >= 0.0)) {
    throw ValidationError("slate config: direct trigger margin must be >= 0");
  }
}

SlateDecision Assemble(std::vector<ScoredAction> ranked,
                       const SlatePolicyConfig& cfg) {
  cfg.Validate();
  std::optional<std::size_t> null_pos;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i].action.is_null_item) continue;
    if (null_pos) throw ValidationError("assemble: null item appears twice");
    null_pos = i;
  }
  if (!null_pos) throw ValidationError("assemble: missing null item");

  SlateDecision decision;
  decision.null_position = *null_pos;
  const ScoredAction& null_item = ranked[*null_pos];

  if (cfg.allow_direct_trigger && *null_pos >= 1 &&
      ranked.front().score - null_item.score >= cfg.direct_trigger_margin) {
    decision.direct_trigger = true;
    decision.served.items.push_back(ranked.front().action);
    decision.served.scores.push_back(ranked.front().score);
  } else {
    const std::size_t content =
        std::min<std::size_t>(*null_pos, static_cast<std::size_t>(cfg.max_length - 1));
    for (std::size_t i = 0; i < content; ++i) {
      decision.served.items.push_back(ranked[i].action);
      decision.served.scores.push_back(ranked[i].score);
    }
    decision.served.items.push_back(null_item.action);
    decision.served.scores.push_back(null_item.score);
  }
  ValidateSlate(decision.served);
  decision.scored_all = std::move(ranked);
  return decision;
}

bool IsGiveUp(const SlateDecision& decision, const SlatePolicyConfig& cfg) {
  return cfg.mode == SlateMode::kDisambiguation &&
         decision.served.size() == 1 && decision.served.items[0].is_null_item;
}

double SlateValue(const Slate& slate) {
  double total = 0.0;
  for (double s : slate.scores) total += s;
  return total;
}

SlateDecision SafeGate(SlateDecision sampled,
                       std::span<const Action> baseline_content,
                       const ScoreFn& score_fn) {
  auto scored_in_round = [&sampled](const std::string& id) -> const ScoredAction* {
    for (const ScoredAction& s : sampled.scored_all) {
      if (s.action.id == id) return &s;
    }
    return nullptr;
  };

  Slate baseline;
  for (const Action& a : baseline_content) {
    if (a.is_null_item) continue;
    const ScoredAction* prior = scored_in_round(a.id);
    baseline.items.push_back(a);
    baseline.scores.push_back(prior ? prior->score : score_fn(a));
  }
  const ScoredAction* null_scored = scored_in_round(std::string(kNullActionId));
  baseline.items.push_back(NullAction());
  baseline.scores.push_back(null_scored ? null_scored->score
                                        : score_fn(NullAction()));
  ValidateSlate(baseline);

  sampled.baseline_value = SlateValue(baseline);
  if (*sampled.baseline_value > SlateValue(sampled.served)) {
    sampled.served = std::move(baseline);
    sampled.used_baseline = true;
    sampled.direct_trigger = false;
  } else {
    sampled.used_baseline = false;
  }
  return sampled;
}

std::vector<std::string> ObservedActions(const Slate& served) {
  std::vector<std::string> ids;
  for (const Action& a : served.items) {
    if (a.is_null_item) break;
    ids.push_back(a.id);
  }
  return ids;
}

std::vector<std::string> ObservedActions(const SlateDecision& decision) {
  return ObservedActions(decision.served);
}

}  // namespace slatebandit
