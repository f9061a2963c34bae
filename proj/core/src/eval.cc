#include "slatebandit/eval.h"

#include <algorithm>

namespace slatebandit {

nlohmann::json OpeResult::ToJson() const {
  return {{"snips_estimate", snips_estimate},
          {"logging_policy_mean", logging_policy_mean},
          {"effective_sample_size", effective_sample_size},
          {"variance_estimate", variance_estimate},
          {"matched_fraction", matched_fraction},
          {"usable_events", usable_events},
          {"matched_events", matched_events}};
}

void SnipsAccumulator::Add(double rho, double reward) {
  ++usable;
  sum_reward += reward;
  if (rho <= 0.0) return;
  ++matched;
  sum_rho += rho;
  sum_rho_r += rho * reward;
  const double rho_sq = rho * rho;
  sum_rho_sq += rho_sq;
  sum_rho_sq_r += rho_sq * reward;
  sum_rho_sq_r_sq += rho_sq * reward * reward;
}

void SnipsAccumulator::Merge(const SnipsAccumulator& other) {
  sum_rho += other.sum_rho;
  sum_rho_r += other.sum_rho_r;
  sum_rho_sq += other.sum_rho_sq;
  sum_rho_sq_r += other.sum_rho_sq_r;
  sum_rho_sq_r_sq += other.sum_rho_sq_r_sq;
  sum_reward += other.sum_reward;
  usable += other.usable;
  matched += other.matched;
}

OpeResult SnipsAccumulator::Finish() const {
  if (usable == 0) throw NoDataError("snips: no usable events");
  if (matched == 0 || !(sum_rho > 0.0)) {
    throw NoDataError("snips: target policy matches no logged clicked action");
  }
  OpeResult r;
  r.usable_events = usable;
  r.matched_events = matched;
  r.snips_estimate = sum_rho_r / sum_rho;
  r.logging_policy_mean = sum_reward / static_cast<double>(usable);
  r.effective_sample_size = sum_rho * sum_rho / sum_rho_sq;
  const double v = r.snips_estimate;
  const double spread =
      sum_rho_sq_r_sq - 2.0 * v * sum_rho_sq_r + v * v * sum_rho_sq;
  r.variance_estimate = std::max(0.0, spread) / (sum_rho * sum_rho);
  r.matched_fraction =
      static_cast<double>(matched) / static_cast<double>(usable);
  return r;
}

OpeResult Snips(std::span<const LoggedEvent> events, const TargetPolicy& target,
                const RewardSpec& spec) {
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const LoggedEvent& e = events[i];
    if (e.ClickedAction() == nullptr || !RewardOf(e.feedback, spec)) continue;
    if (!e.propensity || !(*e.propensity > 0.0)) missing.push_back(i);
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      if (i) ids += ", ";
      ids += std::to_string(missing[i]);
    }
    if (missing.size() > 20) ids += ", ...";
    throw MissingPropensityError(
        "snips: " + std::to_string(missing.size()) +
            " usable event(s) lack a propensity: " + ids,
        std::move(missing));
  }

  SnipsAccumulator acc;
  for (const LoggedEvent& e : events) {
    const Action* clicked = e.ClickedAction();
    if (clicked == nullptr) continue;
    const std::optional<double> reward = RewardOf(e.feedback, spec);
    if (!reward) continue;
    const std::map<std::string, double> pi = target(e);
    auto it = pi.find(clicked->id);
    const double pi_a = it == pi.end() ? 0.0 : it->second;
    acc.Add(pi_a / *e.propensity, *reward);
  }
  return acc.Finish();
}

GateVerdict PromotionGate(const OpeResult& candidate,
                          const GateThresholds& thresholds) {
  GateVerdict verdict;
  if (!(candidate.snips_estimate > candidate.logging_policy_mean)) {
    verdict.reasons.push_back("estimate does not exceed logging policy mean");
  }
  if (!(candidate.variance_estimate <= thresholds.variance_ceiling)) {
    verdict.reasons.push_back("variance above ceiling");
  }
  if (!(candidate.effective_sample_size >= thresholds.ess_floor)) {
    verdict.reasons.push_back("insufficient effective sample size");
  }
  verdict.pass = verdict.reasons.empty();
  return verdict;
}

std::optional<double> PrrHat(std::span<const LoggedEvent> events) {
  std::size_t yes = 0;
  std::size_t no = 0;
  for (const LoggedEvent& e : events) {
    if (e.feedback.survey == Survey::kYes) ++yes;
    if (e.feedback.survey == Survey::kNo) ++no;
  }
  if (yes + no == 0) return std::nullopt;
  return static_cast<double>(yes) / static_cast<double>(yes + no);
}

double EasHat(std::span<const LoggedEvent> events) {
  if (events.empty()) throw NoDataError("eas_hat: no events");
  std::size_t escalations = 0;
  for (const LoggedEvent& e : events) escalations += e.feedback.escalation ? 1 : 0;
  return static_cast<double>(escalations) / static_cast<double>(events.size());
}

}  // namespace slatebandit
