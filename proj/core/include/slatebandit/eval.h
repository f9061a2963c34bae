// Off-policy evaluation on logged interactions (self-normalized inverse
// propensity scoring on the clicked action) and per-event KPI approximations.

#ifndef SLATEBANDIT_EVAL_H_
#define SLATEBANDIT_EVAL_H_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slatebandit/reward.h"
#include "slatebandit/types.h"

namespace slatebandit {

struct OpeResult {
  double snips_estimate = 0.0;
  double logging_policy_mean = 0.0;
  double effective_sample_size = 0.0;
  double variance_estimate = 0.0;
  double matched_fraction = 0.0;
  std::size_t usable_events = 0;
  std::size_t matched_events = 0;

  nlohmann::json ToJson() const;
};

// Target policy: per-action probabilities for a context.
using TargetPolicy =
    std::function<std::map<std::string, double>(const LoggedEvent& event)>;

// Raised when usable events lack a logged propensity.
class MissingPropensityError : public ValidationError {
 public:
  MissingPropensityError(const std::string& what, std::vector<std::size_t> ids)
      : ValidationError(what), event_ids(std::move(ids)) {}
  std::vector<std::size_t> event_ids;  // positions in the input sequence
};

// Usable events are those with a clicked content action and a reward under
// `spec`. Each is weighted by rho = pi(a_clicked | x) / mu(a_clicked | x)
// with mu the logged propensity; rho = 0 drops events where the target
// policy never picks the clicked action.
//   estimate = sum rho r / sum rho
//   ESS      = (sum rho)^2 / sum rho^2
//   variance = sum rho^2 (r - estimate)^2 / (sum rho)^2
// Throws MissingPropensityError listing offending positions, and
// NoDataError when nothing is usable or no event matches.
OpeResult Snips(std::span<const LoggedEvent> events, const TargetPolicy& target,
                const RewardSpec& spec);

// Exact-merge accumulator behind Snips, for partitioned evaluation.
struct SnipsAccumulator {
  double sum_rho = 0.0;
  double sum_rho_r = 0.0;
  double sum_rho_sq = 0.0;
  double sum_rho_sq_r = 0.0;
  double sum_rho_sq_r_sq = 0.0;
  double sum_reward = 0.0;
  std::size_t usable = 0;
  std::size_t matched = 0;

  void Add(double rho, double reward);
  void Merge(const SnipsAccumulator& other);
  OpeResult Finish() const;
};

struct GateThresholds {
  double variance_ceiling = 0.05;
  double ess_floor = 100.0;
};

struct GateVerdict {
  bool pass = false;
  std::vector<std::string> reasons;  // one per failed clause
};

GateVerdict PromotionGate(const OpeResult& candidate,
                          const GateThresholds& thresholds);

// yes / (yes + no) over answered surveys; nullopt when none was answered.
std::optional<double> PrrHat(std::span<const LoggedEvent> events);
// Mean escalation indicator. Throws NoDataError on an empty sequence.
double EasHat(std::span<const LoggedEvent> events);

}  // namespace slatebandit

#endif  // SLATEBANDIT_EVAL_H_
