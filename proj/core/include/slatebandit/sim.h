// Closed-loop simulation: serve, log, and run the aggregation, expansion and
// refit jobs at schedule boundaries, then summarize each window.

#ifndef SLATEBANDIT_SIM_H_
#define SLATEBANDIT_SIM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slatebandit/policy.h"
#include "slatebandit/rng.h"
#include "slatebandit/types.h"
#include "slatebandit/world.h"

namespace slatebandit {

struct Schedule {
  std::int64_t aggregation_period = 4 * 60 * 60;
  std::int64_t expansion_period = kSecondsPerDay;
  std::int64_t refit_period = 60 * 60;
  std::int64_t horizon = 10000;  // events
  // Width of a metrics window; zero means the aggregation period.
  std::int64_t metrics_period = 0;

  void Validate() const;
  std::int64_t window() const {
    return metrics_period > 0 ? metrics_period : aggregation_period;
  }
  nlohmann::json ToJson() const;
  static Schedule FromJson(const nlohmann::json& j);
};

struct StepOutcome {
  LoggedEvent event;
  // Follow-up record of the free-text flow, when the user typed a query.
  std::optional<LoggedEvent> disambiguation;
  SlateDecision decision;
  double expected_value = 0.0;  // SlateValue of the served slate
  double oracle_value = 0.0;
};

// One interaction at simulated time `ts`. `world_rng` drives the user and
// the arrival; `policy_rng` drives the policy.
StepOutcome Step(const WorldSpec& world, Policy& policy, std::int64_t ts,
                 Rng& world_rng, Rng& policy_rng);

struct KpiCounts {
  double shs = 0.0;
  double ue = 0.0;
};

// SHS: delivered answer (content click) with no escalation and survey not
// "no". UE: clicked content or typed a query. Fractions of `events`; zero
// for an empty sequence.
KpiCounts KpiCounters(std::span<const LoggedEvent> events);

struct WindowMetrics {
  std::int64_t index = 0;
  std::int64_t start_ts = 0;
  std::int64_t end_ts = 0;
  std::size_t events = 0;
  std::optional<double> prr_hat;
  double eas_hat = 0.0;
  double shs = 0.0;
  double ue = 0.0;
  double regret = 0.0;  // summed over the window
  double cumulative_regret = 0.0;
  std::size_t baseline_served = 0;
  // Smallest (served - baseline) summed score under the safe gate.
  std::optional<double> min_gate_margin;
  std::string snapshot;

  double regret_per_event() const {
    return events ? regret / static_cast<double>(events) : 0.0;
  }
};

struct MetricsTimeline {
  std::vector<WindowMetrics> windows;

  // Tab-separated table with a header row.
  std::string ToTsv() const;
};

struct RunResult {
  std::vector<LoggedEvent> events;  // serving and free-text records, in order
  MetricsTimeline timeline;
  std::size_t aggregated_events = 0;  // serving events handed to Aggregate
};

// Runs `schedule.horizon` events starting at ts 0. Job order at a shared
// boundary: aggregation, expansion, refit.
RunResult Run(const WorldSpec& world, Policy& policy, const Schedule& schedule,
              std::uint64_t seed);

}  // namespace slatebandit

#endif  // SLATEBANDIT_SIM_H_
