// Daily promotion of actions observed through the free-text flow into a
// source context's candidate pool.

#ifndef SLATEBANDIT_EXPANSION_H_
#define SLATEBANDIT_EXPANSION_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slatebandit/arm_stats.h"
#include "slatebandit/mab.h"
#include "slatebandit/rng.h"

namespace slatebandit {

struct ExpansionConfig {
  int min_trials = 10;
  double fp = 0.05;
  int mc_draws = 100000;

  void Validate() const;
};

// Monte-Carlo estimate of P(p_cand > p_null) with both rates drawn from
// their Beta(alpha + 1, failures + 1) posteriors, over mc_draws paired
// draws.
double ProbBetter(const ArmStats& candidate, const ArmStats& null_item,
                  int mc_draws, Rng& rng);

// prob_better >= 1 - fp.
bool ClearsFalsePositiveBound(double prob_better, double fp);

enum class ExpansionVerdict {
  kPromoted,
  kInsufficientTrials,
  kBelowConfidence,
  kIncumbent,
};

std::string_view ToString(ExpansionVerdict verdict);

struct ExpansionEntry {
  std::string action_id;
  double trials = 0.0;
  double successes = 0.0;
  std::optional<double> prob_better;
  ExpansionVerdict verdict = ExpansionVerdict::kIncumbent;
};

struct ExpansionReport {
  std::string context_id;
  std::vector<ExpansionEntry> entries;  // action id order
  std::vector<std::string> promoted;

  nlohmann::json ToJson() const;
};

// Promotes foreign candidates with at least min_trials survey trials whose
// survey posterior beats the null item's with probability >= 1 - fp. A
// promoted action gets the foreign survey counters and zero click counters.
// Actions already in the bank are left untouched. Each candidate draws from
// its own stream derived from `job_seed` and its id.
ExpansionReport Expand(ContextBank& source_bank,
                       const std::map<std::string, ArmStats>& foreign_survey,
                       const ExpansionConfig& cfg, std::uint64_t job_seed);

}  // namespace slatebandit

#endif  // SLATEBANDIT_EXPANSION_H_
