#include "slatebandit/expansion.h"

namespace slatebandit {

void ExpansionConfig::Validate() const {
  if (min_trials < 1) throw ValidationError("expansion: min_trials must be >= 1");
  if (!(fp > 0.0 && fp < 1.0)) throw ValidationError("expansion: fp must lie in (0, 1)");
  if (mc_draws < 1) throw ValidationError("expansion: mc_draws must be >= 1");
}

double ProbBetter(const ArmStats& candidate, const ArmStats& null_item,
                  int mc_draws, Rng& rng) {
  if (mc_draws < 1) throw ValidationError("prob_better: mc_draws must be >= 1");
  long wins = 0;
  for (int i = 0; i < mc_draws; ++i) {
    const double p_cand = SampleScore(candidate, rng);
    const double p_null = SampleScore(null_item, rng);
    if (p_cand > p_null) ++wins;
  }
  return static_cast<double>(wins) / mc_draws;
}

bool ClearsFalsePositiveBound(double prob_better, double fp) {
  return prob_better >= 1.0 - fp;
}

std::string_view ToString(ExpansionVerdict verdict) {
  switch (verdict) {
    case ExpansionVerdict::kPromoted:
      return "promoted";
    case ExpansionVerdict::kInsufficientTrials:
      return "filtered_min_trials";
    case ExpansionVerdict::kBelowConfidence:
      return "filtered_confidence";
    case ExpansionVerdict::kIncumbent:
      return "skipped_incumbent";
  }
  return "unknown";
}

nlohmann::json ExpansionReport::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const ExpansionEntry& e : entries) {
    rows.push_back({{"action", e.action_id},
                    {"trials", e.trials},
                    {"successes", e.successes},
                    {"prob_better", e.prob_better ? nlohmann::json(*e.prob_better)
                                                  : nlohmann::json(nullptr)},
                    {"verdict", std::string(ToString(e.verdict))}});
  }
  return {{"format", "slatebandit.expansion_report/1"},
          {"context_id", context_id},
          {"candidates", rows},
          {"promoted", promoted}};
}

ExpansionReport Expand(ContextBank& source_bank,
                       const std::map<std::string, ArmStats>& foreign_survey,
                       const ExpansionConfig& cfg, std::uint64_t job_seed) {
  cfg.Validate();
  const std::string null_id(kNullActionId);
  const ArmStats* null_survey = source_bank.FindSurvey(null_id);
  const ArmStats null_stats = null_survey ? *null_survey : ArmStats();

  ExpansionReport report;
  report.context_id = source_bank.context_id();
  for (const auto& [id, stats] : foreign_survey) {
    if (id == null_id) continue;
    ExpansionEntry entry;
    entry.action_id = id;
    entry.trials = stats.trials();
    entry.successes = stats.alpha();
    if (source_bank.HasCandidate(id)) {
      entry.verdict = ExpansionVerdict::kIncumbent;
    } else if (stats.trials() < cfg.min_trials) {
      entry.verdict = ExpansionVerdict::kInsufficientTrials;
    } else {
      Rng rng(SeedFor(job_seed, StableHash(id)));
      entry.prob_better = ProbBetter(stats, null_stats, cfg.mc_draws, rng);
      entry.verdict = ClearsFalsePositiveBound(*entry.prob_better, cfg.fp)
                          ? ExpansionVerdict::kPromoted
                          : ExpansionVerdict::kBelowConfidence;
    }
    report.entries.push_back(entry);
  }
  // Scoring above reads the pre-job bank only.
  for (const ExpansionEntry& entry : report.entries) {
    if (entry.verdict != ExpansionVerdict::kPromoted) continue;
    source_bank.AddCandidate(entry.action_id);
    source_bank.SetSurveyStats(entry.action_id,
                               foreign_survey.at(entry.action_id));
    report.promoted.push_back(entry.action_id);
  }
  return report;
}

}  // namespace slatebandit
