#include "slatebandit/arm_stats.h"

#include <algorithm>
#include <cmath>

namespace slatebandit {

ArmStats ArmStats::FromCounts(double alpha, double trials, std::int64_t ts) {
  ArmStats stats;
  if (trials > 0.0 || alpha > 0.0) stats.Add(ts, alpha, trials);
  return stats;
}

void ArmStats::Add(std::int64_t ts, double successes, double trials) {
  if (!(successes >= 0.0 && successes <= trials) || !std::isfinite(trials)) {
    throw ValidationError("arm stats: increments must satisfy 0 <= s <= n");
  }
  if (!entries_.empty() && ts < entries_.back().ts) {
    throw ValidationError("arm stats: entries must be added in time order");
  }
  if (!entries_.empty() && entries_.back().ts == ts) {
    entries_.back().successes += successes;
    entries_.back().trials += trials;
  } else {
    entries_.push_back({ts, successes, trials});
  }
  alpha_ += successes;
  trials_ += trials;
}

void ArmStats::EvictThrough(std::int64_t cutoff) {
  bool evicted = false;
  while (!entries_.empty() && entries_.front().ts <= cutoff) {
    entries_.pop_front();
    evicted = true;
  }
  if (evicted) Resum();
}

void ArmStats::Resum() {
  alpha_ = 0.0;
  trials_ = 0.0;
  for (const Entry& e : entries_) {
    alpha_ += e.successes;
    trials_ += e.trials;
  }
  alpha_ = std::clamp(alpha_, 0.0, trials_);
}

nlohmann::json ArmStats::ToJson() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const Entry& e : entries_) {
    entries.push_back(nlohmann::json::array({e.ts, e.successes, e.trials}));
  }
  return {{"alpha", alpha_}, {"trials", trials_}, {"entries", entries}};
}

ArmStats ArmStats::FromJson(const nlohmann::json& j) {
  ArmStats stats;
  for (const auto& e : j.at("entries")) {
    stats.Add(e.at(0).get<std::int64_t>(), e.at(1).get<double>(),
              e.at(2).get<double>());
  }
  return stats;
}

bool operator==(const ArmStats& a, const ArmStats& b) {
  if (a.alpha_ != b.alpha_ || a.trials_ != b.trials_ ||
      a.entries_.size() != b.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.ts != y.ts || x.successes != y.successes || x.trials != y.trials) {
      return false;
    }
  }
  return true;
}

double SampleScore(const PosteriorCounts& counts, Rng& rng) {
  const double failures = std::max(0.0, counts.trials - counts.alpha);
  return SampleBeta(counts.alpha + 1.0, failures + 1.0, rng);
}

}  // namespace slatebandit
