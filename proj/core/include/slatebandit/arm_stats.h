#ifndef SLATEBANDIT_ARM_STATS_H_
#define SLATEBANDIT_ARM_STATS_H_

#include <cstdint>
#include <deque>

#include <nlohmann/json.hpp>

#include "slatebandit/rng.h"
#include "slatebandit/types.h"

namespace slatebandit {

// Windowed success/trial counters of one (context, action, signal) triple.
// alpha and trials are the sums of the retained entries; counts may be
// fractional.
class ArmStats {
 public:
  struct Entry {
    std::int64_t ts;
    double successes;
    double trials;
  };

  ArmStats() = default;
  // A single entry holding the given totals.
  static ArmStats FromCounts(double alpha, double trials, std::int64_t ts = 0);

  void Add(std::int64_t ts, double successes, double trials);
  // Drops every entry with ts <= cutoff.
  void EvictThrough(std::int64_t cutoff);

  double alpha() const { return alpha_; }
  double trials() const { return trials_; }
  double failures() const { return trials_ - alpha_; }
  PosteriorCounts counts() const { return {alpha_, trials_}; }
  const std::deque<Entry>& entries() const { return entries_; }

  nlohmann::json ToJson() const;
  static ArmStats FromJson(const nlohmann::json& j);

  friend bool operator==(const ArmStats& a, const ArmStats& b);

 private:
  void Resum();

  std::deque<Entry> entries_;
  double alpha_ = 0.0;
  double trials_ = 0.0;
};

// One Thompson draw from Beta(alpha + 1, trials - alpha + 1).
double SampleScore(const PosteriorCounts& counts, Rng& rng);
inline double SampleScore(const ArmStats& stats, Rng& rng) {
  return SampleScore(stats.counts(), rng);
}

}  // namespace slatebandit

#endif  // SLATEBANDIT_ARM_STATS_H_
