#include "slatebandit/mab.h"

#include <algorithm>
#include <cmath>

namespace slatebandit {

Combiner CombinerFromString(std::string_view text) {
  if (text == "interpolate") return Combiner::kInterpolate;
  if (text == "product") return Combiner::kProduct;
  throw ValidationError("unknown combiner '" + std::string(text) + "'");
}

std::string_view ToString(Combiner combiner) {
  return combiner == Combiner::kInterpolate ? "interpolate" : "product";
}

double CombineScores(double q_click, double q_survey, ScoreWeights weights) {
  if (weights.survey == 0.0 && weights.click == 1.0) return q_click;
  if (weights.click == 0.0 && weights.survey == 1.0) return q_survey;
  return std::exp(weights.click * std::log(q_click) +
                  weights.survey * std::log(q_survey));
}

void SortByScore(std::vector<ScoredId>& scored) {
  std::sort(scored.begin(), scored.end(),
            [](const ScoredId& a, const ScoredId& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
}

ContextBank::ContextBank(std::string context_id, std::int64_t window_seconds,
                         LambdaConfig lambda)
    : context_id_(std::move(context_id)),
      window_seconds_(window_seconds),
      lambda_(lambda) {
  if (window_seconds_ <= 0) {
    throw ValidationError("context bank: window must be positive");
  }
  if (!(lambda_.k_lambda > 0.0)) {
    throw ValidationError("context bank: k_lambda must be positive");
  }
}

const ArmStats* ContextBank::FindClick(const std::string& id) const {
  auto it = click_.find(id);
  return it == click_.end() ? nullptr : &it->second;
}

const ArmStats* ContextBank::FindSurvey(const std::string& id) const {
  auto it = survey_.find(id);
  return it == survey_.end() ? nullptr : &it->second;
}

bool ContextBank::AddCandidate(const std::string& id) {
  return click_.try_emplace(id).second;
}

std::vector<std::string> ContextBank::CandidateIds() const {
  std::vector<std::string> ids;
  for (const auto& [id, stats] : click_) {
    if (id != kNullActionId) ids.push_back(id);
  }
  return ids;
}

void ContextBank::SetSurveyStats(const std::string& id, ArmStats stats) {
  if (!click_.contains(id)) {
    throw ValidationError("context bank: survey stats for '" + id +
                          "' require click stats");
  }
  survey_[id] = std::move(stats);
}

void ContextBank::AdvanceClock(std::int64_t now) {
  if (now <= clock_) return;
  clock_ = now;
  const std::int64_t cutoff = now - window_seconds_;
  for (auto& [id, stats] : click_) stats.EvictThrough(cutoff);
  for (auto& [id, stats] : survey_) stats.EvictThrough(cutoff);
}

double ContextBank::SurveyTrialsTotal() const {
  double total = 0.0;
  for (const auto& [id, stats] : survey_) total += stats.trials();
  return total;
}

double ContextBank::Lambda() const {
  return lambda_.k_lambda / (lambda_.k_lambda + SurveyTrialsTotal());
}

ScoreWeights ContextBank::Weights(const std::string& id) const {
  return WeightsWith(id, Lambda());
}

ScoreWeights ContextBank::WeightsWith(const std::string& id, double lambda) const {
  if (!survey_.contains(id)) return {1.0, 0.0};
  if (lambda_.combiner == Combiner::kProduct) return {1.0, 1.0};
  return {lambda, 1.0 - lambda};
}

ContextBank ContextBank::Compacted() const {
  ContextBank out(context_id_, window_seconds_, lambda_);
  out.clock_ = clock_;
  for (const auto& [id, stats] : click_) {
    out.click_.emplace(id, ArmStats::FromCounts(stats.alpha(), stats.trials(), clock_));
  }
  for (const auto& [id, stats] : survey_) {
    out.survey_.emplace(id, ArmStats::FromCounts(stats.alpha(), stats.trials(), clock_));
  }
  return out;
}

ArmPosterior ContextBank::Posterior(const std::string& id) const {
  ArmPosterior post;
  if (const ArmStats* click = FindClick(id)) post.click = click->counts();
  if (const ArmStats* survey = FindSurvey(id)) post.survey = survey->counts();
  const ScoreWeights w = Weights(id);
  post.click_weight = w.click;
  post.survey_weight = w.survey;
  return post;
}

double ContextBank::JointScore(const std::string& id, Rng& rng) const {
  return JointScore(id, Lambda(), rng);
}

double ContextBank::JointScore(const std::string& id, double lambda,
                               Rng& rng) const {
  const ArmStats* click = FindClick(id);
  if (click == nullptr) {
    throw ValidationError("context bank: no click stats for '" + id + "'");
  }
  const ScoreWeights w = WeightsWith(id, lambda);
  const double q_click = SampleScore(*click, rng);
  if (w.survey == 0.0) return CombineScores(q_click, 1.0, w);
  const double q_survey = SampleScore(*FindSurvey(id), rng);
  return CombineScores(q_click, q_survey, w);
}

double ContextBank::JointScoreOrPrior(const std::string& id, Rng& rng) const {
  return JointScoreOrPrior(id, Lambda(), rng);
}

double ContextBank::JointScoreOrPrior(const std::string& id, double lambda,
                                      Rng& rng) const {
  if (!HasCandidate(id)) return SampleScore(PosteriorCounts{}, rng);
  return JointScore(id, lambda, rng);
}

void ContextBank::Update(const LoggedEvent& event) {
  if (event.context.id != context_id_) {
    throw ValidationError("context bank '" + context_id_ +
                          "' cannot absorb event for context '" +
                          event.context.id + "'");
  }
  AdvanceClock(event.timestamp);
  const std::int64_t ts = event.timestamp;
  const Slate& slate = event.slate;
  const std::size_t null_slot = slate.NullSlot().value_or(slate.size());
  const Action* clicked = event.ClickedAction();

  for (std::size_t j = 0; j < null_slot; ++j) {
    const std::string& id = slate.items[j].id;
    const bool hit = clicked != nullptr && clicked->id == id;
    click_[id].Add(ts, hit ? 1.0 : 0.0, 1.0);
  }
  const Survey survey = event.feedback.survey;
  if (clicked != nullptr && survey != Survey::kSkipped) {
    survey_[clicked->id].Add(ts, survey == Survey::kYes ? 1.0 : 0.0, 1.0);
  }

  // A null-only slate offers no alternative, so it says nothing about the
  // null item's appeal.
  if (null_slot < slate.size() && null_slot > 0) {
    const std::string null_id(kNullActionId);
    click_[null_id].Add(ts, clicked == nullptr ? 1.0 : 0.0, 1.0);
    if (clicked == nullptr && event.feedback.free_type &&
        survey != Survey::kSkipped) {
      survey_[null_id].Add(ts, survey == Survey::kYes ? 1.0 : 0.0, 1.0);
    }
  }
}

nlohmann::json ContextBank::ToJson() const {
  nlohmann::json click = nlohmann::json::object();
  for (const auto& [id, stats] : click_) click[id] = stats.ToJson();
  nlohmann::json survey = nlohmann::json::object();
  for (const auto& [id, stats] : survey_) survey[id] = stats.ToJson();
  return {
      {"format", "slatebandit.context_bank/1"},
      {"context_id", context_id_},
      {"window_seconds", window_seconds_},
      {"lambda",
       {{"combiner", std::string(ToString(lambda_.combiner))},
        {"k_lambda", lambda_.k_lambda}}},
      {"clock", clock_},
      {"click", click},
      {"survey", survey},
  };
}

ContextBank ContextBank::FromJson(const nlohmann::json& j) {
  LambdaConfig lambda;
  if (j.contains("lambda")) {
    lambda.combiner =
        CombinerFromString(j["lambda"].value("combiner", "interpolate"));
    lambda.k_lambda = j["lambda"].value("k_lambda", 50.0);
  }
  ContextBank bank(j.at("context_id").get<std::string>(),
                   j.at("window_seconds").get<std::int64_t>(), lambda);
  bank.clock_ = j.value("clock", std::int64_t{0});
  for (const auto& [id, stats] : j.at("click").items()) {
    bank.click_[id] = ArmStats::FromJson(stats);
  }
  for (const auto& [id, stats] : j.at("survey").items()) {
    bank.SetSurveyStats(id, ArmStats::FromJson(stats));
  }
  return bank;
}

std::vector<ScoredId> RankByJointScore(const ContextBank& bank,
                                       std::span<const std::string> ids,
                                       Rng& rng) {
  std::vector<ScoredId> scored;
  scored.reserve(ids.size());
  const double lambda = bank.Lambda();
  for (const std::string& id : ids) {
    scored.push_back({id, bank.JointScoreOrPrior(id, lambda, rng)});
  }
  SortByScore(scored);
  return scored;
}

std::vector<std::string> PreSample(const ContextBank& bank,
                                   std::span<const std::string> candidates,
                                   std::size_t k, Rng& rng) {
  if (k < 1) throw ValidationError("pre_sample: k must be at least 1");
  std::vector<ScoredId> scored = RankByJointScore(bank, candidates, rng);
  std::vector<std::string> out;
  out.reserve(std::min(k, scored.size()));
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
    out.push_back(std::move(scored[i].id));
  }
  return out;
}

std::map<std::string, double> EstimatePropensities(
    const PosteriorTable& posteriors, Rng& rng, int n_draws) {
  if (n_draws < 1) {
    throw ValidationError("estimate_propensities: n_draws must be >= 1");
  }
  std::map<std::string, double> freq;
  if (posteriors.empty()) return freq;
  std::map<std::string, long> wins;
  for (const auto& [id, post] : posteriors) wins[id] = 0;
  for (int draw = 0; draw < n_draws; ++draw) {
    const std::string* best = nullptr;
    double best_score = -1.0;
    // std::map iterates in id order, so strict > keeps the smaller id on ties.
    for (const auto& [id, post] : posteriors) {
      const ScoreWeights w{post.click_weight, post.survey_weight};
      const double q_click = SampleScore(post.click, rng);
      double score = q_click;
      if (post.survey && w.survey != 0.0) {
        score = CombineScores(q_click, SampleScore(*post.survey, rng), w);
      } else {
        score = CombineScores(q_click, 1.0, {w.click, 0.0});
      }
      if (score > best_score) {
        best_score = score;
        best = &id;
      }
    }
    ++wins[*best];
  }
  for (const auto& [id, count] : wins) {
    freq[id] = static_cast<double>(count) / n_draws;
  }
  return freq;
}

}  // namespace slatebandit
