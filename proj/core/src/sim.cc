#include "slatebandit/sim.h"

#include <algorithm>
#include <cstdio>
#include <map>

#include "slatebandit/eval.h"

namespace slatebandit {
namespace {

std::size_t PickWeighted(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] / total;
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

// Uniform draws consumed by one interaction, taken up front so paired runs
// see identical users whatever the policy serves.
struct UserDraws {
  double arrival, query, choice, skip, yes, escalate, free_type, target;

  explicit UserDraws(Rng& rng)
      : arrival(SampleUniform(rng)), query(SampleUniform(rng)),
        choice(SampleUniform(rng)), skip(SampleUniform(rng)),
        yes(SampleUniform(rng)), escalate(SampleUniform(rng)),
        free_type(SampleUniform(rng)), target(SampleUniform(rng)) {}
};

void DrawSurvey(const WorldSpec& world, const ActionTruth& t,
                const UserDraws& u, Feedback& fb) {
  if (u.skip < world.survey_skip_rate) {
    fb.survey = Survey::kSkipped;
  } else {
    fb.survey = u.yes < t.p_yes ? Survey::kYes : Survey::kNo;
  }
  fb.escalation = fb.survey == Survey::kNo && u.escalate < t.p_escalate_on_failure;
}

double OracleFor(const WorldSpec& world, const std::string& context_id,
                 const SlatePolicyConfig& cfg) {
  const int max_content = cfg.max_length - 1;
  if (max_content < 1) {
    if (!cfg.allow_direct_trigger) return 0.0;
    double best = 0.0;
    for (const auto& [id, t] : world.truth.at(context_id)) best = std::max(best, t.p_yes);
    return best;
  }
  return OracleSlateValue(world, context_id, max_content, cfg.allow_direct_trigger);
}

StepOutcome StepWithOracle(const WorldSpec& world, Policy& policy, std::int64_t ts,
                           Rng& world_rng, Rng& policy_rng,
                           std::map<std::string, double>& oracle_cache) {
  const UserDraws u(world_rng);
  std::vector<double> arrival;
  arrival.reserve(world.contexts.size());
  for (const ContextSpec& c : world.contexts) arrival.push_back(c.weight);
  const ContextSpec& cs = world.contexts[PickWeighted(arrival, u.arrival)];

  Context context{cs.id, cs.features, std::nullopt};
  if (!cs.queries.empty()) {
    const auto qi = std::min(cs.queries.size() - 1,
                             static_cast<std::size_t>(u.query * cs.queries.size()));
    context.query = cs.queries[qi];
  }
  const std::vector<Action> candidates = world.Candidates(cs.id);

  StepOutcome out;
  out.decision = policy.Decide(context, candidates, policy_rng);
  const Slate& served = out.decision.served;
  const std::vector<double> clicks = ClickProbabilities(world, cs.id, served);

  Feedback fb;
  double acc = 0.0;
  for (std::size_t j = 0; j < clicks.size(); ++j) {
    acc += clicks[j];
    if (u.choice < acc) {
      fb.click = static_cast<int>(j);
      break;
    }
  }
  if (fb.click) {
    DrawSurvey(world, world.Truth(cs.id, served.items[*fb.click].id), u, fb);
  } else if (u.free_type < world.free_type_rate) {
    std::vector<std::string> ids;
    std::vector<double> weights;
    for (const auto& [id, w] : cs.free_type_targets) {
      ids.push_back(id);
      weights.push_back(w);
    }
    const std::string& target = ids[PickWeighted(weights, u.target)];
    fb.free_type = true;
    DrawSurvey(world, world.Truth(cs.id, target), u, fb);

    LoggedEvent follow;
    follow.timestamp = ts;
    follow.context = context;
    follow.slate.items = {world.actions.at(target)};
    follow.slate.scores = {0.0};
    follow.feedback.click = 0;
    follow.feedback.survey = fb.survey;
    follow.feedback.escalation = fb.escalation;
    follow.policy_tag = std::string(kDisambiguationTag);
    out.disambiguation = std::move(follow);
  } else if (clicks.empty()) {
    fb.escalation = u.escalate < world.p_escalate_on_empty;
  }

  out.event.timestamp = ts;
  out.event.context = std::move(context);
  out.event.slate = served;
  out.event.feedback = fb;
  out.event.policy_tag = policy.tag();
  policy.Annotate(out.decision, out.event);

  out.expected_value = SlateValue(world, cs.id, served);
  auto it = oracle_cache.find(cs.id);
  if (it == oracle_cache.end()) {
    it = oracle_cache.emplace(cs.id, OracleFor(world, cs.id, policy.slate_config())).first;
  }
  out.oracle_value = it->second;
  return out;
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void Schedule::Validate() const {
  if (aggregation_period < 1 || expansion_period < 1 || refit_period < 1) {
    throw ValidationError("schedule: periods must be positive");
  }
  if (metrics_period < 0) throw ValidationError("schedule: metrics_period must be >= 0");
  if (horizon < 0) throw ValidationError("schedule: horizon must be >= 0");
}

nlohmann::json Schedule::ToJson() const {
  return {{"aggregation_period", aggregation_period},
          {"expansion_period", expansion_period},
          {"refit_period", refit_period},
          {"horizon", horizon},
          {"metrics_period", metrics_period}};
}

Schedule Schedule::FromJson(const nlohmann::json& j) {
  Schedule s;
  try {
    s.aggregation_period = j.value("aggregation_period", s.aggregation_period);
    s.expansion_period = j.value("expansion_period", s.expansion_period);
    s.refit_period = j.value("refit_period", s.refit_period);
    s.horizon = j.value("horizon", s.horizon);
    s.metrics_period = j.value("metrics_period", s.metrics_period);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schedule: ") + e.what());
  }
  s.Validate();
  return s;
}

StepOutcome Step(const WorldSpec& world, Policy& policy, std::int64_t ts,
                 Rng& world_rng, Rng& policy_rng) {
  std::map<std::string, double> cache;
  return StepWithOracle(world, policy, ts, world_rng, policy_rng, cache);
}

KpiCounts KpiCounters(std::span<const LoggedEvent> events) {
  KpiCounts k;
  if (events.empty()) return k;
  std::size_t shs = 0;
  std::size_t ue = 0;
  for (const LoggedEvent& e : events) {
    const bool delivered = e.ClickedAction() != nullptr;
    if (delivered && !e.feedback.escalation && e.feedback.survey != Survey::kNo) ++shs;
    if (delivered || e.feedback.free_type) ++ue;
  }
  const double n = static_cast<double>(events.size());
  k.shs = static_cast<double>(shs) / n;
  k.ue = static_cast<double>(ue) / n;
  return k;
}

std::string MetricsTimeline::ToTsv() const {
  std::string out =
      "window\tstart_ts\tend_ts\tevents\tprr_hat\teas_hat\tshs\tue\t"
      "regret_per_event\tcumulative_regret\tbaseline_served\tmin_gate_margin\t"
      "snapshot\n";
  for (const WindowMetrics& w : windows) {
    out += std::to_string(w.index) + '\t' + std::to_string(w.start_ts) + '\t' +
           std::to_string(w.end_ts) + '\t' + std::to_string(w.events) + '\t' +
           (w.prr_hat ? Fixed(*w.prr_hat) : "NA") + '\t' + Fixed(w.eas_hat) +
           '\t' + Fixed(w.shs) + '\t' + Fixed(w.ue) + '\t' +
           Fixed(w.regret_per_event()) + '\t' + Fixed(w.cumulative_regret) +
           '\t' + std::to_string(w.baseline_served) + '\t' +
           (w.min_gate_margin ? Fixed(*w.min_gate_margin) : "NA") + '\t' +
           w.snapshot + '\n';
  }
  return out;
}

RunResult Run(const WorldSpec& world, Policy& policy, const Schedule& schedule,
              std::uint64_t seed) {
  world.Validate();
  schedule.Validate();
  RunResult result;
  Rng policy_rng(SeedFor(seed, 2));
  std::map<std::string, double> oracle_cache;

  std::int64_t next_agg = schedule.aggregation_period;
  std::int64_t next_exp = schedule.expansion_period;
  std::int64_t next_refit = schedule.refit_period;
  std::size_t agg_from = 0;
  std::size_t refit_from = 0;
  const std::int64_t width = schedule.window();
  const std::string tag = policy.tag();

  std::optional<WindowMetrics> current;
  std::vector<LoggedEvent> window_events;
  double cumulative = 0.0;
  auto close_window = [&] {
    if (!current) return;
    const std::optional<double> prr = PrrHat(window_events);
    current->prr_hat = prr;
    current->events = window_events.size();
    current->eas_hat = EasHat(window_events);
    const KpiCounts k = KpiCounters(window_events);
    current->shs = k.shs;
    current->ue = k.ue;
    current->cumulative_regret = cumulative;
    current->snapshot = policy.SnapshotDigest();
    result.timeline.windows.push_back(std::move(*current));
    current.reset();
    window_events.clear();
  };
  auto count_serving = [&](std::size_t from, std::size_t to) {
    std::size_t n = 0;
    for (std::size_t i = from; i < to; ++i) n += result.events[i].policy_tag == tag;
    return n;
  };

  for (std::int64_t t = 0; t < schedule.horizon; ++t) {
    const std::int64_t ts = t * world.seconds_per_event;
    const std::int64_t index = ts / width;
    if (current && current->index != index) close_window();

    while (std::min({next_agg, next_exp, next_refit}) <= ts) {
      const std::int64_t b = std::min({next_agg, next_exp, next_refit});
      const std::span<const LoggedEvent> all(result.events);
      if (next_agg == b) {
        result.aggregated_events += count_serving(agg_from, all.size());
        policy.Aggregate(all.subspan(agg_from), b);
        agg_from = all.size();
        next_agg += schedule.aggregation_period;
      }
      if (next_exp == b) {
        policy.Expand(b, SeedFor(seed, 3, static_cast<std::uint64_t>(b)));
        next_exp += schedule.expansion_period;
      }
      if (next_refit == b) {
        policy.Refit(all.subspan(refit_from), b);
        refit_from = all.size();
        next_refit += schedule.refit_period;
      }
    }

    if (!current) {
      current.emplace();
      current->index = index;
      current->start_ts = index * width;
      current->end_ts = (index + 1) * width;
    }
    Rng world_rng(SeedFor(seed, 1, static_cast<std::uint64_t>(t)));
    StepOutcome out =
        StepWithOracle(world, policy, ts, world_rng, policy_rng, oracle_cache);

    double regret = out.oracle_value - out.expected_value;
    // Summation order differs between the oracle and the served slate.
    if (regret < 0.0 && regret > -1e-12) regret = 0.0;
    current->regret += regret;
    cumulative += regret;
    if (out.decision.used_baseline) ++current->baseline_served;
    if (out.decision.baseline_value) {
      const double margin = SlateValue(out.decision.served) - *out.decision.baseline_value;
      current->min_gate_margin =
          current->min_gate_margin ? std::min(*current->min_gate_margin, margin) : margin;
    }
    window_events.push_back(out.event);
    result.events.push_back(std::move(out.event));
    if (out.disambiguation) result.events.push_back(std::move(*out.disambiguation));
  }
  close_window();
  return result;
}

}  // namespace slatebandit
