#include "slatebandit/world.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slatebandit/io.h"
#include "slatebandit/rng.h"

namespace slatebandit {
namespace {

void CheckProbability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("world: " + what + " must lie in [0, 1]");
  }
}

std::vector<double> ToVector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd FromVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

double NullWeight(double max_click, double floor) {
  return std::max(1.0 - max_click, floor);
}

struct Item {
  double click;
  double yes_mass;  // click * p_yes
};

// max (a0 + sum a) / (b0 + sum b) over subsets of `items` of size <= slots.
// Dinkelbach iteration; each step is an exact top-`slots` selection.
double BestRatio(double a0, double b0, const std::vector<Item>& items,
                 int slots) {
  double t = a0 / b0;
  std::vector<double> gains;
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    gains.assign(items.size(), 0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
      gains[i] = items[i].yes_mass - t * items[i].click;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return gains[x] > gains[y]; });
    double a = a0;
    double b = b0;
    for (int j = 0; j < slots && j < static_cast<int>(order.size()); ++j) {
      if (!(gains[order[j]] > 0.0)) break;
      a += items[order[j]].yes_mass;
      b += items[order[j]].click;
    }
    const double next = a / b;
    if (!(next > t * (1.0 + 1e-15) + 1e-300)) return std::max(t, next);
    t = next;
  }
  return t;
}

}  // namespace

void WorldSpec::Validate() const {
  if (seconds_per_event < 1) {
    throw ValidationError("world: seconds_per_event must be >= 1");
  }
  CheckProbability(survey_skip_rate, "survey_skip_rate");
  CheckProbability(p_escalate_on_empty, "p_escalate_on_empty");
  CheckProbability(null_weight_floor, "null_weight_floor");
  CheckProbability(free_type_rate, "free_type_rate");
  if (contexts.empty()) throw ValidationError("world: no contexts");
  double weight_sum = 0.0;
  std::map<std::string, int> seen;
  for (const ContextSpec& c : contexts) {
    if (++seen[c.id] > 1) throw ValidationError("world: duplicate context " + c.id);
    if (!(c.weight >= 0.0)) throw ValidationError("world: negative arrival weight");
    weight_sum += c.weight;
    if (c.candidates.empty()) {
      throw ValidationError("world: context " + c.id + " has no candidates");
    }
    auto truth_it = truth.find(c.id);
    if (truth_it == truth.end()) {
      throw ValidationError("world: no ground truth for context " + c.id);
    }
    for (const std::string& a : c.candidates) {
      if (!actions.contains(a)) throw ValidationError("world: unknown action " + a);
      if (!truth_it->second.contains(a)) {
        throw ValidationError("world: no ground truth for (" + c.id + ", " + a + ")");
      }
    }
    for (const auto& [a, w] : c.free_type_targets) {
      if (!actions.contains(a) || !truth_it->second.contains(a)) {
        throw ValidationError("world: free-type target " + a + " lacks ground truth");
      }
      if (!(w >= 0.0)) throw ValidationError("world: negative free-type weight");
    }
    if (free_type_rate > 0.0 && c.free_type_targets.empty()) {
      throw ValidationError("world: context " + c.id + " has no free-type targets");
    }
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw ValidationError("world: arrival weights must sum to 1");
  }
  for (const auto& [ctx, row] : truth) {
    for (const auto& [a, t] : row) {
      if (!actions.contains(a)) throw ValidationError("world: unknown action " + a);
      CheckProbability(t.p_click, "p_click");
      CheckProbability(t.p_yes, "p_yes");
      CheckProbability(t.p_escalate_on_failure, "p_escalate_on_failure");
    }
  }
  for (const auto& [id, a] : actions) {
    if (id != a.id || a.is_null_item || id == kNullActionId) {
      throw ValidationError("world: bad action entry " + id);
    }
  }
  for (const auto& [ctx, ids] : baseline) {
    for (const std::string& a : ids) {
      if (!truth.contains(ctx) || !truth.at(ctx).contains(a)) {
        throw ValidationError("world: baseline action " + a + " lacks ground truth");
      }
    }
  }
  if (linear) {
    if (linear->d < 1 || linear->w_star.size() != linear->d) {
      throw ValidationError("world: linear w_star has the wrong dimension");
    }
    for (const auto& [ctx, row] : linear->features) {
      for (const auto& [a, phi] : row) {
        if (phi.size() != linear->d) {
          throw ValidationError("world: linear feature has the wrong dimension");
        }
      }
    }
  }
}

const ContextSpec& WorldSpec::Context(const std::string& id) const {
  for (const ContextSpec& c : contexts) {
    if (c.id == id) return c;
  }
  throw ValidationError("world: unknown context " + id);
}

const ActionTruth& WorldSpec::Truth(const std::string& context_id,
                                    const std::string& action_id) const {
  auto row = truth.find(context_id);
  if (row != truth.end()) {
    auto it = row->second.find(action_id);
    if (it != row->second.end()) return it->second;
  }
  throw ValidationError("world: no ground truth for (" + context_id + ", " +
                        action_id + ")");
}

std::vector<Action> WorldSpec::Candidates(const std::string& context_id) const {
  std::vector<Action> out;
  for (const std::string& id : Context(context_id).candidates) {
    out.push_back(actions.at(id));
  }
  return out;
}

std::vector<Action> WorldSpec::BaselineSlate(const std::string& context_id) const {
  std::vector<Action> out;
  auto it = baseline.find(context_id);
  if (it == baseline.end()) return out;
  for (const std::string& id : it->second) out.push_back(actions.at(id));
  return out;
}

nlohmann::json WorldSpec::ToJson() const {
  nlohmann::json j;
  j["format"] = "slatebandit.world/1";
  j["seed"] = seed;
  j["seconds_per_event"] = seconds_per_event;
  j["survey_skip_rate"] = survey_skip_rate;
  j["p_escalate_on_empty"] = p_escalate_on_empty;
  j["null_weight_floor"] = null_weight_floor;
  j["free_type_rate"] = free_type_rate;
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& [id, a] : actions) acts.push_back(slatebandit::ToJson(a));
  j["actions"] = acts;
  nlohmann::json ctxs = nlohmann::json::array();
  for (const ContextSpec& c : contexts) {
    nlohmann::json cj = {{"id", c.id},
                         {"weight", c.weight},
                         {"features", c.features},
                         {"queries", c.queries},
                         {"candidates", c.candidates}};
    if (!c.free_type_targets.empty()) cj["free_type_targets"] = c.free_type_targets;
    ctxs.push_back(cj);
  }
  j["contexts"] = ctxs;
  nlohmann::json tj = nlohmann::json::object();
  for (const auto& [ctx, row] : truth) {
    for (const auto& [a, t] : row) {
      tj[ctx][a] = {{"p_click", t.p_click},
                    {"p_yes", t.p_yes},
                    {"p_escalate_on_failure", t.p_escalate_on_failure}};
    }
  }
  j["truth"] = tj;
  if (!baseline.empty()) j["baseline"] = baseline;
  if (linear) {
    nlohmann::json fj = nlohmann::json::object();
    for (const auto& [ctx, row] : linear->features) {
      for (const auto& [a, phi] : row) fj[ctx][a] = ToVector(phi);
    }
    j["linear"] = {{"d", linear->d},
                   {"w_star", ToVector(linear->w_star)},
                   {"features", fj}};
  }
  return j;
}

WorldSpec WorldSpec::FromJson(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "slatebandit.world/1") {
      throw ValidationError("world: unsupported format");
    }
    WorldSpec w;
    w.seed = j.value("seed", std::uint64_t{0});
    w.seconds_per_event = j.value("seconds_per_event", std::int64_t{60});
    w.survey_skip_rate = j.value("survey_skip_rate", 0.7);
    w.p_escalate_on_empty = j.value("p_escalate_on_empty", 0.3);
    w.null_weight_floor = j.value("null_weight_floor", 0.05);
    w.free_type_rate = j.value("free_type_rate", 0.0);
    for (const nlohmann::json& aj : j.at("actions")) {
      Action a = ActionFromJson(aj);
      w.actions.emplace(a.id, a);
    }
    for (const nlohmann::json& cj : j.at("contexts")) {
      ContextSpec c;
      c.id = cj.at("id").get<std::string>();
      c.weight = cj.value("weight", 0.0);
      c.features = cj.value("features", FeatureValues{});
      c.queries = cj.value("queries", std::vector<std::string>{});
      c.candidates = cj.at("candidates").get<std::vector<std::string>>();
      c.free_type_targets =
          cj.value("free_type_targets", std::map<std::string, double>{});
      w.contexts.push_back(std::move(c));
    }
    for (const auto& [ctx, row] : j.at("truth").items()) {
      for (const auto& [a, tj] : row.items()) {
        ActionTruth t;
        t.p_click = tj.at("p_click").get<double>();
        t.p_yes = tj.at("p_yes").get<double>();
        t.p_escalate_on_failure = tj.value("p_escalate_on_failure", 0.3);
        w.truth[ctx][a] = t;
      }
    }
    if (j.contains("baseline")) {
      w.baseline = j.at("baseline").get<std::map<std::string, std::vector<std::string>>>();
    }
    if (j.contains("linear")) {
      const nlohmann::json& lj = j.at("linear");
      LinearTruth lt;
      lt.d = lj.at("d").get<int>();
      lt.w_star = FromVector(lj.at("w_star").get<std::vector<double>>());
      for (const auto& [ctx, row] : lj.at("features").items()) {
        for (const auto& [a, v] : row.items()) {
          lt.features[ctx][a] = FromVector(v.get<std::vector<double>>());
        }
      }
      w.linear = std::move(lt);
    }
    w.Validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("world: malformed spec: ") + e.what());
  }
}

std::vector<double> ClickProbabilities(const WorldSpec& world,
                                       const std::string& context_id,
                                       const Slate& served) {
  const std::optional<std::size_t> null_slot = served.NullSlot();
  const std::size_t n_content = null_slot ? *null_slot : served.size();
  std::vector<double> weights(n_content);
  double max_click = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n_content; ++i) {
    weights[i] = world.Truth(context_id, served.items[i].id).p_click;
    max_click = std::max(max_click, weights[i]);
    sum += weights[i];
  }
  if (!null_slot) {
    // Direct trigger: the single item is delivered without a choice.
    if (n_content == 1) return {1.0};
    if (!(sum > 0.0)) return std::vector<double>(n_content, 0.0);
    for (double& w : weights) w /= sum;
    return weights;
  }
  if (n_content == 0) return weights;
  const double total = sum + NullWeight(max_click, world.null_weight_floor);
  for (double& w : weights) w /= total;
  return weights;
}

double SlateValue(const WorldSpec& world, const std::string& context_id,
                  const Slate& served) {
  const std::vector<double> p = ClickProbabilities(world, context_id, served);
  double value = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    value += p[i] * world.Truth(context_id, served.items[i].id).p_yes;
  }
  return value;
}

SurveyMass ExpectedSurvey(const WorldSpec& world, const std::string& context_id,
                          const Slate& served) {
  const std::vector<double> p = ClickProbabilities(world, context_id, served);
  const double answer = 1.0 - world.survey_skip_rate;
  SurveyMass m;
  double clicked = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    clicked += p[i];
    m.answered += answer * p[i];
    m.yes += answer * p[i] * world.Truth(context_id, served.items[i].id).p_yes;
  }
  const ContextSpec& c = world.Context(context_id);
  if (served.NullSlot() && world.free_type_rate > 0.0) {
    double total = 0.0;
    double yes = 0.0;
    for (const auto& [id, w] : c.free_type_targets) {
      total += w;
      yes += w * world.Truth(context_id, id).p_yes;
    }
    const double typed = std::max(0.0, 1.0 - clicked) * world.free_type_rate;
    if (total > 0.0) {
      m.answered += answer * typed;
      m.yes += answer * typed * yes / total;
    }
  }
  return m;
}

double OracleSlateValue(const WorldSpec& world, const std::string& context_id,
                        int max_content, bool allow_direct_trigger) {
  if (max_content < 1) throw ValidationError("oracle: max_content must be >= 1");
  auto row = world.truth.find(context_id);
  if (row == world.truth.end()) {
    throw ValidationError("oracle: unknown context " + context_id);
  }
  std::vector<Item> items;
  double best_yes = 0.0;
  for (const auto& [id, t] : row->second) {
    items.push_back({t.p_click, t.p_click * t.p_yes});
    best_yes = std::max(best_yes, t.p_yes);
  }
  // Fix the largest-click member m; it sets the null weight, and the rest
  // come from items ranked after it by click rate.
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& x, const Item& y) { return x.click > y.click; });
  double best = 0.0;
  for (std::size_t m = 0; m < items.size(); ++m) {
    const double a0 = items[m].yes_mass;
    const double b0 =
        items[m].click + NullWeight(items[m].click, world.null_weight_floor);
    if (!(b0 > 0.0)) continue;
    const std::vector<Item> rest(items.begin() + static_cast<std::ptrdiff_t>(m) + 1,
                                 items.end());
    best = std::max(best, BestRatio(a0, b0, rest, max_content - 1));
  }
  if (allow_direct_trigger) best = std::max(best, best_yes);
  return best;
}

std::string BestActionByYes(const WorldSpec& world, const std::string& context_id) {
  const ContextSpec& c = world.Context(context_id);
  std::string best;
  double best_yes = -1.0;
  for (const std::string& a : c.candidates) {
    const double p = world.Truth(context_id, a).p_yes;
    if (p > best_yes) {
      best_yes = p;
      best = a;
    }
  }
  return best;
}

namespace {

std::string Pad(int i, int width) {
  std::string s = std::to_string(i);
  return std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

void NormalizeWeights(std::vector<ContextSpec>& contexts) {
  double sum = 0.0;
  for (const ContextSpec& c : contexts) sum += c.weight;
  for (ContextSpec& c : contexts) c.weight /= sum;
  // Push the rounding residue onto the last context.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < contexts.size(); ++i) rest -= contexts[i].weight;
  contexts.back().weight = rest;
}

std::vector<std::string> TopBy(const std::map<std::string, ActionTruth>& row,
                               const std::vector<std::string>& pool, int n,
                               double (*key)(const ActionTruth&)) {
  std::vector<std::string> ids = pool;
  std::stable_sort(ids.begin(), ids.end(), [&](const std::string& x, const std::string& y) {
    return key(row.at(x)) > key(row.at(y));
  });
  ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(n)));
  return ids;
}

}  // namespace

WorldSpec MakeDiscreteWorld(const DiscreteWorldOptions& o) {
  if (o.contexts < 1 || o.actions < 1 || o.hidden_per_context < 0) {
    throw ValidationError("discrete world: sizes must be positive");
  }
  Rng rng(SeedFor(o.seed, 0x776f726c64));
  WorldSpec w;
  w.seed = o.seed;
  w.seconds_per_event = o.seconds_per_event;
  w.survey_skip_rate = o.survey_skip_rate;
  w.free_type_rate = o.free_type_rate;
  if (o.free_type_rate > 0.0 && o.hidden_per_context < 1) {
    throw ValidationError("discrete world: free-typing needs hidden actions");
  }

  const int catalog = o.actions + o.contexts * o.hidden_per_context;
  for (int a = 0; a < catalog; ++a) {
    Action act;
    act.id = "a" + Pad(a, 3);
    act.title = "article " + std::to_string(a);
    w.actions.emplace(act.id, act);
  }
  for (int c = 0; c < o.contexts; ++c) {
    ContextSpec ctx;
    ctx.id = "page" + Pad(c, 2);
    ctx.weight = 0.5 + SampleUniform(rng);
    ctx.features = {{"source", ctx.id}};
    auto& row = w.truth[ctx.id];
    // Relevance drives both rates, with independent jitter so the click and
    // survey orders disagree. Cubing leaves few relevant articles per page.
    for (int a = 0; a < o.actions; ++a) {
      const std::string id = "a" + Pad(a, 3);
      const double u = SampleUniform(rng);
      const double rel = u * u * u;
      ActionTruth t;
      t.p_click = 0.05 + 0.6 * rel + 0.1 * SampleUniform(rng);
      t.p_yes = 0.1 + 0.7 * rel + 0.15 * SampleUniform(rng);
      t.p_escalate_on_failure = 0.3;
      row[id] = t;
      ctx.candidates.push_back(id);
    }
    // Typed queries resolve to articles outside the pool, about as well as
    // a decent recommendation.
    for (int h = 0; h < o.hidden_per_context; ++h) {
      const std::string id = "a" + Pad(o.actions + c * o.hidden_per_context + h, 3);
      ActionTruth t;
      t.p_click = 0.3 + 0.3 * SampleUniform(rng);
      t.p_yes = 0.55 + 0.3 * SampleUniform(rng);
      row[id] = t;
      ctx.free_type_targets[id] = 1.0;
    }
    if (o.baseline_size > 0) {
      w.baseline[ctx.id] = TopBy(row, ctx.candidates, o.baseline_size,
                                 [](const ActionTruth& t) { return t.p_click * t.p_yes; });
    }
    w.contexts.push_back(std::move(ctx));
  }
  NormalizeWeights(w.contexts);
  w.Validate();
  return w;
}

WorldSpec MakeLinearWorld(const LinearWorldOptions& o) {
  if (o.contexts < 1 || o.actions < 1 || o.d < 1) {
    throw ValidationError("linear world: sizes must be positive");
  }
  CheckProbability(o.p_click, "p_click");
  Rng rng(SeedFor(o.seed, 0x6c696e));
  WorldSpec w;
  w.seed = o.seed;
  w.seconds_per_event = o.seconds_per_event;
  w.survey_skip_rate = o.survey_skip_rate;
  LinearTruth lt;
  lt.d = o.d;
  lt.w_star = Eigen::VectorXd(o.d);
  for (int i = 0; i < o.d; ++i) lt.w_star[i] = SampleStandardNormal(rng);
  lt.w_star *= 2.0 / lt.w_star.norm();
  for (int a = 0; a < o.actions; ++a) {
    Action act;
    act.id = "a" + Pad(a, 3);
    act.title = "action " + std::to_string(a);
    w.actions.emplace(act.id, act);
  }
  for (int c = 0; c < o.contexts; ++c) {
    ContextSpec ctx;
    ctx.id = "x" + Pad(c, 2);
    ctx.weight = 1.0;
    ctx.features = {{"segment", ctx.id}};
    for (int a = 0; a < o.actions; ++a) {
      const std::string id = "a" + Pad(a, 3);
      Eigen::VectorXd phi(o.d);
      // Redraw until the mean reward stays inside [-0.95, 0.95] so that
      // p_yes is exactly linear in phi.
      do {
        for (int i = 0; i < o.d; ++i) phi[i] = SampleStandardNormal(rng);
        phi /= phi.norm();
      } while (std::abs(lt.w_star.dot(phi)) > 0.95);
      ActionTruth t;
      t.p_click = o.p_click;
      t.p_yes = 0.5 * (1.0 + lt.w_star.dot(phi));
      w.truth[ctx.id][id] = t;
      lt.features[ctx.id][id] = phi;
      ctx.candidates.push_back(id);
    }
    w.contexts.push_back(std::move(ctx));
  }
  NormalizeWeights(w.contexts);
  w.linear = std::move(lt);
  w.Validate();
  return w;
}

WorldSpec MakeTextWorld(const TextWorldOptions& o) {
  struct Intent {
    const char* name;
    std::vector<const char*> words;
    std::vector<const char*> titles;
  };
  static const std::vector<Intent> kIntents = {
      {"password",
       {"password", "login", "locked", "sign", "account"},
       {"reset your password", "unlock a locked account", "change sign in options",
        "account security checkup"}},
      {"billing",
       {"bill", "charge", "invoice", "payment", "card"},
       {"understand your bill", "dispute a charge", "update payment card",
        "download an invoice"}},
      {"shipping",
       {"package", "delivery", "shipping", "track", "order"},
       {"track your package", "report a late delivery", "change shipping address",
        "cancel an order"}},
      {"install",
       {"install", "setup", "download", "update", "error"},
       {"install the app", "fix setup errors", "download offline installer",
        "update to the latest version"}},
      {"refund",
       {"refund", "return", "money", "back", "cancel"},
       {"request a refund", "start a return", "refund status",
        "cancel a subscription"}},
      {"network",
       {"wifi", "network", "connect", "internet", "slow"},
       {"fix wifi connection", "speed up a slow network", "reset network settings",
        "connect a new device"}},
  };
  static const std::vector<const char*> kTemplates = {
      "my {0} {1} is not working", "how do i {0} {1}", "{0} problem with {1}",
      "help with {1} {0}", "cannot {0} my {1}", "{0} {1}"};
  if (o.intents < 1 || o.intents > static_cast<int>(kIntents.size())) {
    throw ValidationError("text world: intents must lie in [1, 6]");
  }
  if (o.actions_per_intent < 1 || o.actions_per_intent > 4) {
    throw ValidationError("text world: actions_per_intent must lie in [1, 4]");
  }
  Rng rng(SeedFor(o.seed, 0x74657874));
  WorldSpec w;
  w.seed = o.seed;
  w.seconds_per_event = o.seconds_per_event;
  w.survey_skip_rate = o.survey_skip_rate;
  std::vector<std::string> all_actions;
  for (int i = 0; i < o.intents; ++i) {
    for (int k = 0; k < o.actions_per_intent; ++k) {
      Action act;
      act.id = std::string(kIntents[i].name) + "_" + std::to_string(k);
      act.title = kIntents[i].titles[k];
      w.actions.emplace(act.id, act);
      all_actions.push_back(act.id);
    }
  }
  for (int i = 0; i < o.intents; ++i) {
    const Intent& intent = kIntents[i];
    ContextSpec ctx;
    ctx.id = intent.name;
    ctx.weight = 1.0;
    ctx.features = {{"channel", i % 2 == 0 ? "web" : "app"}};
    for (const char* tmpl : kTemplates) {
      for (std::size_t a = 0; a < intent.words.size(); ++a) {
        const std::size_t b = (a + 1) % intent.words.size();
        std::string q = tmpl;
        q.replace(q.find("{0}"), 3, intent.words[a]);
        q.replace(q.find("{1}"), 3, intent.words[b]);
        ctx.queries.push_back(q);
      }
    }
    ctx.candidates = all_actions;
    for (const std::string& a : all_actions) {
      ActionTruth t;
      const bool own = a.rfind(intent.name, 0) == 0;
      if (own) {
        const int k = a.back() - '0';
        t.p_click = 0.5 - 0.08 * k;
        t.p_yes = 0.9 - 0.2 * k;
      } else {
        t.p_click = 0.02 + 0.04 * SampleUniform(rng);
        t.p_yes = 0.05 + 0.1 * SampleUniform(rng);
      }
      w.truth[ctx.id][a] = t;
    }
    w.contexts.push_back(std::move(ctx));
  }
  NormalizeWeights(w.contexts);
  w.Validate();
  return w;
}

}  // namespace slatebandit
