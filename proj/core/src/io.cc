#include "slatebandit/io.h"

#include <fstream>
#include <sstream>
#include <system_error>

namespace slatebandit {

namespace {

Json CountsToJson(const PosteriorCounts& c) { return Json::array({c.alpha, c.trials}); }

PosteriorCounts CountsFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw ValidationError("posterior counts must be [alpha, trials]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

FeatureValues FeaturesFromJson(const Json& j) {
  FeatureValues out;
  if (j.is_null()) return out;
  for (const auto& [key, value] : j.items()) out[key] = value.get<std::string>();
  return out;
}

}  // namespace

Json ToJson(const Context& context) {
  Json j;
  j["id"] = context.id;
  j["features"] = context.features;
  j["query"] = context.query ? Json(*context.query) : Json(nullptr);
  return j;
}

Context ContextFromJson(const Json& j) {
  Context c;
  c.id = j.at("id").get<std::string>();
  if (j.contains("features")) c.features = FeaturesFromJson(j["features"]);
  if (j.contains("query") && !j["query"].is_null()) {
    c.query = j["query"].get<std::string>();
  }
  return c;
}

Json ToJson(const Action& action) {
  Json j;
  j["id"] = action.id;
  j["title"] = action.title;
  j["null"] = action.is_null_item;
  j["payload"] = action.payload_features;
  return j;
}

Action ActionFromJson(const Json& j) {
  Action a;
  a.id = j.at("id").get<std::string>();
  a.title = j.value("title", std::string());
  a.is_null_item = j.value("null", false);
  if (j.contains("payload")) a.payload_features = FeaturesFromJson(j["payload"]);
  return a;
}

Json ToJson(const Slate& slate) {
  Json items = Json::array();
  for (const Action& a : slate.items) items.push_back(ToJson(a));
  Json j;
  j["items"] = std::move(items);
  j["scores"] = slate.scores;
  return j;
}

Slate SlateFromJson(const Json& j) {
  Slate s;
  for (const Json& item : j.at("items")) s.items.push_back(ActionFromJson(item));
  s.scores = j.at("scores").get<std::vector<double>>();
  return s;
}

Json ToJson(const PosteriorTable& table) {
  Json j = Json::object();
  for (const auto& [id, post] : table) {
    Json p;
    p["click"] = CountsToJson(post.click);
    p["survey"] = post.survey ? CountsToJson(*post.survey) : Json(nullptr);
    p["weights"] = Json::array({post.click_weight, post.survey_weight});
    j[id] = std::move(p);
  }
  return j;
}

PosteriorTable PosteriorTableFromJson(const Json& j) {
  PosteriorTable table;
  for (const auto& [id, p] : j.items()) {
    ArmPosterior post;
    post.click = CountsFromJson(p.at("click"));
    if (p.contains("survey") && !p["survey"].is_null()) {
      post.survey = CountsFromJson(p["survey"]);
    }
    if (p.contains("weights")) {
      post.click_weight = p["weights"].at(0).get<double>();
      post.survey_weight = p["weights"].at(1).get<double>();
    }
    table[id] = post;
  }
  return table;
}

Json ToJson(const LoggedEvent& event) {
  Json j;
  j["ts"] = event.timestamp;
  j["ctx"] = ToJson(event.context);
  j["slate"] = ToJson(event.slate);
  j["click"] = event.feedback.click ? Json(*event.feedback.click) : Json(nullptr);
  j["survey"] = std::string(ToString(event.feedback.survey));
  j["escalation"] = event.feedback.escalation;
  j["propensity"] = event.propensity ? Json(*event.propensity) : Json(nullptr);
  j["posteriors"] =
      event.posteriors ? ToJson(*event.posteriors) : Json(nullptr);
  j["policy"] = event.policy_tag;
  if (event.feedback.free_type) j["free_type"] = true;
  return j;
}

LoggedEvent EventFromJson(const Json& j) {
  LoggedEvent e;
  e.timestamp = j.at("ts").get<std::int64_t>();
  e.context = ContextFromJson(j.at("ctx"));
  e.slate = SlateFromJson(j.at("slate"));
  if (j.contains("click") && !j["click"].is_null()) {
    e.feedback.click = j["click"].get<int>();
  }
  e.feedback.survey = SurveyFromString(j.at("survey").get<std::string>());
  e.feedback.escalation = j.value("escalation", false);
  e.feedback.free_type = j.value("free_type", false);
  if (j.contains("propensity") && !j["propensity"].is_null()) {
    e.propensity = j["propensity"].get<double>();
  }
  if (j.contains("posteriors") && !j["posteriors"].is_null()) {
    e.posteriors = PosteriorTableFromJson(j["posteriors"]);
  }
  e.policy_tag = j.value("policy", std::string());
  return e;
}

std::string EncodeEvent(const LoggedEvent& event) {
  return ToJson(event).dump();
}

LoggedEvent DecodeEvent(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& err) {
    throw ValidationError(std::string("event log: malformed record: ") +
                          err.what());
  }
  try {
    return EventFromJson(j);
  } catch (const Json::exception& err) {
    throw ValidationError(std::string("event log: bad field: ") + err.what());
  }
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw std::runtime_error("cannot rename " + tmp.string() + ": " +
                             ec.message());
  }
}

Json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  WriteFileAtomic(path, j.dump(2) + "\n");
}

}  // namespace slatebandit
