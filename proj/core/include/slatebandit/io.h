// File helpers and the JSON codec for logged events.

#ifndef SLATEBANDIT_IO_H_
#define SLATEBANDIT_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "slatebandit/types.h"

namespace slatebandit {

using Json = nlohmann::json;

Json ToJson(const Context& context);
Context ContextFromJson(const Json& j);
Json ToJson(const Action& action);
Action ActionFromJson(const Json& j);
Json ToJson(const Slate& slate);
Slate SlateFromJson(const Json& j);
Json ToJson(const PosteriorTable& table);
PosteriorTable PosteriorTableFromJson(const Json& j);

// One event per record. Keys: ts, ctx, slate, click, survey, escalation,
// propensity, posteriors, policy, and free_type when set.
Json ToJson(const LoggedEvent& event);
LoggedEvent EventFromJson(const Json& j);

// Single-line encoding used by the event log.
std::string EncodeEvent(const LoggedEvent& event);
LoggedEvent DecodeEvent(std::string_view line);

std::string ReadFile(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& j);

}  // namespace slatebandit

#endif  // SLATEBANDIT_IO_H_
