#ifndef SLATEBANDIT_EVENT_LOG_H_
#define SLATEBANDIT_EVENT_LOG_H_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "slatebandit/types.h"

namespace slatebandit {

// Append-only, line-delimited interaction log. One writer per file; readers
// see the prefix written so far.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);

  // Validates and appends. Throws ValidationError on a malformed event, in
  // which case nothing is written.
  void Append(const LoggedEvent& event);

  std::size_t size() const { return size_; }
  const std::filesystem::path& path() const { return path_; }

  // All events in timestamp order (stable for equal timestamps).
  std::vector<LoggedEvent> Replay() const;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t size_ = 0;
};

// Reads a log file; blank lines are skipped. Events come back in timestamp
// order.
std::vector<LoggedEvent> ReadEventLog(const std::filesystem::path& path);

std::string EncodeEventLog(std::span<const LoggedEvent> events);

}  // namespace slatebandit

#endif  // SLATEBANDIT_EVENT_LOG_H_
