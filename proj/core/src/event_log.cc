#include "slatebandit/event_log.h"

#include <algorithm>
#include <sstream>

#include "slatebandit/io.h"

namespace slatebandit {

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    size_ = ReadEventLog(path_).size();
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("cannot open log " + path_.string());
}

void EventLog::Append(const LoggedEvent& event) {
  ValidateEvent(event);
  out_ << EncodeEvent(event) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed on " + path_.string());
  ++size_;
}

std::vector<LoggedEvent> EventLog::Replay() const { return ReadEventLog(path_); }

std::vector<LoggedEvent> ReadEventLog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log " + path.string());
  std::vector<LoggedEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      events.push_back(DecodeEvent(line));
      ValidateEvent(events.back());
    } catch (const ValidationError& err) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + err.what());
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const LoggedEvent& a, const LoggedEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  return events;
}

std::string EncodeEventLog(std::span<const LoggedEvent> events) {
  std::string out;
  for (const LoggedEvent& e : events) {
    out += EncodeEvent(e);
    out += '\n';
  }
  return out;
}

}  // namespace slatebandit
