#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commwatch {

enum class EventSource { dns, http };

std::string_view to_string(EventSource src);

/// One normalized outbound connection record. HTTP metadata fields are
/// absent for DNS-source events.
struct Event {
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::string host;            // resolved host identifier
  std::string domain;          // lowercase, no scheme/path/trailing dot
  std::optional<std::string> dest_ip;
  std::optional<std::string> record_type;  // DNS only, e.g. "A"
  std::optional<std::string> user_agent;
  std::optional<bool> referer_present;
  std::optional<int> status_code;
  EventSource source = EventSource::http;
};

/// Maps (ip, time range) to a host identifier. Ranges for the same ip
/// must not overlap; resolution uses [start_ts, end_ts).
class HostMap {
 public:
  void add(const std::string& ip, std::int64_t start_ts, std::int64_t end_ts,
           const std::string& host);
  std::optional<std::string> resolve(const std::string& ip,
                                     std::int64_t ts) const;
  bool empty() const { return entries_.empty(); }

  static HostMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  struct Range {
    std::int64_t start;
    std::int64_t end;
    std::string host;
  };
  std::map<std::string, std::vector<Range>> entries_;
};

enum class ParseStatus {
  ok,
  skipped,          // discarded by reduction rules (non-A record, IP dest)
  malformed,        // structurally bad line
  unresolved_host,  // source ip has no HostMap entry
};

struct ParseResult {
  ParseStatus status = ParseStatus::malformed;
  Event event;          // valid only when status == ok
  std::string message;  // set for malformed / unresolved_host
};

/// Parses one canonical tab-separated key=value record. Never throws:
/// every line maps to exactly one of {ok, skipped, malformed,
/// unresolved_host}.
ParseResult parse_event_line(std::string_view line, EventSource dialect,
                             const HostMap& host_map);

/// Inverse of parse_event_line for the canonical on-disk format.
std::string format_event_line(const Event& ev);

bool is_ipv4_literal(std::string_view s);

}  // namespace commwatch
