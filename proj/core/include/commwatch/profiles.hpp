#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "commwatch/event.hpp"

namespace commwatch {

constexpr std::int64_t kSecondsPerDay = 86400;

inline int day_of(std::int64_t ts) {
  return static_cast<int>(ts / kSecondsPerDay);
}

/// Keeps the last `fold_level` dot-separated labels of a domain name.
std::string fold_domain(std::string_view domain, int fold_level);

/// Incrementally built per-day history of folded external destinations.
/// Append-only by day: updates must arrive in strictly increasing day order.
class DomainHistory {
 public:
  /// Ingests one day of events. Throws std::invalid_argument if `day` is not
  /// greater than every day already ingested.
  void update(std::span<const Event> events, int day, int fold_level);

  /// True if the folded domain was first seen on a day < `day`.
  bool seen_before(const std::string& folded, int day) const;
  std::optional<int> first_seen(const std::string& folded) const;
  int day_host_count(const std::string& folded, int day) const;
  int last_day() const { return last_day_; }
  std::size_t size() const { return first_seen_.size(); }

  /// The history as it was before `day` was ingested. Lets an
  /// already-ingested day be re-analyzed against its pre-day snapshot.
  DomainHistory as_of(int day) const;

  void save(const std::filesystem::path& dir) const;
  static DomainHistory load(const std::filesystem::path& dir);

 private:
  std::unordered_map<std::string, int> first_seen_;
  std::map<std::pair<std::string, int>, int> day_hosts_;
  int last_day_ = -1;
};

/// History of user-agent strings and the distinct hosts using them.
class UaHistory {
 public:
  void update(std::span<const Event> events, int day);
  int host_count(const std::string& ua) const;
  std::optional<int> first_seen(const std::string& ua) const;
  std::size_t size() const { return ua_host_first_.size(); }

  /// The history restricted to observations made before `day`.
  UaHistory as_of(int day) const;

  void save(const std::filesystem::path& dir) const;
  static UaHistory load(const std::filesystem::path& dir);

 private:
  // (ua, host) -> day the pair was first observed
  std::unordered_map<std::string, std::unordered_map<std::string, int>>
      ua_host_first_;
  std::unordered_map<std::string, int> first_seen_;
};

/// The day's rare destinations: folded domains that are both new relative to
/// the history and contacted by fewer than `rare_host_threshold` hosts.
struct RareSet {
  int day = 0;
  std::set<std::string> domains;

  bool contains(const std::string& folded) const {
    return domains.count(folded) != 0;
  }
};

RareSet compute_rare_set(const DomainHistory& history,
                         std::span<const Event> day_events, int day,
                         int rare_host_threshold, int fold_level);

/// True if the UA is absent or used by fewer than `ua_rare_threshold` hosts.
bool ua_is_rare(const UaHistory& history, const std::optional<std::string>& ua,
                int ua_rare_threshold);

}  // namespace commwatch
