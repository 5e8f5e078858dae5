#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "commwatch/event.hpp"
#include "commwatch/profiles.hpp"

namespace commwatch {

/// Registration window for a folded domain, in days since epoch.
struct WhoisRecord {
  int created_day = 0;
  int expires_day = 0;
};

/// Offline WHOIS lookup keyed by folded domain.
class WhoisDb {
 public:
  void add(const std::string& domain, WhoisRecord record);
  std::optional<WhoisRecord> lookup(const std::string& domain) const;
  std::size_t size() const { return records_.size(); }

  /// File format: domain<TAB>created<TAB>expires with ISO-8601 dates.
  static WhoisDb load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, WhoisRecord> records_;
};

int parse_iso_date(const std::string& date);  // days since epoch
std::string format_iso_date(int day);

/// Feature names shared by extraction, training and scoring.
namespace feature_names {
inline constexpr const char* no_hosts = "no_hosts";
inline constexpr const char* no_auto_hosts = "no_auto_hosts";
inline constexpr const char* frac_no_referer = "frac_no_referer";
inline constexpr const char* frac_rare_ua = "frac_rare_ua";
inline constexpr const char* domain_age = "domain_age_days";
inline constexpr const char* domain_validity = "domain_validity_days";
inline constexpr const char* min_time_gap = "min_time_gap_s";
inline constexpr const char* same_ip24 = "same_ip24";
inline constexpr const char* same_ip16 = "same_ip16";
}  // namespace feature_names

using FeatureMap = std::map<std::string, double>;

/// min_time_gap value used when no host connects both domains.
constexpr double kNoGapSentinelS = 86400.0;

/// Marker for features unavailable at extraction time (e.g. WHOIS miss);
/// replaced with model defaults at scoring time.
inline double missing_feature() {
  return std::numeric_limits<double>::quiet_NaN();
}

/// Per-folded-domain aggregates over one day of events, shared by the
/// feature extractors and belief propagation.
class DayIndex {
 public:
  struct DomainStats {
    std::set<std::string> hosts;
    std::set<std::string> no_referer_hosts;  // hosts never sending a referer
    std::map<std::string, std::set<std::string>> host_uas;  // "" = absent UA
    std::set<std::string> ips;
    std::map<std::string, std::int64_t> first_visit;  // host -> first ts
  };

  DayIndex() = default;
  DayIndex(std::span<const Event> day_events, int fold_level);

  const DomainStats* stats(const std::string& folded) const;
  const std::map<std::string, DomainStats>& domains() const {
    return domains_;
  }
  int fold_level() const { return fold_level_; }

 private:
  std::map<std::string, DomainStats> domains_;
  int fold_level_ = 2;
};

struct CcFeatures {
  int no_hosts = 0;
  int no_auto_hosts = 0;
  double frac_no_referer = 0.0;
  double frac_rare_ua = 0.0;
  double domain_age_days = 0.0;       // NaN on WHOIS miss
  double domain_validity_days = 0.0;  // NaN on WHOIS miss

  FeatureMap to_map() const;
};

enum class IpProximity { none, ip16, ip24 };

struct SimilarityFeatures {
  int no_hosts = 0;
  double min_time_gap_s = kNoGapSentinelS;
  bool same_ip24 = false;
  bool same_ip16 = false;
  double frac_no_referer = 0.0;
  double frac_rare_ua = 0.0;
  double domain_age_days = 0.0;
  double domain_validity_days = 0.0;

  IpProximity proximity() const {
    return same_ip24 ? IpProximity::ip24
                     : (same_ip16 ? IpProximity::ip16 : IpProximity::none);
  }
  FeatureMap to_map() const;
};

CcFeatures extract_cc_features(const std::string& domain, const DayIndex& index,
                               const std::set<std::string>& auto_hosts,
                               const UaHistory& ua_history,
                               const WhoisDb& whois, int day,
                               int ua_rare_threshold);

SimilarityFeatures extract_similarity_features(
    const std::string& domain, const std::set<std::string>& labeled_set,
    const DayIndex& index, const UaHistory& ua_history, const WhoisDb& whois,
    int day, int ua_rare_threshold);

}  // namespace commwatch
