#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace commwatch {

/// One planted infection: delivery-domain visits clustered in time,
/// followed by periodic C&C beaconing from every campaign host.
struct CampaignSpec {
  std::string campaign_id;
  std::vector<std::string> hosts;
  int delivery_domains = 2;
  std::string cc_domain;
  double cc_period_s = 600.0;
  double cc_jitter_s = 4.0;
  double stage_gap_max_s = 160.0;
  std::string shared_subnet;  // /24 prefix, e.g. "185.45.7"
  int whois_age_days = 10;
  int whois_validity_days = 365;
  int start_day = 0;
  int active_days = 1;

  void validate() const;  // throws std::invalid_argument
};

struct BenignSpec {
  enum class Arrival { lognormal, exponential };

  int n_hosts = 100;
  int days = 7;
  int domains_popular = 100;
  int domains_rare_per_day = 30;
  Arrival inter_arrival_model = Arrival::lognormal;
  double arrival_mean_s = 600.0;   // scale of the inter-arrival distribution
  double arrival_sigma = 1.0;      // lognormal shape
  int ua_pool_popular = 5;
  int ua_pool_rare = 20;
  double referer_presence_prob = 0.9;
  int auto_updater_hosts = 0;      // hosts with a benign periodic channel
  double updater_period_s = 1800.0;
  int whois_age_days = 2000;       // registration age of benign domains
  int whois_validity_days = 365;

  void validate() const;
};

struct TracePaths {
  std::filesystem::path events;        // canonical event file
  std::filesystem::path whois;         // offline WHOIS lookups
  std::filesystem::path hostmap;       // ip ranges (empty ranges file)
  std::filesystem::path ground_truth;  // planted domains and hosts
};

/// Deterministically writes a benign trace with planted campaigns under
/// `out_dir`. Same (specs, seed) always produces byte-identical files.
TracePaths generate_trace(const BenignSpec& benign,
                          const std::vector<CampaignSpec>& campaigns,
                          std::uint64_t rng_seed,
                          const std::filesystem::path& out_dir);

/// Parsed ground-truth file.
struct GroundTruth {
  struct DomainEntry {
    std::string domain;
    std::string campaign_id;
    std::string stage;  // "delivery" or "cc"
  };
  struct HostEntry {
    std::string host;
    std::string campaign_id;
  };
  std::vector<DomainEntry> domains;
  std::vector<HostEntry> hosts;

  static GroundTruth load(const std::filesystem::path& path);
};

}  // namespace commwatch
