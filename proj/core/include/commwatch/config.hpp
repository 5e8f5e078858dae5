#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "commwatch/beacon.hpp"
#include "commwatch/scoring.hpp"

namespace commwatch {

enum class BpMode { hints, nohint };
enum class ScoringVariant { regression, lanl };

/// Flat key=value pipeline configuration.
struct PipelineConfig {
  int fold_level = 2;
  int rare_host_threshold = 10;
  int ua_rare_threshold = 10;
  BeaconParams beacon;
  Thresholds thresholds;
  BpMode mode = BpMode::nohint;
  ScoringVariant scoring = ScoringVariant::regression;
  double timing_window_s = 160.0;  // "close in time" bound for the lanl score
  double lanl_cc_window_s = 10.0;
  int bootstrap_days = 30;
  int profile_days = 15;  // training days reserved for pure profiling
  int report_top_k = 40;
  bool prune_no_auto_hosts = true;
  bool prune_same_ip16 = true;

  std::filesystem::path history_dir;
  std::filesystem::path cc_model_path;
  std::filesystem::path similarity_model_path;
  std::filesystem::path whois_path;
  std::filesystem::path hostmap_path;
  std::filesystem::path seeds_path;

  std::vector<std::string> internal_domain_suffixes;
  std::vector<std::string> server_hosts;  // excluded at ingest

  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig from_pairs(
      const std::map<std::string, std::string>& pairs);
  void validate() const;  // throws std::invalid_argument
};

}  // namespace commwatch
