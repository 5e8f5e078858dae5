#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "commwatch/beacon.hpp"
#include "commwatch/bp.hpp"
#include "commwatch/config.hpp"
#include "commwatch/event.hpp"
#include "commwatch/features.hpp"
#include "commwatch/profiles.hpp"
#include "commwatch/scoring.hpp"
#include "commwatch/simgen.hpp"

namespace commwatch {

struct IngestCounters {
  std::size_t emitted = 0;
  std::size_t skipped = 0;
  std::size_t malformed = 0;
  std::size_t unresolved = 0;
  std::size_t excluded = 0;  // server hosts / internal domains
};

/// Loads a canonical event file, applying the parse-time reduction rules
/// and the config's server-host / internal-domain exclusions.
std::vector<Event> load_events(const std::filesystem::path& path,
                               EventSource dialect, const HostMap& host_map,
                               const PipelineConfig& config,
                               IngestCounters* counters = nullptr);

/// Contiguous slice of a timestamp-sorted event vector covering one day.
std::span<const Event> events_for_day(std::span<const Event> events, int day);

int last_event_day(std::span<const Event> events);

/// One automated (host, rare domain) pair found by the beacon detector.
struct AutomatedPair {
  std::string host;
  std::string domain;  // folded
  double period_s = 0.0;
  double divergence = 0.0;
  std::int64_t first_ts = 0;
};

/// Everything the per-day detectors derive before belief propagation.
struct DayAnalysis {
  int day = 0;
  std::vector<Event> events;
  RareSet rare;
  DayIndex index;
  BipartiteIndex graph;
  std::vector<AutomatedPair> automated_pairs;
  std::map<std::string, std::vector<AutomatedChannel>> channels;  // per domain
  std::map<std::string, std::set<std::string>> auto_hosts;        // per domain
  std::map<std::string, double> cc_scores;  // automated rare domains only
  std::set<std::string> flagged_cc;         // score >= T_c
};

DayAnalysis analyze_day(const PipelineConfig& config,
                        std::span<const Event> day_events, int day,
                        const DomainHistory& history,
                        const UaHistory& ua_history, const WhoisDb& whois,
                        const RegressionModel& cc_model);

/// BP callbacks bound to a day's analysis and the configured scoring
/// variant. The similarity scorer is evaluated relative to the evolving
/// labeled set, so it is rebuilt per BP run.
DetectCcFn make_detect_cc(const PipelineConfig& config,
                          const DayAnalysis& analysis);
ScoreFn make_similarity_scorer(const PipelineConfig& config,
                               const DayAnalysis& analysis,
                               const UaHistory& ua_history,
                               const WhoisDb& whois,
                               const RegressionModel& similarity_model);

struct SeedSet {
  std::set<std::string> hosts;
  std::set<std::string> domains;

  /// File format: `host<TAB>name` / `domain<TAB>name` lines.
  static SeedSet load(const std::filesystem::path& path);
};

struct DailyReport {
  int day = 0;
  BpMode mode = BpMode::nohint;
  IngestCounters counters;
  std::size_t rare_count = 0;
  std::size_t automated_pair_count = 0;
  std::size_t cc_flagged_count = 0;
  std::set<std::string> seed_domains;
  BpState bp;
  int top_k = 40;

  std::string to_text() const;
};

/// Runs BP for the configured mode over an analyzed day.
DailyReport run_bp_for_day(const PipelineConfig& config,
                           const DayAnalysis& analysis, const SeedSet& seeds,
                           const UaHistory& ua_history, const WhoisDb& whois,
                           const RegressionModel& similarity_model);

struct TrainingResult {
  DomainHistory history;
  UaHistory ua_history;
  RegressionModel cc_model;
  RegressionModel similarity_model;
  std::size_t cc_samples = 0;
  std::size_t cc_positives = 0;
  std::size_t similarity_samples = 0;
  std::size_t similarity_positives = 0;

  std::string report() const;
};

/// Profiles the bootstrap period and fits both scoring models from labeled
/// samples. `labels` maps folded domains to {0,1}; throws
/// std::runtime_error when no positive labels are available for a model.
TrainingResult run_training(const PipelineConfig& config,
                            std::span<const Event> events,
                            const WhoisDb& whois,
                            const std::map<std::string, double>& labels);

/// Full daily operation: analyze, BP, report; histories are updated with
/// the day's data only after detection.
DailyReport run_day(const PipelineConfig& config,
                    std::span<const Event> day_events, int day,
                    DomainHistory& history, UaHistory& ua_history,
                    const WhoisDb& whois, const RegressionModel& cc_model,
                    const RegressionModel& similarity_model,
                    const SeedSet& seeds);

struct SweepRow {
  double threshold = 0.0;
  std::size_t flagged = 0;
  double tdr = -1.0;  // -1 when no ground truth
};

/// Flagged-C&C counts as T_c varies over an analyzed day.
std::vector<SweepRow> sweep_cc_threshold(
    const DayAnalysis& analysis, std::span<const double> thresholds,
    const std::set<std::string>* truth_domains = nullptr);

/// Automated-pair counts as J_T varies with W fixed.
std::vector<SweepRow> sweep_jeffrey_threshold(
    const PipelineConfig& config, std::span<const Event> day_events, int day,
    const DomainHistory& history, std::span<const double> thresholds);

}  // namespace commwatch
