#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "commwatch/event.hpp"
#include "commwatch/profiles.hpp"

namespace commwatch {

/// Host-domain bipartite graph restricted to the day's rare domains.
struct BipartiteIndex {
  std::map<std::string, std::set<std::string>> dom_host;   // rare domain -> hosts
  std::map<std::string, std::set<std::string>> host_rdom;  // host -> rare domains
};

BipartiteIndex build_bipartite_index(std::span<const Event> day_events,
                                     const RareSet& rare_set, int fold_level);

enum class LabelReason { seed, cc, similarity };

std::string_view to_string(LabelReason reason);

struct DomainLabel {
  std::string domain;
  int iteration = 0;
  LabelReason reason = LabelReason::seed;
  double score = 0.0;
};

struct BpState {
  std::set<std::string> hosts;       // H, believed compromised
  std::set<std::string> domains;     // M, believed malicious
  std::set<std::string> candidates;  // R, rare domains contacted by H
  std::vector<DomainLabel> labels;   // ordering: iteration asc, cc before
                                     // similarity, score desc, name asc
  int iterations_run = 0;
};

struct BpThresholds {
  double score_threshold = 0.25;  // T_score
  int max_iterations = 20;
};

/// Returns the domain's score when it passes the C&C check, nullopt otherwise.
using DetectCcFn = std::function<std::optional<double>(const std::string&)>;
/// Similarity score of a domain relative to the currently labeled set.
using ScoreFn = std::function<double(const std::string&,
                                     const std::set<std::string>&)>;

/// Iterative threshold-admission expansion over the bipartite graph.
/// Each iteration labels every C&C-passing candidate, or failing that the
/// single maximum-similarity candidate at or above the score threshold
/// (ties broken toward the lexicographically smallest domain). Hosts of
/// newly labeled domains join H and bring their rare domains into R.
BpState belief_propagation(const BipartiteIndex& index,
                           const std::set<std::string>& seed_hosts,
                           const std::set<std::string>& seed_domains,
                           const DetectCcFn& detect_cc,
                           const ScoreFn& compute_score,
                           const BpThresholds& thresholds);

}  // namespace commwatch
