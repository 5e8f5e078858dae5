#include "commwatch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace commwatch {

namespace {

bool has_suffix(const std::string& domain, const std::string& suffix) {
  if (suffix.size() > domain.size()) return false;
  if (!domain.ends_with(suffix)) return false;
  return domain.size() == suffix.size() ||
         domain[domain.size() - suffix.size() - 1] == '.';
}

std::vector<std::string> cc_feature_list(const PipelineConfig& config) {
  std::vector<std::string> names = {
      feature_names::no_hosts, feature_names::frac_no_referer,
      feature_names::frac_rare_ua, feature_names::domain_age,
      feature_names::domain_validity};
  if (!config.prune_no_auto_hosts)
    names.insert(names.begin() + 1, feature_names::no_auto_hosts);
  return names;
}

std::vector<std::string> similarity_feature_list(
    const PipelineConfig& config) {
  std::vector<std::string> names = {
      feature_names::no_hosts,       feature_names::min_time_gap,
      feature_names::same_ip24,      feature_names::frac_no_referer,
      feature_names::frac_rare_ua,   feature_names::domain_age,
      feature_names::domain_validity};
  if (!config.prune_same_ip16)
    names.insert(names.begin() + 3, feature_names::same_ip16);
  return names;
}

// Drops features whose training values are constant (collinear with the
// intercept), then greedily removes any remaining collinear columns the
// solver reports, so degenerate corpora reduce the model instead of
// aborting training.
RegressionModel fit_pruned(const char* which,
                           const std::vector<std::string>& names,
                           std::span<const TrainingSample> samples) {
  std::vector<std::string> usable;
  for (const auto& name : names) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : samples) {
      auto it = s.features.find(name);
      if (it == s.features.end() || std::isnan(it->second)) continue;
      lo = std::min(lo, it->second);
      hi = std::max(hi, it->second);
    }
    if (hi > lo) usable.push_back(name);
  }
  while (!usable.empty()) {
    try {
      return fit_ols(usable, samples);
    } catch (const DegenerateFitError& e) {
      const std::string& drop = e.collinear_features.front();
      std::erase(usable, drop);
    }
  }
  throw std::runtime_error(std::string(which) +
                           ": no usable training features");
}

}  // namespace

std::vector<Event> load_events(const std::filesystem::path& path,
                               EventSource dialect, const HostMap& host_map,
                               const PipelineConfig& config,
                               IngestCounters* counters) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open event file: " + path.string());
  std::vector<Event> events;
  IngestCounters local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto result = parse_event_line(line, dialect, host_map);
    switch (result.status) {
      case ParseStatus::ok: {
        bool excluded = false;
        for (const auto& h : config.server_hosts)
          if (result.event.host == h) excluded = true;
        for (const auto& s : config.internal_domain_suffixes)
          if (has_suffix(result.event.domain, s)) excluded = true;
        if (excluded)
          ++local.excluded;
        else {
          events.push_back(std::move(result.event));
          ++local.emitted;
        }
        break;
      }
      case ParseStatus::skipped: ++local.skipped; break;
      case ParseStatus::malformed: ++local.malformed; break;
      case ParseStatus::unresolved_host: ++local.unresolved; break;
    }
  }
  if (counters) *counters = local;
  return events;
}

std::span<const Event> events_for_day(std::span<const Event> events, int day) {
  const std::int64_t lo = std::int64_t(day) * kSecondsPerDay;
  const std::int64_t hi = lo + kSecondsPerDay;
  auto begin = std::lower_bound(events.begin(), events.end(), lo,
                                [](const Event& e, std::int64_t t) {
                                  return e.timestamp < t;
                                });
  auto end = std::lower_bound(begin, events.end(), hi,
                              [](const Event& e, std::int64_t t) {
                                return e.timestamp < t;
                              });
  return events.subspan(begin - events.begin(), end - begin);
}

int last_event_day(std::span<const Event> events) {
  if (events.empty()) return -1;
  return day_of(events.back().timestamp);
}

DayAnalysis analyze_day(const PipelineConfig& config,
                        std::span<const Event> day_events, int day,
                        const DomainHistory& history,
                        const UaHistory& ua_history, const WhoisDb& whois,
                        const RegressionModel& cc_model) {
  DayAnalysis analysis;
  analysis.day = day;
  analysis.events.assign(day_events.begin(), day_events.end());
  analysis.rare = compute_rare_set(history, day_events, day,
                                   config.rare_host_threshold,
                                   config.fold_level);
  analysis.index = DayIndex(day_events, config.fold_level);
  analysis.graph =
      build_bipartite_index(day_events, analysis.rare, config.fold_level);

  // Beacon detection per (host, rare folded domain).
  std::map<std::pair<std::string, std::string>, std::vector<std::int64_t>>
      timestamps;
  for (const auto& ev : day_events) {
    const std::string folded = fold_domain(ev.domain, config.fold_level);
    if (!analysis.rare.contains(folded)) continue;
    timestamps[{ev.host, folded}].push_back(ev.timestamp);
  }
  for (auto& [key, ts] : timestamps) {
    std::sort(ts.begin(), ts.end());
    auto result = detect_automated(ts, config.beacon);
    if (!result.automated) continue;
    AutomatedPair pair{key.first, key.second, result.period, result.divergence,
                       ts.front()};
    analysis.channels[key.second].push_back(
        {key.first, result.period, ts.front()});
    analysis.auto_hosts[key.second].insert(key.first);
    analysis.automated_pairs.push_back(std::move(pair));
  }

  for (const auto& [domain, hosts] : analysis.auto_hosts) {
    auto features =
        extract_cc_features(domain, analysis.index, hosts, ua_history, whois,
                            day, config.ua_rare_threshold);
    const double score = score_domain(cc_model, features.to_map());
    analysis.cc_scores[domain] = score;
    if (score >= config.thresholds.cc_score) analysis.flagged_cc.insert(domain);
  }
  return analysis;
}

DetectCcFn make_detect_cc(const PipelineConfig& config,
                          const DayAnalysis& analysis) {
  if (config.scoring == ScoringVariant::lanl) {
    const double window = config.lanl_cc_window_s;
    return [&analysis, window](const std::string& domain)
               -> std::optional<double> {
      auto it = analysis.channels.find(domain);
      if (it == analysis.channels.end()) return std::nullopt;
      if (!lanl_detect_cc(it->second, window)) return std::nullopt;
      return 1.0;
    };
  }
  const double threshold = config.thresholds.cc_score;
  return [&analysis, threshold](const std::string& domain)
             -> std::optional<double> {
    auto it = analysis.cc_scores.find(domain);
    if (it == analysis.cc_scores.end() || it->second < threshold)
      return std::nullopt;
    return it->second;
  };
}

ScoreFn make_similarity_scorer(const PipelineConfig& config,
                               const DayAnalysis& analysis,
                               const UaHistory& ua_history,
                               const WhoisDb& whois,
                               const RegressionModel& similarity_model) {
  if (config.scoring == ScoringVariant::lanl) {
    const double timing_window = config.timing_window_s;
    const int ua_threshold = config.ua_rare_threshold;
    return [&analysis, &ua_history, &whois, timing_window, ua_threshold](
               const std::string& domain,
               const std::set<std::string>& labeled) {
      auto f = extract_similarity_features(domain, labeled, analysis.index,
                                           ua_history, whois, analysis.day,
                                           ua_threshold);
      if (f.no_hosts < 1) return 0.0;
      return lanl_similarity_score(f.no_hosts,
                                   f.min_time_gap_s <= timing_window,
                                   f.proximity());
    };
  }
  const int ua_threshold = config.ua_rare_threshold;
  return [&analysis, &ua_history, &whois, &similarity_model, ua_threshold](
             const std::string& domain, const std::set<std::string>& labeled) {
    auto f = extract_similarity_features(domain, labeled, analysis.index,
                                         ua_history, whois, analysis.day,
                                         ua_threshold);
    return score_domain(similarity_model, f.to_map());
  };
}

SeedSet SeedSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open seeds file: " + path.string());
  SeedSet seeds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("bad seeds line " + std::to_string(lineno));
    const std::string kind = line.substr(0, tab);
    const std::string name = line.substr(tab + 1);
    if (kind == "host")
      seeds.hosts.insert(name);
    else if (kind == "domain")
      seeds.domains.insert(name);
    else
      throw std::runtime_error("bad seeds kind on line " +
                               std::to_string(lineno));
  }
  return seeds;
}

DailyReport run_bp_for_day(const PipelineConfig& config,
                           const DayAnalysis& analysis, const SeedSet& seeds,
                           const UaHistory& ua_history, const WhoisDb& whois,
                           const RegressionModel& similarity_model) {
  DailyReport report;
  report.day = analysis.day;
  report.mode = config.mode;
  report.rare_count = analysis.rare.domains.size();
  report.automated_pair_count = analysis.automated_pairs.size();
  report.cc_flagged_count = analysis.flagged_cc.size();
  report.top_k = config.report_top_k;

  std::set<std::string> seed_hosts;
  std::set<std::string> seed_domains;
  if (config.mode == BpMode::hints) {
    seed_hosts = seeds.hosts;
    seed_domains = seeds.domains;
  } else {
    // C&C detector output seeds the algorithm.
    seed_domains = analysis.flagged_cc;
    for (const auto& dom : seed_domains) {
      auto it = analysis.graph.dom_host.find(dom);
      if (it != analysis.graph.dom_host.end())
        seed_hosts.insert(it->second.begin(), it->second.end());
    }
  }
  report.seed_domains = seed_domains;

  BpThresholds bp_thresholds{config.thresholds.similarity_score,
                             config.thresholds.max_iterations};
  report.bp = belief_propagation(
      analysis.graph, seed_hosts, seed_domains,
      make_detect_cc(config, analysis),
      make_similarity_scorer(config, analysis, ua_history, whois,
                             similarity_model),
      bp_thresholds);
  return report;
}

std::string DailyReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  std::size_t cc_labels = 0, sim_labels = 0;
  for (const auto& label : bp.labels) {
    if (label.reason == LabelReason::cc) ++cc_labels;
    if (label.reason == LabelReason::similarity) ++sim_labels;
  }
  out << "# day=" << day << " mode="
      << (mode == BpMode::hints ? "hints" : "nohint") << '\n';
  out << "# events=" << counters.emitted << " skipped=" << counters.skipped
      << " malformed=" << counters.malformed
      << " unresolved=" << counters.unresolved
      << " excluded=" << counters.excluded << '\n';
  out << "# rare=" << rare_count
      << " automated_pairs=" << automated_pair_count
      << " cc_flagged=" << cc_flagged_count << '\n';
  out << "# labels seed=" << seed_domains.size() << " cc=" << cc_labels
      << " similarity=" << sim_labels << " iterations=" << bp.iterations_run
      << '\n';
  int rank = 0;
  for (const auto& label : bp.labels) {
    if (label.reason == LabelReason::seed) continue;  // seeds are not findings
    if (rank >= top_k) break;
    ++rank;
    out << rank << '\t' << label.domain << '\t' << label.iteration << '\t'
        << to_string(label.reason) << '\t' << label.score << '\n';
  }
  out << "# hosts\n";
  for (const auto& host : bp.hosts) out << host << '\n';
  return out.str();
}

TrainingResult run_training(const PipelineConfig& config,
                            std::span<const Event> events,
                            const WhoisDb& whois,
                            const std::map<std::string, double>& labels) {
  const int total_days = last_event_day(events) + 1;
  if (total_days < 1) throw std::runtime_error("no training events");
  if (total_days <= config.profile_days)
    throw std::runtime_error(
        "training needs days beyond the profiling period (have " +
        std::to_string(total_days) + ", profile_days=" +
        std::to_string(config.profile_days) + ")");

  TrainingResult result;
  std::vector<TrainingSample> cc_samples;
  std::vector<TrainingSample> sim_samples;

  for (int day = 0; day < total_days; ++day) {
    auto day_events = events_for_day(events, day);
    if (day >= config.profile_days && !day_events.empty()) {
      auto rare = compute_rare_set(result.history, day_events, day,
                                   config.rare_host_threshold,
                                   config.fold_level);
      DayIndex index(day_events, config.fold_level);

      // Beacon pass over rare channels.
      std::map<std::pair<std::string, std::string>, std::vector<std::int64_t>>
          timestamps;
      for (const auto& ev : day_events) {
        const std::string folded = fold_domain(ev.domain, config.fold_level);
        if (!rare.contains(folded)) continue;
        timestamps[{ev.host, folded}].push_back(ev.timestamp);
      }
      std::map<std::string, std::set<std::string>> auto_hosts;
      for (auto& [key, ts] : timestamps) {
        std::sort(ts.begin(), ts.end());
        if (detect_automated(ts, config.beacon).automated)
          auto_hosts[key.second].insert(key.first);
      }

      // C&C samples: automated rare domains, labeled from ground truth.
      for (const auto& [domain, hosts] : auto_hosts) {
        auto f = extract_cc_features(domain, index, hosts, result.ua_history,
                                     whois, day, config.ua_rare_threshold);
        auto it = labels.find(domain);
        cc_samples.push_back({f.to_map(), it == labels.end() ? 0.0 : it->second});
      }

      // Similarity samples: rare domains scored against the day's labeled
      // malicious set, excluding the sample domain itself.
      std::set<std::string> labeled_today;
      for (const auto& dom : rare.domains) {
        auto it = labels.find(dom);
        if (it != labels.end() && it->second > 0.5) labeled_today.insert(dom);
      }
      if (!labeled_today.empty()) {
        for (const auto& dom : rare.domains) {
          if (auto_hosts.count(dom)) continue;  // cc detector covers these
          std::set<std::string> others = labeled_today;
          others.erase(dom);
          if (others.empty()) continue;
          auto f = extract_similarity_features(dom, others, index,
                                               result.ua_history, whois, day,
                                               config.ua_rare_threshold);
          auto it = labels.find(dom);
          sim_samples.push_back(
              {f.to_map(), it == labels.end() ? 0.0 : it->second});
        }
      }
    }
    result.history.update(day_events, day, config.fold_level);
    result.ua_history.update(day_events, day);
  }

  auto count_positives = [](std::span<const TrainingSample> samples) {
    std::size_t n = 0;
    for (const auto& s : samples)
      if (s.label > 0.5) ++n;
    return n;
  };
  result.cc_samples = cc_samples.size();
  result.cc_positives = count_positives(cc_samples);
  result.similarity_samples = sim_samples.size();
  result.similarity_positives = count_positives(sim_samples);
  if (result.cc_positives == 0)
    throw std::runtime_error("no labeled positive C&C samples (have " +
                             std::to_string(cc_samples.size()) + " samples)");
  if (result.similarity_positives == 0)
    throw std::runtime_error(
        "no labeled positive similarity samples (have " +
        std::to_string(sim_samples.size()) + " samples)");

  result.cc_model = fit_pruned("cc model", cc_feature_list(config), cc_samples);
  result.similarity_model = fit_pruned(
      "similarity model", similarity_feature_list(config), sim_samples);
  return result;
}

std::string TrainingResult::report() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "cc_samples=" << cc_samples << " positives=" << cc_positives << '\n';
  out << "cc_model intercept=" << cc_model.intercept << '\n';
  for (const auto& name : cc_model.feature_names)
    out << "cc_weight " << name << '=' << cc_model.weights.at(name) << '\n';
  out << "similarity_samples=" << similarity_samples
      << " positives=" << similarity_positives << '\n';
  out << "similarity_model intercept=" << similarity_model.intercept << '\n';
  for (const auto& name : similarity_model.feature_names)
    out << "similarity_weight " << name << '='
        << similarity_model.weights.at(name) << '\n';
  return out.str();
}

DailyReport run_day(const PipelineConfig& config,
                    std::span<const Event> day_events, int day,
                    DomainHistory& history, UaHistory& ua_history,
                    const WhoisDb& whois, const RegressionModel& cc_model,
                    const RegressionModel& similarity_model,
                    const SeedSet& seeds) {
  if (history.last_day() >= day)
    throw std::runtime_error("day " + std::to_string(day) +
                             " already folded into history");
  auto analysis = analyze_day(config, day_events, day, history, ua_history,
                              whois, cc_model);
  auto report = run_bp_for_day(config, analysis, seeds, ua_history, whois,
                               similarity_model);
  // Detection first, then the day joins the history.
  history.update(day_events, day, config.fold_level);
  ua_history.update(day_events, day);
  return report;
}

std::vector<SweepRow> sweep_cc_threshold(
    const DayAnalysis& analysis, std::span<const double> thresholds,
    const std::set<std::string>* truth_domains) {
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    SweepRow row;
    row.threshold = t;
    std::size_t true_hits = 0;
    for (const auto& [domain, score] : analysis.cc_scores) {
      if (score < t) continue;
      ++row.flagged;
      if (truth_domains && truth_domains->count(domain)) ++true_hits;
    }
    if (truth_domains && row.flagged > 0)
      row.tdr = static_cast<double>(true_hits) / row.flagged;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> sweep_jeffrey_threshold(
    const PipelineConfig& config, std::span<const Event> day_events, int day,
    const DomainHistory& history, std::span<const double> thresholds) {
  auto rare = compute_rare_set(history, day_events, day,
                               config.rare_host_threshold, config.fold_level);
  std::map<std::pair<std::string, std::string>, std::vector<std::int64_t>>
      timestamps;
  for (const auto& ev : day_events) {
    const std::string folded = fold_domain(ev.domain, config.fold_level);
    if (!rare.contains(folded)) continue;
    timestamps[{ev.host, folded}].push_back(ev.timestamp);
  }
  // Divergences are threshold-independent; compute once.
  std::vector<double> divergences;
  for (auto& [key, ts] : timestamps) {
    std::sort(ts.begin(), ts.end());
    auto intervals = extract_intervals(ts);
    if (static_cast<int>(intervals.size()) < config.beacon.min_connections - 1)
      continue;
    auto hist = cluster_intervals(intervals, config.beacon.bin_width_w);
    divergences.push_back(jeffrey_divergence(hist, periodic_reference(hist)));
  }
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    SweepRow row;
    row.threshold = t;
    for (double d : divergences)
      if (d <= t) ++row.flagged;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace commwatch
