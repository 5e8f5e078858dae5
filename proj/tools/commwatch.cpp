// Command-line front end for the detection pipeline: trace simulation,
// training, daily operation, beacon listing, belief propagation and
// threshold sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "commwatch/pipeline.hpp"

namespace fs = std::filesystem;
using namespace commwatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDataError = 2;
constexpr int kExitMissingState = 3;

PipelineConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::load(path);
}

HostMap load_hostmap(const PipelineConfig& config) {
  if (config.hostmap_path.empty() || !fs::exists(config.hostmap_path))
    return HostMap{};
  return HostMap::load(config.hostmap_path);
}

WhoisDb load_whois(const PipelineConfig& config) {
  if (config.whois_path.empty() || !fs::exists(config.whois_path))
    return WhoisDb{};
  return WhoisDb::load(config.whois_path);
}

std::map<std::string, double> labels_from_ground_truth(
    const fs::path& path) {
  auto truth = GroundTruth::load(path);
  std::map<std::string, double> labels;
  for (const auto& d : truth.domains) labels[d.domain] = 1.0;
  return labels;
}

std::vector<double> parse_threshold_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enterprise infection detector: beaconing C&C detection and "
               "belief propagation over host-domain graphs"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic trace");
  std::string sim_out = "trace";
  std::uint64_t sim_seed = 1;
  int sim_hosts = 100, sim_days = 7, sim_popular = 100, sim_rare = 30;
  int sim_updaters = 0, sim_campaigns = 0, sim_campaign_day = -1;
  double sim_period = 600, sim_jitter = 4;
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--hosts", sim_hosts, "Benign host count");
  sim->add_option("--days", sim_days, "Trace length in days");
  sim->add_option("--popular-domains", sim_popular, "Popular domain count");
  sim->add_option("--rare-per-day", sim_rare, "Benign rare domains per day");
  sim->add_option("--updaters", sim_updaters, "Benign auto-updater hosts");
  sim->add_option("--campaigns", sim_campaigns, "Planted campaign count");
  sim->add_option("--campaign-day", sim_campaign_day,
                  "Day campaigns start (default: last day)");
  sim->add_option("--cc-period", sim_period, "Campaign beacon period (s)");
  sim->add_option("--cc-jitter", sim_jitter, "Campaign beacon jitter (s)");

  // ---- shared pipeline options ----
  std::string cfg_path, events_path, report_path, seeds_path, truth_path;
  int day = 0;

  auto* train = app.add_subcommand("train", "Profile and fit scoring models");
  train->add_option("--config", cfg_path, "Config file");
  train->add_option("--events", events_path, "Canonical event file")
      ->required();
  std::string labels_path;
  train->add_option("--labels", labels_path,
                    "domain<TAB>label file or a ground-truth file");

  auto* run = app.add_subcommand("run-day", "Run daily operation for one day");
  run->add_option("--config", cfg_path, "Config file");
  run->add_option("--events", events_path, "Canonical event file")->required();
  run->add_option("--day", day, "Day index")->required();
  run->add_option("--report", report_path, "Write report here");
  run->add_option("--seeds", seeds_path, "Seeds file (hints mode)");

  auto* beacons =
      app.add_subcommand("detect-beacons", "List automated (host, domain) pairs");
  beacons->add_option("--config", cfg_path, "Config file");
  beacons->add_option("--events", events_path, "Canonical event file")
      ->required();
  beacons->add_option("--day", day, "Day index")->required();

  auto* bp_cmd = app.add_subcommand("bp", "Belief propagation for one day");
  bp_cmd->add_option("--config", cfg_path, "Config file");
  bp_cmd->add_option("--events", events_path, "Canonical event file")
      ->required();
  bp_cmd->add_option("--day", day, "Day index")->required();
  std::string bp_mode = "nohint";
  bp_cmd->add_option("--mode", bp_mode, "hints|nohint");
  bp_cmd->add_option("--seeds", seeds_path, "Seeds file");
  bp_cmd->add_option("--report", report_path, "Write report here");

  auto* sweep = app.add_subcommand("sweep", "Threshold sweep for one day");
  sweep->add_option("--config", cfg_path, "Config file");
  sweep->add_option("--events", events_path, "Canonical event file")
      ->required();
  sweep->add_option("--day", day, "Day index")->required();
  std::string sweep_kind = "cc";
  std::string sweep_values = "0.40,0.42,0.44,0.46,0.48";
  sweep->add_option("--kind", sweep_kind, "cc|jeffrey");
  sweep->add_option("--thresholds", sweep_values, "Comma-separated values");
  sweep->add_option("--ground-truth", truth_path, "Ground-truth file for TDR");

  auto* profile = app.add_subcommand("profile", "Fold one day into histories");
  profile->add_option("--config", cfg_path, "Config file");
  profile->add_option("--events", events_path, "Canonical event file")
      ->required();
  profile->add_option("--day", day, "Day index")->required();
  std::string history_dir;
  profile->add_option("--history", history_dir, "History snapshot directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      BenignSpec benign;
      benign.n_hosts = sim_hosts;
      benign.days = sim_days;
      benign.domains_popular = sim_popular;
      benign.domains_rare_per_day = sim_rare;
      benign.auto_updater_hosts = sim_updaters;
      std::vector<CampaignSpec> campaigns;
      const int start_day = sim_campaign_day >= 0 ? sim_campaign_day
                                                  : sim_days - 1;
      for (int c = 0; c < sim_campaigns; ++c) {
        CampaignSpec spec;
        spec.campaign_id = "camp" + std::to_string(c);
        const int base = (c * 3) % std::max(1, sim_hosts - 3);
        for (int h = 0; h < 3; ++h) {
          std::ostringstream name;
          name << "host" << std::setw(4) << std::setfill('0') << (base + h);
          spec.hosts.push_back(name.str());
        }
        spec.cc_domain = spec.campaign_id + "-cc.net";
        spec.cc_period_s = sim_period;
        spec.cc_jitter_s = sim_jitter;
        spec.shared_subnet = "185." + std::to_string(40 + c / 200) + "." +
                             std::to_string(c % 200);
        spec.start_day = start_day;
        campaigns.push_back(std::move(spec));
      }
      auto paths = generate_trace(benign, campaigns, sim_seed, sim_out);
      std::cout << "events=" << paths.events.string() << '\n'
                << "whois=" << paths.whois.string() << '\n'
                << "hostmap=" << paths.hostmap.string() << '\n'
                << "ground_truth=" << paths.ground_truth.string() << '\n';
      return kExitOk;
    }

    auto config = load_config_or_default(cfg_path);
    if (!seeds_path.empty()) config.seeds_path = seeds_path;
    if (bp_cmd->parsed())
      config.mode = bp_mode == "hints" ? BpMode::hints : BpMode::nohint;

    if (profile->parsed() && !history_dir.empty())
      config.history_dir = history_dir;

    const auto host_map = load_hostmap(config);
    IngestCounters counters;
    auto events = load_events(events_path, EventSource::http, host_map,
                              config, &counters);

    if (train->parsed()) {
      std::map<std::string, double> labels;
      if (!labels_path.empty()) {
        // A 3-column file is ground truth; 2 columns are explicit labels.
        std::ifstream probe(labels_path);
        std::string first_line;
        std::getline(probe, first_line);
        if (std::count(first_line.begin(), first_line.end(), '\t') >= 2) {
          labels = labels_from_ground_truth(labels_path);
        } else {
          std::ifstream in(labels_path);
          std::string dom;
          double value;
          while (in >> dom >> value) labels[dom] = value;
        }
      }
      auto whois = load_whois(config);
      auto result = run_training(config, events, whois, labels);
      std::cout << result.report();
      if (!config.history_dir.empty()) {
        result.history.save(config.history_dir);
        result.ua_history.save(config.history_dir);
      }
      if (!config.cc_model_path.empty())
        result.cc_model.save(config.cc_model_path);
      if (!config.similarity_model_path.empty())
        result.similarity_model.save(config.similarity_model_path);
      return kExitOk;
    }

    if (profile->parsed()) {
      if (config.history_dir.empty()) {
        std::cerr << "profile requires --history\n";
        return kExitUsage;
      }
      DomainHistory history;
      UaHistory ua_history;
      if (fs::exists(config.history_dir / "domain_first_seen.tsv")) {
        history = DomainHistory::load(config.history_dir);
        ua_history = UaHistory::load(config.history_dir);
      }
      auto day_events = events_for_day(events, day);
      history.update(day_events, day, config.fold_level);
      ua_history.update(day_events, day);
      history.save(config.history_dir);
      ua_history.save(config.history_dir);
      std::cout << "domains=" << history.size() << " uas=" << ua_history.size()
                << '\n';
      return kExitOk;
    }

    // Remaining subcommands need histories and models.
    if (config.history_dir.empty() ||
        !fs::exists(config.history_dir / "domain_first_seen.tsv")) {
      std::cerr << "missing history snapshots (run train/profile first)\n";
      return kExitMissingState;
    }
    auto history = DomainHistory::load(config.history_dir);
    auto ua_history = UaHistory::load(config.history_dir);
    // Re-running an already-ingested day analyzes against the pre-day
    // snapshot, so repeated runs of the same day are idempotent.
    const bool already_ingested = history.last_day() >= day;
    if (already_ingested) {
      history = history.as_of(day);
      ua_history = ua_history.as_of(day);
    }
    auto whois = load_whois(config);
    auto day_events = events_for_day(events, day);

    if (beacons->parsed()) {
      RegressionModel dummy;  // scores unused for the beacon listing
      dummy.feature_names = {};
      auto analysis = analyze_day(config, day_events, day, history, ua_history,
                                  whois, dummy);
      std::cout << std::fixed << std::setprecision(6);
      for (const auto& pair : analysis.automated_pairs) {
        std::cout << pair.host << '\t' << pair.domain << '\t' << pair.period_s
                  << '\t' << pair.divergence << '\n';
      }
      return kExitOk;
    }

    if (sweep->parsed() && sweep_kind == "jeffrey") {
      auto values = parse_threshold_list(sweep_values);
      auto rows =
          sweep_jeffrey_threshold(config, day_events, day, history, values);
      std::cout << "# J_T\tautomated_pairs\n";
      for (const auto& row : rows)
        std::cout << row.threshold << '\t' << row.flagged << '\n';
      return kExitOk;
    }

    if (config.cc_model_path.empty() || !fs::exists(config.cc_model_path)) {
      std::cerr << "missing C&C model (run train first)\n";
      return kExitMissingState;
    }
    auto cc_model = RegressionModel::load(config.cc_model_path);
    auto analysis = analyze_day(config, day_events, day, history, ua_history,
                                whois, cc_model);

    if (sweep->parsed()) {
      auto values = parse_threshold_list(sweep_values);
      std::set<std::string> truth_domains;
      std::set<std::string>* truth_ptr = nullptr;
      if (!truth_path.empty()) {
        for (const auto& [dom, label] : labels_from_ground_truth(truth_path))
          if (label > 0.5) truth_domains.insert(dom);
        truth_ptr = &truth_domains;
      }
      auto rows = sweep_cc_threshold(analysis, values, truth_ptr);
      std::cout << "# T_c\tflagged\ttdr\n";
      std::cout << std::fixed << std::setprecision(4);
      for (const auto& row : rows) {
        std::cout << row.threshold << '\t' << row.flagged << '\t';
        if (row.tdr < 0)
          std::cout << "-";
        else
          std::cout << row.tdr;
        std::cout << '\n';
      }
      return kExitOk;
    }

    if (config.similarity_model_path.empty() ||
        !fs::exists(config.similarity_model_path)) {
      std::cerr << "missing similarity model (run train first)\n";
      return kExitMissingState;
    }
    auto similarity_model =
        RegressionModel::load(config.similarity_model_path);

    SeedSet seeds;
    if (!config.seeds_path.empty() && fs::exists(config.seeds_path))
      seeds = SeedSet::load(config.seeds_path);
    if (config.mode == BpMode::hints && seeds.hosts.empty() &&
        seeds.domains.empty()) {
      std::cerr << "hints mode requires a non-empty seeds file\n";
      return kExitUsage;
    }

    if (bp_cmd->parsed()) {
      auto report = run_bp_for_day(config, analysis, seeds, ua_history, whois,
                                   similarity_model);
      report.counters = counters;
      write_or_print(report.to_text(), report_path);
      return kExitOk;
    }

    if (run->parsed()) {
      auto report = run_bp_for_day(config, analysis, seeds, ua_history, whois,
                                   similarity_model);
      report.counters = counters;
      if (!already_ingested) {
        history.update(day_events, day, config.fold_level);
        ua_history.update(day_events, day);
        history.save(config.history_dir);
        ua_history.save(config.history_dir);
      }
      write_or_print(report.to_text(), report_path);
      return kExitOk;
    }

    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  }
}
