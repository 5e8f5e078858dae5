#include "commwatch/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace commwatch {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_pairs(
    const std::map<std::string, std::string>& pairs) {
  PipelineConfig cfg;
  for (const auto& [key, value] : pairs) {
    if (key == "fold_level") cfg.fold_level = std::stoi(value);
    else if (key == "rare_host_threshold") cfg.rare_host_threshold = std::stoi(value);
    else if (key == "ua_rare_threshold") cfg.ua_rare_threshold = std::stoi(value);
    else if (key == "beacon_bin_width_w") cfg.beacon.bin_width_w = std::stod(value);
    else if (key == "beacon_jeffrey_threshold") cfg.beacon.jeffrey_threshold = std::stod(value);
    else if (key == "beacon_min_connections") cfg.beacon.min_connections = std::stoi(value);
    else if (key == "cc_score_threshold") cfg.thresholds.cc_score = std::stod(value);
    else if (key == "similarity_score_threshold") cfg.thresholds.similarity_score = std::stod(value);
    else if (key == "max_iterations") cfg.thresholds.max_iterations = std::stoi(value);
    else if (key == "mode") {
      if (value == "hints") cfg.mode = BpMode::hints;
      else if (value == "nohint") cfg.mode = BpMode::nohint;
      else throw std::invalid_argument("mode must be hints|nohint");
    } else if (key == "scoring") {
      if (value == "regression") cfg.scoring = ScoringVariant::regression;
      else if (value == "lanl") cfg.scoring = ScoringVariant::lanl;
      else throw std::invalid_argument("scoring must be regression|lanl");
    }
    else if (key == "timing_window_s") cfg.timing_window_s = std::stod(value);
    else if (key == "lanl_cc_window_s") cfg.lanl_cc_window_s = std::stod(value);
    else if (key == "bootstrap_days") cfg.bootstrap_days = std::stoi(value);
    else if (key == "profile_days") cfg.profile_days = std::stoi(value);
    else if (key == "report_top_k") cfg.report_top_k = std::stoi(value);
    else if (key == "prune_no_auto_hosts") cfg.prune_no_auto_hosts = value == "1" || value == "true";
    else if (key == "prune_same_ip16") cfg.prune_same_ip16 = value == "1" || value == "true";
    else if (key == "history_dir") cfg.history_dir = value;
    else if (key == "cc_model") cfg.cc_model_path = value;
    else if (key == "similarity_model") cfg.similarity_model_path = value;
    else if (key == "whois") cfg.whois_path = value;
    else if (key == "hostmap") cfg.hostmap_path = value;
    else if (key == "seeds") cfg.seeds_path = value;
    else if (key == "internal_domain_suffixes") cfg.internal_domain_suffixes = split_csv(value);
    else if (key == "server_hosts") cfg.server_hosts = split_csv(value);
    else throw std::invalid_argument("unknown config key: " + key);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file: " + path.string());
  std::map<std::string, std::string> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               " is not key=value");
    pairs[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return from_pairs(pairs);
}

void PipelineConfig::validate() const {
  if (fold_level < 2) throw std::invalid_argument("fold_level must be >= 2");
  if (rare_host_threshold < 1)
    throw std::invalid_argument("rare_host_threshold must be >= 1");
  if (ua_rare_threshold < 1)
    throw std::invalid_argument("ua_rare_threshold must be >= 1");
  if (beacon.bin_width_w <= 0)
    throw std::invalid_argument("beacon bin width must be positive");
  if (beacon.jeffrey_threshold < 0)
    throw std::invalid_argument("jeffrey threshold must be >= 0");
  if (beacon.min_connections < 3)
    throw std::invalid_argument("beacon_min_connections must be >= 3");
  if (thresholds.max_iterations < 1)
    throw std::invalid_argument("max_iterations must be >= 1");
  if (bootstrap_days < 1)
    throw std::invalid_argument("bootstrap_days must be >= 1");
  if (report_top_k < 1)
    throw std::invalid_argument("report_top_k must be >= 1");
}

}  // namespace commwatch
