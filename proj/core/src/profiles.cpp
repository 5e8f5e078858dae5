#include "commwatch/profiles.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace commwatch {

std::string fold_domain(std::string_view domain, int fold_level) {
  if (fold_level < 1) throw std::invalid_argument("fold_level must be >= 1");
  int labels = 1;
  for (char c : domain)
    if (c == '.') ++labels;
  if (labels <= fold_level) return std::string(domain);
  // Walk back over fold_level-1 dots from the end.
  std::size_t pos = domain.size();
  for (int i = 0; i < fold_level; ++i) {
    pos = domain.rfind('.', pos - 1);
  }
  return std::string(domain.substr(pos + 1));
}

void DomainHistory::update(std::span<const Event> events, int day,
                           int fold_level) {
  if (day <= last_day_)
    throw std::invalid_argument("history update out of order: day " +
                                std::to_string(day) + " after " +
                                std::to_string(last_day_));
  std::map<std::string, std::set<std::string>> hosts_per_domain;
  for (const auto& ev : events) {
    hosts_per_domain[fold_domain(ev.domain, fold_level)].insert(ev.host);
  }
  for (const auto& [dom, hosts] : hosts_per_domain) {
    first_seen_.try_emplace(dom, day);
    day_hosts_[{dom, day}] = static_cast<int>(hosts.size());
  }
  last_day_ = day;
}

bool DomainHistory::seen_before(const std::string& folded, int day) const {
  auto it = first_seen_.find(folded);
  return it != first_seen_.end() && it->second < day;
}

std::optional<int> DomainHistory::first_seen(const std::string& folded) const {
  auto it = first_seen_.find(folded);
  if (it == first_seen_.end()) return std::nullopt;
  return it->second;
}

int DomainHistory::day_host_count(const std::string& folded, int day) const {
  auto it = day_hosts_.find({folded, day});
  return it == day_hosts_.end() ? 0 : it->second;
}

DomainHistory DomainHistory::as_of(int day) const {
  DomainHistory h;
  for (const auto& [dom, fs] : first_seen_)
    if (fs < day) h.first_seen_[dom] = fs;
  for (const auto& [key, count] : day_hosts_) {
    if (key.second >= day) continue;
    h.day_hosts_[key] = count;
    h.last_day_ = std::max(h.last_day_, key.second);
  }
  return h;
}

void DomainHistory::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "domain_first_seen.tsv");
    std::map<std::string, int> ordered(first_seen_.begin(), first_seen_.end());
    for (const auto& [dom, day] : ordered) out << dom << '\t' << day << '\n';
  }
  {
    std::ofstream out(dir / "domain_day_hosts.tsv");
    for (const auto& [key, count] : day_hosts_)
      out << key.first << '\t' << key.second << '\t' << count << '\n';
  }
  std::ofstream meta(dir / "domain_meta.tsv");
  meta << "last_day\t" << last_day_ << '\n';
}

DomainHistory DomainHistory::load(const std::filesystem::path& dir) {
  DomainHistory h;
  std::ifstream fs(dir / "domain_first_seen.tsv");
  if (!fs)
    throw std::runtime_error("missing history snapshot in " + dir.string());
  std::string dom;
  int day, count;
  while (fs >> dom >> day) h.first_seen_[dom] = day;
  std::ifstream dh(dir / "domain_day_hosts.tsv");
  while (dh >> dom >> day >> count) h.day_hosts_[{dom, day}] = count;
  std::ifstream meta(dir / "domain_meta.tsv");
  std::string key;
  if (meta >> key >> day && key == "last_day") h.last_day_ = day;
  return h;
}

void UaHistory::update(std::span<const Event> events, int day) {
  for (const auto& ev : events) {
    if (!ev.user_agent) continue;
    ua_host_first_[*ev.user_agent].try_emplace(ev.host, day);
    first_seen_.try_emplace(*ev.user_agent, day);
  }
}

int UaHistory::host_count(const std::string& ua) const {
  auto it = ua_host_first_.find(ua);
  return it == ua_host_first_.end() ? 0
                                    : static_cast<int>(it->second.size());
}

std::optional<int> UaHistory::first_seen(const std::string& ua) const {
  auto it = first_seen_.find(ua);
  if (it == first_seen_.end()) return std::nullopt;
  return it->second;
}

UaHistory UaHistory::as_of(int day) const {
  UaHistory h;
  for (const auto& [ua, hosts] : ua_host_first_)
    for (const auto& [host, d] : hosts)
      if (d < day) {
        h.ua_host_first_[ua][host] = d;
        auto [it, inserted] = h.first_seen_.try_emplace(ua, d);
        if (!inserted) it->second = std::min(it->second, d);
      }
  return h;
}

void UaHistory::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "ua_hosts.tsv");
  std::map<std::string, std::map<std::string, int>> ordered;
  for (const auto& [ua, hosts] : ua_host_first_)
    ordered[ua] = {hosts.begin(), hosts.end()};
  for (const auto& [ua, hosts] : ordered)
    for (const auto& [host, day] : hosts)
      out << ua << '\t' << host << '\t' << day << '\n';
}

UaHistory UaHistory::load(const std::filesystem::path& dir) {
  UaHistory h;
  std::ifstream in(dir / "ua_hosts.tsv");
  if (!in) throw std::runtime_error("missing UA snapshot in " + dir.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string ua, host, field;
    if (!std::getline(ss, ua, '\t') || !std::getline(ss, host, '\t') ||
        !std::getline(ss, field, '\t'))
      throw std::runtime_error("bad UA snapshot line: " + line);
    const int day = std::stoi(field);
    h.ua_host_first_[ua][host] = day;
    auto [it, inserted] = h.first_seen_.try_emplace(ua, day);
    if (!inserted) it->second = std::min(it->second, day);
  }
  return h;
}

RareSet compute_rare_set(const DomainHistory& history,
                         std::span<const Event> day_events, int day,
                         int rare_host_threshold, int fold_level) {
  std::map<std::string, std::set<std::string>> hosts_per_domain;
  for (const auto& ev : day_events) {
    hosts_per_domain[fold_domain(ev.domain, fold_level)].insert(ev.host);
  }
  RareSet rare;
  rare.day = day;
  for (const auto& [dom, hosts] : hosts_per_domain) {
    if (history.first_seen(dom).has_value() && *history.first_seen(dom) < day)
      continue;  // not new
    if (static_cast<int>(hosts.size()) < rare_host_threshold)
      rare.domains.insert(dom);
  }
  return rare;
}

bool ua_is_rare(const UaHistory& history, const std::optional<std::string>& ua,
                int ua_rare_threshold) {
  if (!ua) return true;
  return history.host_count(*ua) < ua_rare_threshold;
}

}  // namespace commwatch
