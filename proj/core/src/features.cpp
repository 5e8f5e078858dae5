#include "commwatch/features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace commwatch {

void WhoisDb::add(const std::string& domain, WhoisRecord record) {
  if (record.created_day > record.expires_day)
    throw std::invalid_argument("whois record with created > expires");
  records_[domain] = record;
}

std::optional<WhoisRecord> WhoisDb::lookup(const std::string& domain) const {
  auto it = records_.find(domain);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

int parse_iso_date(const std::string& date) {
  int y = 0, m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream ss(date);
  if (!(ss >> y >> dash1 >> m >> dash2 >> d) || dash1 != '-' || dash2 != '-')
    throw std::invalid_argument("bad ISO date: " + date);
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw std::invalid_argument("bad ISO date: " + date);
  return static_cast<int>(sys_days{ymd}.time_since_epoch().count());
}

std::string format_iso_date(int day) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

WhoisDb WhoisDb::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open whois file: " + path.string());
  WhoisDb db;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string domain, created, expires;
    if (!std::getline(ss, domain, '\t') || !std::getline(ss, created, '\t') ||
        !std::getline(ss, expires, '\t'))
      throw std::runtime_error("bad whois line " + std::to_string(lineno));
    db.add(domain, {parse_iso_date(created), parse_iso_date(expires)});
  }
  return db;
}

void WhoisDb::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  for (const auto& [domain, rec] : records_) {
    out << domain << '\t' << format_iso_date(rec.created_day) << '\t'
        << format_iso_date(rec.expires_day) << '\n';
  }
}

DayIndex::DayIndex(std::span<const Event> day_events, int fold_level)
    : fold_level_(fold_level) {
  // First pass collects per-host referer observations per domain.
  std::map<std::string, std::set<std::string>> referer_hosts;
  for (const auto& ev : day_events) {
    const std::string folded = fold_domain(ev.domain, fold_level);
    auto& st = domains_[folded];
    st.hosts.insert(ev.host);
    st.host_uas[ev.host].insert(ev.user_agent.value_or(""));
    if (ev.dest_ip) st.ips.insert(*ev.dest_ip);
    auto [it, inserted] = st.first_visit.try_emplace(ev.host, ev.timestamp);
    if (!inserted) it->second = std::min(it->second, ev.timestamp);
    if (ev.referer_present.value_or(false)) referer_hosts[folded].insert(ev.host);
  }
  for (auto& [folded, st] : domains_) {
    const auto& with_ref = referer_hosts[folded];
    for (const auto& h : st.hosts)
      if (!with_ref.count(h)) st.no_referer_hosts.insert(h);
  }
}

const DayIndex::DomainStats* DayIndex::stats(const std::string& folded) const {
  auto it = domains_.find(folded);
  return it == domains_.end() ? nullptr : &it->second;
}

namespace {

// A host counts as "rare UA" if every UA it used toward the domain is
// absent or rare within the enterprise.
double fraction_rare_ua_hosts(const DayIndex::DomainStats& st,
                              const UaHistory& ua_history,
                              int ua_rare_threshold) {
  if (st.hosts.empty()) return 0.0;
  int rare = 0;
  for (const auto& [host, uas] : st.host_uas) {
    bool all_rare = true;
    for (const auto& ua : uas) {
      std::optional<std::string> opt =
          ua.empty() ? std::nullopt : std::optional<std::string>(ua);
      if (!ua_is_rare(ua_history, opt, ua_rare_threshold)) {
        all_rare = false;
        break;
      }
    }
    if (all_rare) ++rare;
  }
  return static_cast<double>(rare) / static_cast<double>(st.hosts.size());
}

void fill_whois(const std::string& domain, const WhoisDb& whois, int day,
                double& age_days, double& validity_days) {
  auto rec = whois.lookup(domain);
  if (!rec) {
    age_days = missing_feature();
    validity_days = missing_feature();
    return;
  }
  age_days = std::max(0, day - rec->created_day);
  validity_days = std::max(0, rec->expires_day - day);
}

std::uint32_t ipv4_value(const std::string& ip) {
  std::uint32_t value = 0;
  std::istringstream ss(ip);
  std::string part;
  while (std::getline(ss, part, '.'))
    value = (value << 8) | static_cast<std::uint32_t>(std::stoi(part));
  return value;
}

}  // namespace

FeatureMap CcFeatures::to_map() const {
  return {{feature_names::no_hosts, static_cast<double>(no_hosts)},
          {feature_names::no_auto_hosts, static_cast<double>(no_auto_hosts)},
          {feature_names::frac_no_referer, frac_no_referer},
          {feature_names::frac_rare_ua, frac_rare_ua},
          {feature_names::domain_age, domain_age_days},
          {feature_names::domain_validity, domain_validity_days}};
}

FeatureMap SimilarityFeatures::to_map() const {
  return {{feature_names::no_hosts, static_cast<double>(no_hosts)},
          {feature_names::min_time_gap, min_time_gap_s},
          {feature_names::same_ip24, same_ip24 ? 1.0 : 0.0},
          {feature_names::same_ip16, same_ip16 ? 1.0 : 0.0},
          {feature_names::frac_no_referer, frac_no_referer},
          {feature_names::frac_rare_ua, frac_rare_ua},
          {feature_names::domain_age, domain_age_days},
          {feature_names::domain_validity, domain_validity_days}};
}

CcFeatures extract_cc_features(const std::string& domain, const DayIndex& index,
                               const std::set<std::string>& auto_hosts,
                               const UaHistory& ua_history,
                               const WhoisDb& whois, int day,
                               int ua_rare_threshold) {
  CcFeatures f;
  const auto* st = index.stats(domain);
  if (!st) return f;
  f.no_hosts = static_cast<int>(st->hosts.size());
  for (const auto& h : auto_hosts)
    if (st->hosts.count(h)) ++f.no_auto_hosts;
  f.frac_no_referer = st->hosts.empty()
                          ? 0.0
                          : static_cast<double>(st->no_referer_hosts.size()) /
                                static_cast<double>(st->hosts.size());
  f.frac_rare_ua = fraction_rare_ua_hosts(*st, ua_history, ua_rare_threshold);
  fill_whois(domain, whois, day, f.domain_age_days, f.domain_validity_days);
  return f;
}

SimilarityFeatures extract_similarity_features(
    const std::string& domain, const std::set<std::string>& labeled_set,
    const DayIndex& index, const UaHistory& ua_history, const WhoisDb& whois,
    int day, int ua_rare_threshold) {
  SimilarityFeatures f;
  const auto* st = index.stats(domain);
  if (!st) return f;
  f.no_hosts = static_cast<int>(st->hosts.size());
  f.frac_no_referer = st->hosts.empty()
                          ? 0.0
                          : static_cast<double>(st->no_referer_hosts.size()) /
                                static_cast<double>(st->hosts.size());
  f.frac_rare_ua = fraction_rare_ua_hosts(*st, ua_history, ua_rare_threshold);
  fill_whois(domain, whois, day, f.domain_age_days, f.domain_validity_days);

  for (const auto& labeled : labeled_set) {
    if (labeled == domain) continue;
    const auto* ls = index.stats(labeled);
    if (!ls) continue;
    for (const auto& [host, ts] : st->first_visit) {
      auto it = ls->first_visit.find(host);
      if (it == ls->first_visit.end()) continue;
      double gap = std::abs(static_cast<double>(ts - it->second));
      f.min_time_gap_s = std::min(f.min_time_gap_s, gap);
    }
    for (const auto& ip : st->ips) {
      const std::uint32_t v = ipv4_value(ip);
      for (const auto& lip : ls->ips) {
        const std::uint32_t lv = ipv4_value(lip);
        if ((v >> 8) == (lv >> 8)) f.same_ip24 = true;
        if ((v >> 16) == (lv >> 16)) f.same_ip16 = true;
      }
    }
  }
  if (f.same_ip24) f.same_ip16 = true;
  return f;
}

}  // namespace commwatch
