#include "commwatch/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "commwatch/event.hpp"
#include "commwatch/features.hpp"
#include "commwatch/profiles.hpp"

namespace commwatch {

namespace {

std::string zero_pad(int value, int width) {
  std::ostringstream ss;
  ss.width(width);
  ss.fill('0');
  ss << value;
  return ss.str();
}

bool valid_subnet24(const std::string& subnet) {
  int dots = 0;
  for (char c : subnet)
    if (c == '.') ++dots;
  return dots == 2 && is_ipv4_literal(subnet + ".1");
}

}  // namespace

void CampaignSpec::validate() const {
  if (campaign_id.empty()) throw std::invalid_argument("empty campaign_id");
  if (hosts.empty()) throw std::invalid_argument("campaign without hosts");
  if (cc_domain.empty()) throw std::invalid_argument("campaign without cc domain");
  if (cc_period_s <= 0) throw std::invalid_argument("cc_period_s must be > 0");
  if (cc_jitter_s < 0 || cc_jitter_s >= cc_period_s)
    throw std::invalid_argument("cc_jitter_s must be in [0, cc_period_s)");
  if (delivery_domains < 0)
    throw std::invalid_argument("negative delivery_domains");
  if (stage_gap_max_s <= 0)
    throw std::invalid_argument("stage_gap_max_s must be > 0");
  if (!valid_subnet24(shared_subnet))
    throw std::invalid_argument("shared_subnet must be a /24 prefix");
  if (whois_age_days < 0 || whois_validity_days < 0)
    throw std::invalid_argument("negative whois interval");
  if (active_days < 1) throw std::invalid_argument("active_days must be >= 1");
}

void BenignSpec::validate() const {
  if (n_hosts < 1 || days < 1)
    throw std::invalid_argument("benign trace needs hosts and days");
  if (domains_popular < 1)
    throw std::invalid_argument("need at least one popular domain");
  if (domains_rare_per_day < 0 || auto_updater_hosts < 0)
    throw std::invalid_argument("negative count in benign spec");
  if (referer_presence_prob < 0 || referer_presence_prob > 1)
    throw std::invalid_argument("referer_presence_prob out of [0,1]");
  if (arrival_mean_s <= 0 || arrival_sigma <= 0 || updater_period_s <= 0)
    throw std::invalid_argument("non-positive timing parameter");
  if (auto_updater_hosts > n_hosts)
    throw std::invalid_argument("more updater hosts than hosts");
}

namespace {

struct SimEvent {
  std::int64_t ts;
  std::string host;
  std::string domain;
  std::string ip;
  std::optional<std::string> ua;
  bool referer;
  int status;

  bool operator<(const SimEvent& other) const {
    return std::tie(ts, host, domain) <
           std::tie(other.ts, other.host, other.domain);
  }
};

std::string popular_domain_name(int i) {
  return "site" + zero_pad(i, 4) + ".com";
}

std::string popular_domain_ip(int i) {
  return "93." + std::to_string(i / 250 % 200) + "." +
         std::to_string(i % 250) + ".10";
}

std::string rare_domain_name(int day, int i) {
  return "day" + std::to_string(day) + "-rare" + std::to_string(i) + ".net";
}

std::string rare_domain_ip(int day, int i) {
  return "98." + std::to_string(day % 200) + "." + std::to_string(i % 250) +
         "." + std::to_string(1 + i % 200);
}

std::string updater_domain_name(int day, int host_idx) {
  return "day" + std::to_string(day) + "-upd" + std::to_string(host_idx) +
         ".com";
}

std::string updater_domain_ip(int day, int host_idx) {
  return "99." + std::to_string(day % 200) + "." +
         std::to_string(host_idx % 250) + ".5";
}

}  // namespace

TracePaths generate_trace(const BenignSpec& benign,
                          const std::vector<CampaignSpec>& campaigns,
                          std::uint64_t rng_seed,
                          const std::filesystem::path& out_dir) {
  benign.validate();
  for (const auto& c : campaigns) c.validate();

  std::filesystem::create_directories(out_dir);
  std::mt19937_64 rng(rng_seed);

  std::vector<std::string> hosts;
  hosts.reserve(benign.n_hosts);
  for (int i = 0; i < benign.n_hosts; ++i)
    hosts.push_back("host" + zero_pad(i, 4));

  std::vector<std::string> ua_popular, ua_rare;
  for (int i = 0; i < benign.ua_pool_popular; ++i)
    ua_popular.push_back("Mozilla/5.0 (popular-" + std::to_string(i) + ")");
  for (int i = 0; i < benign.ua_pool_rare; ++i)
    ua_rare.push_back("agent/1." + std::to_string(i));
  if (ua_popular.empty()) ua_popular.push_back("Mozilla/5.0 (default)");

  std::vector<SimEvent> events;
  std::map<std::string, WhoisRecord> whois;

  const double mu =
      std::log(benign.arrival_mean_s) - benign.arrival_sigma * benign.arrival_sigma / 2;
  std::lognormal_distribution<double> lognormal(mu, benign.arrival_sigma);
  std::exponential_distribution<double> exponential(1.0 / benign.arrival_mean_s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Registration data varies across benign domains; identical ages would
  // make the WHOIS features degenerate for model fitting.
  auto benign_whois = [&](int seen_day) {
    const int age_spread = std::max(1, benign.whois_age_days / 4);
    const int validity_spread = std::max(1, benign.whois_validity_days / 4);
    const int age = benign.whois_age_days +
                    std::uniform_int_distribution<int>(-age_spread, age_spread)(rng);
    const int validity =
        benign.whois_validity_days +
        std::uniform_int_distribution<int>(-validity_spread, validity_spread)(rng);
    return WhoisRecord{seen_day - age, seen_day + validity};
  };

  // Benign browsing over popular domains.
  for (int day = 0; day < benign.days; ++day) {
    const std::int64_t day_start = std::int64_t(day) * kSecondsPerDay;
    const std::int64_t day_end = day_start + kSecondsPerDay;
    for (int hi = 0; hi < benign.n_hosts; ++hi) {
      double t = static_cast<double>(day_start);
      while (true) {
        const double gap = benign.inter_arrival_model == BenignSpec::Arrival::lognormal
                               ? lognormal(rng)
                               : exponential(rng);
        t += std::max(1.0, gap);
        if (t >= static_cast<double>(day_end)) break;
        const int di =
            std::uniform_int_distribution<int>(0, benign.domains_popular - 1)(rng);
        SimEvent ev;
        ev.ts = static_cast<std::int64_t>(t);
        ev.host = hosts[hi];
        ev.domain = popular_domain_name(di);
        ev.ip = popular_domain_ip(di);
        ev.ua = unit(rng) < 0.98 ? ua_popular[hi % ua_popular.size()]
                                 : (ua_rare.empty()
                                        ? ua_popular[0]
                                        : ua_rare[hi % ua_rare.size()]);
        ev.referer = unit(rng) < benign.referer_presence_prob;
        ev.status = 200;
        events.push_back(std::move(ev));
      }
    }

    // Benign rare destinations: fresh names contacted by a handful of hosts.
    for (int ri = 0; ri < benign.domains_rare_per_day; ++ri) {
      const int n_visitors = 1 + std::uniform_int_distribution<int>(0, 2)(rng);
      for (int v = 0; v < n_visitors; ++v) {
        const int hi =
            std::uniform_int_distribution<int>(0, benign.n_hosts - 1)(rng);
        const int n_visits = 1 + std::uniform_int_distribution<int>(0, 2)(rng);
        for (int k = 0; k < n_visits; ++k) {
          SimEvent ev;
          ev.ts = day_start + std::uniform_int_distribution<std::int64_t>(
                                  0, kSecondsPerDay - 1)(rng);
          ev.host = hosts[hi];
          ev.domain = rare_domain_name(day, ri);
          ev.ip = rare_domain_ip(day, ri);
          ev.ua = unit(rng) < 0.98 ? ua_popular[hi % ua_popular.size()]
                                   : (ua_rare.empty()
                                          ? ua_popular[0]
                                          : ua_rare[hi % ua_rare.size()]);
          // Rare destinations are reached directly about half the time.
          ev.referer = unit(rng) < benign.referer_presence_prob * 0.5;
          ev.status = 200;
          events.push_back(std::move(ev));
        }
      }
      whois[rare_domain_name(day, ri)] = benign_whois(day);
    }

    // Benign auto-updaters: periodic rare channels with popular UA and
    // referer, giving the feature-based scorer genuine negatives.
    for (int ui = 0; ui < benign.auto_updater_hosts; ++ui) {
      const std::int64_t period =
          static_cast<std::int64_t>(benign.updater_period_s);
      std::int64_t t = day_start + std::uniform_int_distribution<std::int64_t>(
                                       60, std::max<std::int64_t>(61, period))(rng);
      const std::string domain = updater_domain_name(day, ui);
      const std::string ip = updater_domain_ip(day, ui);
      // Updaters differ in client behavior: some poll with a dedicated
      // agent string, some without a referer.
      const bool dedicated_agent = unit(rng) < 0.5;
      const bool sends_referer = unit(rng) < 0.5;
      const std::string agent = dedicated_agent
                                    ? "updater-agent/" + std::to_string(ui)
                                    : ua_popular[ui % ua_popular.size()];
      while (t < day_end) {
        SimEvent ev;
        ev.ts = t;
        ev.host = hosts[ui];
        ev.domain = domain;
        ev.ip = ip;
        ev.ua = agent;
        ev.referer = sends_referer;
        ev.status = 200;
        events.push_back(std::move(ev));
        t += period + std::uniform_int_distribution<std::int64_t>(-2, 2)(rng);
      }
      whois[domain] = benign_whois(day);
    }
  }

  for (int pi = 0; pi < benign.domains_popular; ++pi)
    whois[popular_domain_name(pi)] = benign_whois(0);

  // Planted campaigns: clustered delivery visits, then periodic C&C.
  GroundTruth truth;
  for (const auto& c : campaigns) {
    std::vector<std::string> delivery;
    for (int k = 0; k < c.delivery_domains; ++k)
      delivery.push_back(c.campaign_id + "-dl" + std::to_string(k) + ".xyz");

    const std::int64_t period = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(c.cc_period_s)));
    const std::int64_t jitter =
        static_cast<std::int64_t>(std::llround(c.cc_jitter_s));
    const std::int64_t gap_max = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(c.stage_gap_max_s)));

    for (int d = 0; d < c.active_days; ++d) {
      const int day = c.start_day + d;
      const std::int64_t day_start = std::int64_t(day) * kSecondsPerDay;
      const std::int64_t day_end = day_start + kSecondsPerDay;
      for (const auto& host : c.hosts) {
        // Leave room for at least ten beacon connections.
        const std::int64_t latest_start =
            std::max<std::int64_t>(3600, kSecondsPerDay - 11 * period -
                                             2 * gap_max *
                                                 (c.delivery_domains + 1));
        std::int64_t t = day_start + std::uniform_int_distribution<std::int64_t>(
                                         600, latest_start)(rng);
        for (std::size_t k = 0; k < delivery.size(); ++k) {
          t += std::uniform_int_distribution<std::int64_t>(1, gap_max)(rng);
          SimEvent ev;
          ev.ts = t;
          ev.host = host;
          ev.domain = delivery[k];
          ev.ip = c.shared_subnet + "." + std::to_string(10 + k);
          ev.ua = std::nullopt;
          ev.referer = false;
          ev.status = 200;
          events.push_back(std::move(ev));
        }
        t += std::uniform_int_distribution<std::int64_t>(1, gap_max)(rng);
        while (t < day_end) {
          SimEvent ev;
          ev.ts = t;
          ev.host = host;
          ev.domain = c.cc_domain;
          ev.ip = c.shared_subnet + ".9";
          ev.ua = std::nullopt;
          ev.referer = false;
          ev.status = 200;
          events.push_back(std::move(ev));
          t += period + (jitter > 0
                             ? std::uniform_int_distribution<std::int64_t>(
                                   -jitter, jitter)(rng)
                             : 0);
        }
      }
    }

    whois[c.cc_domain] = {c.start_day - c.whois_age_days,
                          c.start_day + c.whois_validity_days};
    truth.domains.push_back({c.cc_domain, c.campaign_id, "cc"});
    for (std::size_t k = 0; k < delivery.size(); ++k) {
      whois[delivery[k]] = {c.start_day - c.whois_age_days,
                            c.start_day + c.whois_validity_days};
      truth.domains.push_back({delivery[k], c.campaign_id, "delivery"});
    }
    for (const auto& host : c.hosts)
      truth.hosts.push_back({host, c.campaign_id});
  }

  std::stable_sort(events.begin(), events.end());

  TracePaths paths;
  paths.events = out_dir / "events.tsv";
  paths.whois = out_dir / "whois.tsv";
  paths.hostmap = out_dir / "hostmap.tsv";
  paths.ground_truth = out_dir / "ground_truth.tsv";

  {
    std::ofstream out(paths.events);
    for (const auto& ev : events) {
      Event e;
      e.timestamp = ev.ts;
      e.host = ev.host;
      e.domain = ev.domain;
      e.dest_ip = ev.ip;
      if (ev.ua) e.user_agent = ev.ua;
      e.referer_present = ev.referer;
      e.status_code = ev.status;
      e.source = EventSource::http;
      out << format_event_line(e) << '\n';
    }
  }
  {
    WhoisDb db;
    for (const auto& [domain, rec] : whois) db.add(domain, rec);
    db.save(paths.whois);
  }
  {
    std::ofstream out(paths.hostmap);  // identifiers are already resolved
  }
  {
    std::ofstream out(paths.ground_truth);
    for (const auto& d : truth.domains)
      out << d.domain << '\t' << d.campaign_id << '\t' << d.stage << '\n';
    for (const auto& h : truth.hosts)
      out << h.host << '\t' << h.campaign_id << '\n';
  }
  return paths;
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open ground truth: " + path.string());
  GroundTruth truth;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() == 3)
      truth.domains.push_back({fields[0], fields[1], fields[2]});
    else if (fields.size() == 2)
      truth.hosts.push_back({fields[0], fields[1]});
    else
      throw std::runtime_error("bad ground-truth line: " + line);
  }
  return truth;
}

}  // namespace commwatch
