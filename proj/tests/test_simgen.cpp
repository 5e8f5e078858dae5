#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "commwatch/beacon.hpp"
#include "commwatch/pipeline.hpp"
#include "commwatch/simgen.hpp"

using namespace commwatch;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BenignSpec small_benign() {
  BenignSpec spec;
  spec.n_hosts = 20;
  spec.days = 2;
  spec.domains_popular = 10;
  spec.domains_rare_per_day = 5;
  spec.arrival_mean_s = 2000;
  return spec;
}

CampaignSpec small_campaign() {
  CampaignSpec spec;
  spec.campaign_id = "c1";
  spec.hosts = {"host0001", "host0002", "host0003"};
  spec.delivery_domains = 2;
  spec.cc_domain = "c1-cc.net";
  spec.cc_period_s = 120;
  spec.cc_jitter_s = 5;
  spec.shared_subnet = "185.40.1";
  spec.start_day = 1;
  return spec;
}

}  // namespace

TEST_CASE("invalid specs are rejected before generation") {
  auto dir = temp_dir("commwatch_sim_invalid");
  CampaignSpec bad = small_campaign();
  bad.cc_jitter_s = 500;  // >= period
  CHECK_THROWS_AS(generate_trace(small_benign(), {bad}, 1, dir),
                  std::invalid_argument);
  bad = small_campaign();
  bad.hosts.clear();
  CHECK_THROWS_AS(generate_trace(small_benign(), {bad}, 1, dir),
                  std::invalid_argument);
  BenignSpec bad_benign = small_benign();
  bad_benign.referer_presence_prob = 1.5;
  CHECK_THROWS_AS(generate_trace(bad_benign, {}, 1, dir),
                  std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("empty campaign list gives a pure benign trace") {
  auto dir = temp_dir("commwatch_sim_benign");
  auto paths = generate_trace(small_benign(), {}, 7, dir);
  auto truth = GroundTruth::load(paths.ground_truth);
  CHECK(truth.domains.empty());
  CHECK(truth.hosts.empty());
  CHECK(fs::file_size(paths.events) > 0);
  fs::remove_all(dir);
}

TEST_CASE("campaign trace matches its ground truth") {
  auto dir = temp_dir("commwatch_sim_campaign");
  auto campaign = small_campaign();
  auto paths = generate_trace(small_benign(), {campaign}, 7, dir);
  auto truth = GroundTruth::load(paths.ground_truth);
  CHECK(truth.domains.size() == 3);  // 2 delivery + 1 cc
  CHECK(truth.hosts.size() == 3);

  PipelineConfig config;
  HostMap host_map;
  auto events = load_events(paths.events, EventSource::http, host_map, config);
  REQUIRE_FALSE(events.empty());
  // Events are sorted.
  for (std::size_t i = 1; i < events.size(); ++i)
    CHECK(events[i - 1].timestamp <= events[i].timestamp);

  // Every ground-truth domain appears in the events and vice versa for
  // campaign traffic; C&C inter-connection intervals stay within jitter.
  std::set<std::string> event_domains;
  std::map<std::string, std::vector<std::int64_t>> cc_times;
  for (const auto& ev : events) {
    event_domains.insert(ev.domain);
    if (ev.domain == campaign.cc_domain) cc_times[ev.host].push_back(ev.timestamp);
  }
  for (const auto& d : truth.domains) CHECK(event_domains.count(d.domain) == 1);
  for (const auto& host : campaign.hosts) {
    REQUIRE(cc_times.count(host) == 1);
    const auto& ts = cc_times[host];
    CHECK(ts.size() >= 8);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const auto gap = ts[i] - ts[i - 1];
      CHECK(gap >= 115);
      CHECK(gap <= 125);
    }
  }

  // WHOIS entries exist for campaign domains with the configured age.
  auto whois = WhoisDb::load(paths.whois);
  auto rec = whois.lookup(campaign.cc_domain);
  REQUIRE(rec.has_value());
  CHECK(campaign.start_day - rec->created_day == campaign.whois_age_days);
  CHECK(rec->expires_day - campaign.start_day == campaign.whois_validity_days);
  fs::remove_all(dir);
}

TEST_CASE("planted channels pass the beacon detector") {
  auto dir = temp_dir("commwatch_sim_beacon");
  auto campaign = small_campaign();
  auto paths = generate_trace(small_benign(), {campaign}, 3, dir);
  PipelineConfig config;
  HostMap host_map;
  auto events = load_events(paths.events, EventSource::http, host_map, config);
  std::map<std::string, std::vector<std::int64_t>> cc_times;
  for (const auto& ev : events)
    if (ev.domain == campaign.cc_domain) cc_times[ev.host].push_back(ev.timestamp);
  BeaconParams params;  // W=10, J_T=0.06
  for (const auto& [host, ts] : cc_times) {
    auto result = detect_automated(ts, params);
    CHECK(result.automated);
  }
  fs::remove_all(dir);
}

TEST_CASE("identical seeds give byte-identical files") {
  auto dir_a = temp_dir("commwatch_sim_det_a");
  auto dir_b = temp_dir("commwatch_sim_det_b");
  auto campaign = small_campaign();
  auto a = generate_trace(small_benign(), {campaign}, 99, dir_a);
  auto b = generate_trace(small_benign(), {campaign}, 99, dir_b);
  CHECK(file_bytes(a.events) == file_bytes(b.events));
  CHECK(file_bytes(a.whois) == file_bytes(b.whois));
  CHECK(file_bytes(a.ground_truth) == file_bytes(b.ground_truth));

  auto dir_c = temp_dir("commwatch_sim_det_c");
  auto c = generate_trace(small_benign(), {campaign}, 100, dir_c);
  CHECK(file_bytes(a.events) != file_bytes(c.events));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::remove_all(dir_c);
}

TEST_CASE("no benign domain lands in a campaign subnet") {
  auto dir = temp_dir("commwatch_sim_subnet");
  auto campaign = small_campaign();
  auto paths = generate_trace(small_benign(), {campaign}, 5, dir);
  PipelineConfig config;
  HostMap host_map;
  auto events = load_events(paths.events, EventSource::http, host_map, config);
  std::set<std::string> campaign_domains;
  for (const auto& d : GroundTruth::load(paths.ground_truth).domains)
    campaign_domains.insert(d.domain);
  for (const auto& ev : events) {
    if (campaign_domains.count(ev.domain)) continue;
    REQUIRE(ev.dest_ip.has_value());
    CHECK_FALSE(ev.dest_ip->starts_with(campaign.shared_subnet + "."));
  }
  fs::remove_all(dir);
}
