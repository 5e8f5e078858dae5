#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "commwatch/profiles.hpp"

using namespace commwatch;

namespace {

Event make_event(std::int64_t ts, std::string host, std::string domain) {
  Event ev;
  ev.timestamp = ts;
  ev.host = std::move(host);
  ev.domain = std::move(domain);
  ev.source = EventSource::http;
  return ev;
}

}  // namespace

TEST_CASE("fold_domain keeps the last labels") {
  CHECK(fold_domain("news.nbc.com", 2) == "nbc.com");
  CHECK(fold_domain("nbc.com", 2) == "nbc.com");
  CHECK(fold_domain("a.b.c.d", 3) == "b.c.d");
  CHECK(fold_domain("com", 2) == "com");
}

TEST_CASE("history updates set first_seen once and count distinct hosts") {
  DomainHistory history;
  std::vector<Event> day0 = {make_event(10, "hostA", "x.com")};
  history.update(day0, 0, 2);
  CHECK(history.first_seen("x.com") == 0);
  CHECK(history.day_host_count("x.com", 0) == 1);

  std::vector<Event> day5 = {make_event(5 * kSecondsPerDay + 1, "hostB", "x.com"),
                             make_event(5 * kSecondsPerDay + 2, "hostC", "x.com"),
                             make_event(5 * kSecondsPerDay + 3, "hostB", "x.com")};
  history.update(day5, 5, 2);
  CHECK(history.first_seen("x.com") == 0);  // immutable
  CHECK(history.day_host_count("x.com", 5) == 2);
}

TEST_CASE("out-of-order day updates are rejected") {
  DomainHistory history;
  history.update(std::vector<Event>{}, 3, 2);
  CHECK_THROWS_AS(history.update(std::vector<Event>{}, 3, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(history.update(std::vector<Event>{}, 2, 2),
                  std::invalid_argument);
}

TEST_CASE("rare set membership") {
  DomainHistory history;
  std::vector<Event> day0;
  for (int h = 0; h < 3; ++h)
    day0.push_back(make_event(10 + h, "old" + std::to_string(h), "seen.com"));
  history.update(day0, 0, 2);

  std::vector<Event> day1;
  const std::int64_t base = kSecondsPerDay;
  for (int h = 0; h < 3; ++h)
    day1.push_back(make_event(base + h, "h" + std::to_string(h), "fresh.net"));
  for (int h = 0; h < 10; ++h)
    day1.push_back(make_event(base + h, "h" + std::to_string(h), "busy.org"));
  day1.push_back(make_event(base + 50, "h0", "seen.com"));

  auto rare = compute_rare_set(history, day1, 1, 10, 2);
  CHECK(rare.contains("fresh.net"));       // new, 3 hosts
  CHECK_FALSE(rare.contains("busy.org"));  // exactly 10 hosts, strict <
  CHECK_FALSE(rare.contains("seen.com"));  // not new
}

TEST_CASE("rare sets shrink as the threshold decreases") {
  std::mt19937 rng(11);
  DomainHistory history;
  history.update(std::vector<Event>{}, 0, 2);
  std::vector<Event> day;
  for (int d = 0; d < 40; ++d) {
    const int visitors = 1 + static_cast<int>(rng() % 12);
    for (int v = 0; v < visitors; ++v)
      day.push_back(make_event(kSecondsPerDay + d, "h" + std::to_string(v),
                               "dom" + std::to_string(d) + ".com"));
  }
  std::set<std::string> previous;
  for (int threshold = 1; threshold <= 13; ++threshold) {
    auto rare = compute_rare_set(history, day, 1, threshold, 2);
    CHECK(std::includes(rare.domains.begin(), rare.domains.end(),
                        previous.begin(), previous.end()));
    previous = rare.domains;
  }
}

TEST_CASE("rare set never contains previously seen domains") {
  std::mt19937 rng(13);
  DomainHistory history;
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back("d" + std::to_string(i) + ".com");
  for (int day = 0; day < 5; ++day) {
    std::vector<Event> events;
    for (int k = 0; k < 60; ++k) {
      events.push_back(make_event(std::int64_t(day) * kSecondsPerDay + k,
                                  "h" + std::to_string(rng() % 8),
                                  pool[rng() % pool.size()]));
    }
    auto rare = compute_rare_set(history, events, day, 10, 2);
    for (const auto& dom : rare.domains) {
      CHECK_FALSE(history.seen_before(dom, day));
    }
    history.update(events, day, 2);
  }
}

TEST_CASE("ua rarity") {
  UaHistory history;
  std::vector<Event> events;
  for (int h = 0; h < 500; ++h) {
    Event ev = make_event(h, "h" + std::to_string(h), "x.com");
    ev.user_agent = "common-ua";
    events.push_back(ev);
  }
  for (int h = 0; h < 9; ++h) {
    Event ev = make_event(h, "h" + std::to_string(h), "x.com");
    ev.user_agent = "niche-ua";
    events.push_back(ev);
  }
  history.update(events, 0);

  CHECK(ua_is_rare(history, std::nullopt, 10));
  CHECK_FALSE(ua_is_rare(history, "common-ua", 10));
  CHECK(ua_is_rare(history, "niche-ua", 10));  // 9 hosts, boundary
  CHECK(ua_is_rare(history, "never-seen", 10));
}

TEST_CASE("history snapshots round-trip") {
  auto dir = std::filesystem::temp_directory_path() / "commwatch_hist_test";
  std::filesystem::remove_all(dir);

  DomainHistory history;
  UaHistory ua_history;
  for (int day = 0; day < 3; ++day) {
    std::vector<Event> events;
    for (int k = 0; k < 20; ++k) {
      Event ev = make_event(std::int64_t(day) * kSecondsPerDay + k,
                            "h" + std::to_string(k % 5),
                            "d" + std::to_string((day * 7 + k) % 10) + ".com");
      ev.user_agent = "ua-" + std::to_string(k % 3);
      events.push_back(ev);
    }
    history.update(events, day, 2);
    ua_history.update(events, day);
  }
  history.save(dir);
  ua_history.save(dir);

  auto history2 = DomainHistory::load(dir);
  auto ua2 = UaHistory::load(dir);
  CHECK(history2.size() == history.size());
  CHECK(history2.last_day() == history.last_day());
  for (int d = 0; d < 10; ++d) {
    const std::string dom = "d" + std::to_string(d) + ".com";
    CHECK(history2.first_seen(dom) == history.first_seen(dom));
    CHECK(history2.day_host_count(dom, 1) == history.day_host_count(dom, 1));
  }
  CHECK(ua2.host_count("ua-0") == ua_history.host_count("ua-0"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("as_of restores the pre-day view") {
  DomainHistory history;
  UaHistory ua_history;
  for (int day = 0; day < 4; ++day) {
    std::vector<Event> events;
    for (int h = 0; h <= day; ++h) {
      auto ev = make_event(day * kSecondsPerDay + h, "host" + std::to_string(h),
                           "day" + std::to_string(day) + ".com");
      ev.user_agent = "agent" + std::to_string(day);
      events.push_back(std::move(ev));
    }
    history.update(events, day, 2);
    ua_history.update(events, day);
  }

  auto view = history.as_of(2);
  CHECK(view.last_day() == 1);
  CHECK(view.first_seen("day0.com") == 0);
  CHECK(view.first_seen("day1.com") == 1);
  CHECK_FALSE(view.first_seen("day2.com").has_value());
  CHECK(view.day_host_count("day1.com", 1) == 2);
  CHECK(view.day_host_count("day2.com", 2) == 0);
  // The view can ingest the day again, as in a re-run.
  std::vector<Event> replay = {make_event(2 * kSecondsPerDay, "hostX",
                                          "day2.com")};
  view.update(replay, 2, 2);
  CHECK(view.first_seen("day2.com") == 2);

  auto ua_view = ua_history.as_of(2);
  CHECK(ua_view.host_count("agent1") == 2);
  CHECK(ua_view.host_count("agent2") == 0);
  CHECK(ua_view.first_seen("agent0") == 0);
  CHECK_FALSE(ua_view.first_seen("agent3").has_value());

  // A domain re-observed after the cutoff keeps only its earlier days.
  auto full = history.as_of(10);
  CHECK(full.last_day() == 3);
  CHECK(full.first_seen("day3.com") == 3);
}
