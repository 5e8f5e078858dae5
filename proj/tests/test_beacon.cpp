#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "commwatch/beacon.hpp"

using namespace commwatch;

namespace {

// Independent hand-simulation of the hub clustering rule, used as the
// oracle for cluster_intervals.
std::vector<std::pair<double, double>> cluster_oracle(
    const std::vector<double>& intervals, double w) {
  std::vector<double> hubs;
  std::vector<int> counts;
  for (double t : intervals) {
    bool placed = false;
    for (std::size_t i = 0; i < hubs.size(); ++i) {
      if (std::abs(t - hubs[i]) <= w) {
        ++counts[i];
        placed = true;
        break;
      }
    }
    if (!placed) {
      hubs.push_back(t);
      counts.push_back(1);
    }
  }
  std::vector<std::pair<double, double>> bins;
  for (std::size_t i = 0; i < hubs.size(); ++i)
    bins.emplace_back(hubs[i], double(counts[i]) / intervals.size());
  return bins;
}

double freq_of(const IntervalHistogram& hist, double hub) {
  for (const auto& bin : hist.bins)
    if (bin.hub == hub) return bin.frequency;
  return -1.0;
}

IntervalHistogram make_hist(std::vector<std::pair<double, double>> bins) {
  IntervalHistogram h;
  for (auto [hub, f] : bins) h.bins.push_back({hub, f});
  h.total_intervals = 100;
  return h;
}

}  // namespace

TEST_CASE("extract_intervals") {
  std::vector<std::int64_t> ts = {0, 120, 240, 360};
  CHECK(extract_intervals(ts) == std::vector<double>{120, 120, 120});
  std::vector<std::int64_t> single = {42};
  CHECK(extract_intervals(single).empty());
  std::vector<std::int64_t> uneven = {0, 120, 121};
  CHECK(extract_intervals(uneven) == std::vector<double>{120, 1});
}

TEST_CASE("cluster_intervals matches the hand-simulated rule") {
  // [600,601,599,3600], W=10 -> {600: 0.75, 3600: 0.25}
  std::vector<double> a = {600, 601, 599, 3600};
  auto hist = cluster_intervals(a, 10);
  REQUIRE(hist.bins.size() == 2);
  CHECK(freq_of(hist, 600) == doctest::Approx(0.75));
  CHECK(freq_of(hist, 3600) == doctest::Approx(0.25));

  std::vector<double> b = {120, 120, 120};
  hist = cluster_intervals(b, 10);
  REQUIRE(hist.bins.size() == 1);
  CHECK(freq_of(hist, 120) == doctest::Approx(1.0));

  // |14-5| = 9 <= 10 joins the first hub; 30 founds its own.
  std::vector<double> c = {5, 14, 30};
  hist = cluster_intervals(c, 10);
  REQUIRE(hist.bins.size() == 2);
  CHECK(freq_of(hist, 5) == doctest::Approx(2.0 / 3.0));
  CHECK(freq_of(hist, 30) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cluster_intervals equals the oracle on random inputs") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> draw(0, 500);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> intervals;
    const int n = 1 + int(rng() % 40);
    for (int i = 0; i < n; ++i) intervals.push_back(draw(rng));
    const double w = 1 + double(rng() % 50);
    auto hist = cluster_intervals(intervals, w);
    auto oracle = cluster_oracle(intervals, w);
    REQUIRE(hist.bins.size() == oracle.size());
    double freq_sum = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(hist.bins[i].hub == oracle[i].first);
      CHECK(hist.bins[i].frequency == doctest::Approx(oracle[i].second));
      freq_sum += hist.bins[i].frequency;
      // Hubs pairwise distinct.
      for (std::size_t j = 0; j < i; ++j)
        CHECK(hist.bins[i].hub != hist.bins[j].hub);
    }
    CHECK(freq_sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("periodic_reference picks the max-frequency hub, ties to smaller") {
  auto ref = periodic_reference(make_hist({{600, 0.75}, {3600, 0.25}}));
  REQUIRE(ref.bins.size() == 1);
  CHECK(ref.bins[0].hub == 600);
  CHECK(ref.bins[0].frequency == 1.0);

  ref = periodic_reference(make_hist({{120, 1.0}}));
  CHECK(ref.bins[0].hub == 120);

  ref = periodic_reference(make_hist({{600, 0.5}, {60, 0.5}}));
  CHECK(ref.bins[0].hub == 60);
}

TEST_CASE("jeffrey divergence values") {
  auto h = make_hist({{600, 0.75}, {3600, 0.25}});
  CHECK(jeffrey_divergence(h, h) == 0.0);

  // 0.75 ln(0.75/0.875) + 1 ln(1/0.875) + 0.25 ln(0.25/0.125)
  auto k = make_hist({{600, 1.0}});
  const double expected = 0.75 * std::log(0.75 / 0.875) +
                          1.0 * std::log(1.0 / 0.875) +
                          0.25 * std::log(0.25 / 0.125);
  CHECK(jeffrey_divergence(h, k) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(jeffrey_divergence(h, k) == doctest::Approx(0.1912).epsilon(1e-3));

  // Disjoint support saturates at 2 ln 2.
  auto a = make_hist({{10, 1.0}});
  auto b = make_hist({{500, 1.0}});
  CHECK(jeffrey_divergence(a, b) ==
        doctest::Approx(2 * std::log(2)).epsilon(1e-12));

  // Alternating 60/600 gaps vs the periodic reference.
  auto alt = make_hist({{60, 0.5}, {600, 0.5}});
  auto ref = make_hist({{60, 1.0}});
  const double alt_expected = 0.5 * std::log(0.5 / 0.75) +
                              1.0 * std::log(1.0 / 0.75) +
                              0.5 * std::log(0.5 / 0.25);
  CHECK(jeffrey_divergence(alt, ref) ==
        doctest::Approx(alt_expected).epsilon(1e-12));
  CHECK(alt_expected == doctest::Approx(0.4316).epsilon(1e-3));
}

TEST_CASE("jeffrey divergence is symmetric and bounded on random pairs") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  auto random_hist = [&](int bins) {
    IntervalHistogram h;
    double total = 0;
    for (int i = 0; i < bins; ++i) {
      double hub = double(10 * (1 + rng() % 50));
      bool dup = false;
      for (auto& b : h.bins)
        if (b.hub == hub) dup = true;
      if (dup) continue;
      h.bins.push_back({hub, unit(rng)});
      total += h.bins.back().frequency;
    }
    for (auto& b : h.bins) b.frequency /= total;
    h.total_intervals = 50;
    return h;
  };
  for (int trial = 0; trial < 500; ++trial) {
    auto h = random_hist(1 + int(rng() % 6));
    auto k = random_hist(1 + int(rng() % 6));
    const double d1 = jeffrey_divergence(h, k);
    const double d2 = jeffrey_divergence(k, h);
    CHECK(d1 == d2);  // exact symmetry
    CHECK(d1 >= 0.0);
    CHECK(d1 <= 2 * std::log(2) + 1e-12);
    CHECK(jeffrey_divergence(h, h) == 0.0);
  }
}

TEST_CASE("perfectly periodic traffic is automated") {
  BeaconParams params;  // W=10, J_T=0.06
  std::vector<std::int64_t> ts;
  for (int i = 0; i < 20; ++i) ts.push_back(1000 + 120 * i);
  auto result = detect_automated(ts, params);
  CHECK(result.automated);
  CHECK(result.period == 120);
  CHECK(result.divergence == 0.0);
}

TEST_CASE("jittered periodic traffic stays in one cluster") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> jitter(-5, 5);
  BeaconParams params;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> ts;
    std::int64_t t = 500;
    for (int i = 0; i < 20; ++i) {
      ts.push_back(t);
      t += 120 + jitter(rng);
    }
    auto result = detect_automated(ts, params);
    CHECK(result.automated);
    CHECK(result.histogram.bins.size() == 1);
    CHECK(result.divergence == 0.0);
  }
}

TEST_CASE("alternating-gap traffic is not automated") {
  BeaconParams params;
  // 11 connections -> 10 intervals, five of 60s and five of 600s.
  std::vector<std::int64_t> ts;
  std::int64_t t = 0;
  for (int i = 0; i < 11; ++i) {
    ts.push_back(t);
    t += (i % 2 == 0) ? 60 : 600;
  }
  auto result = detect_automated(ts, params);
  CHECK_FALSE(result.automated);
  CHECK(result.divergence == doctest::Approx(0.4316).epsilon(1e-3));
}

TEST_CASE("too few connections are never automated") {
  BeaconParams params;
  std::vector<std::int64_t> ts = {0, 120, 240};  // 2 intervals < min 3
  CHECK_FALSE(detect_automated(ts, params).automated);
}

TEST_CASE("raising J_T never un-labels an automated pair") {
  std::mt19937 rng(31);
  BeaconParams params;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> ts;
    std::int64_t t = 0;
    for (int i = 0; i < 12; ++i) {
      ts.push_back(t);
      t += 30 + rng() % 300;
    }
    bool previous = false;
    for (double jt : {0.0, 0.05, 0.2, 0.5, 1.0, 1.4}) {
      params.jeffrey_threshold = jt;
      const bool automated = detect_automated(ts, params).automated;
      if (previous) CHECK(automated);
      previous = automated;
    }
  }
}
