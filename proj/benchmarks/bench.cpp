#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "commwatch/beacon.hpp"
#include "commwatch/bp.hpp"
#include "commwatch/event.hpp"

using namespace commwatch;

namespace {

std::vector<double> random_intervals(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> draw(30, 3600);
  std::vector<double> intervals(n);
  for (auto& v : intervals) v = draw(rng);
  return intervals;
}

void BM_ClusterIntervals(benchmark::State& state) {
  auto intervals = random_intervals(std::size_t(state.range(0)), 1);
  for (auto _ : state) {
    auto hist = cluster_intervals(intervals, 10.0);
    benchmark::DoNotOptimize(hist);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClusterIntervals)->Range(8, 4096);

void BM_JeffreyDivergence(benchmark::State& state) {
  auto h = cluster_intervals(random_intervals(256, 2), 10.0);
  auto k = cluster_intervals(random_intervals(256, 3), 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(jeffrey_divergence(h, k));
  }
}
BENCHMARK(BM_JeffreyDivergence);

void BM_DetectAutomated(benchmark::State& state) {
  std::mt19937 rng(4);
  std::vector<std::int64_t> ts;
  std::int64_t t = 0;
  for (int i = 0; i < state.range(0); ++i) {
    ts.push_back(t);
    t += 600 + int(rng() % 11) - 5;
  }
  BeaconParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_automated(ts, params));
  }
}
BENCHMARK(BM_DetectAutomated)->Range(16, 1024);

void BM_ParseEventLine(benchmark::State& state) {
  HostMap host_map;
  const std::string line =
      "ts=1700000123\thost=host0042\tdomain=cdn.example.com\t"
      "ip=93.10.20.30\tua=Mozilla/5.0 (popular-1)\tref=1\tstatus=200\tsrc=http";
  for (auto _ : state) {
    auto result = parse_event_line(line, EventSource::http, host_map);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_ParseEventLine);

void BM_BeliefPropagation(benchmark::State& state) {
  const int n_hosts = int(state.range(0));
  const int n_domains = n_hosts * 2;
  std::mt19937 rng(5);
  BipartiteIndex index;
  std::map<std::string, double> base_score;
  for (int d = 0; d < n_domains; ++d) {
    const std::string dom = "d" + std::to_string(d);
    const int degree = 1 + int(rng() % 3);
    for (int e = 0; e < degree; ++e) {
      const std::string host = "h" + std::to_string(rng() % n_hosts);
      index.dom_host[dom].insert(host);
      index.host_rdom[host].insert(dom);
    }
    base_score[dom] = std::uniform_real_distribution<double>(0, 1)(rng);
  }
  auto never_cc = [](const std::string&) { return std::optional<double>{}; };
  auto score = [&](const std::string& d, const std::set<std::string>&) {
    return base_score.at(d);
  };
  std::set<std::string> seeds = {"h0"};
  for (auto _ : state) {
    auto bp = belief_propagation(index, seeds, {}, never_cc, score, {0.25, 20});
    benchmark::DoNotOptimize(bp);
  }
}
BENCHMARK(BM_BeliefPropagation)->Range(16, 512);

}  // namespace

BENCHMARK_MAIN();
