#include "commwatch/beacon.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace commwatch {

std::vector<double> extract_intervals(
    std::span<const std::int64_t> timestamps) {
  std::vector<double> intervals;
  if (timestamps.size() < 2) return intervals;
  intervals.reserve(timestamps.size() - 1);
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] < timestamps[i - 1])
      throw std::invalid_argument("timestamps not sorted");
    intervals.push_back(static_cast<double>(timestamps[i] - timestamps[i - 1]));
  }
  return intervals;
}

IntervalHistogram cluster_intervals(std::span<const double> intervals,
                                    double w) {
  if (intervals.empty())
    throw std::invalid_argument("cluster_intervals on empty input");
  if (w <= 0) throw std::invalid_argument("bin width must be positive");

  struct Cluster {
    double hub;
    int count;
  };
  std::vector<Cluster> clusters;
  for (double t : intervals) {
    bool placed = false;
    for (auto& c : clusters) {
      if (std::abs(t - c.hub) <= w) {
        ++c.count;
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({t, 1});
  }

  IntervalHistogram hist;
  hist.total_intervals = static_cast<int>(intervals.size());
  hist.bins.reserve(clusters.size());
  for (const auto& c : clusters) {
    hist.bins.push_back(
        {c.hub, static_cast<double>(c.count) / hist.total_intervals});
  }
  return hist;
}

IntervalHistogram periodic_reference(const IntervalHistogram& hist) {
  if (hist.bins.empty())
    throw std::invalid_argument("periodic_reference on empty histogram");
  const HistogramBin* best = &hist.bins.front();
  for (const auto& bin : hist.bins) {
    if (bin.frequency > best->frequency ||
        (bin.frequency == best->frequency && bin.hub < best->hub)) {
      best = &bin;
    }
  }
  IntervalHistogram ref;
  ref.total_intervals = hist.total_intervals;
  ref.bins.push_back({best->hub, 1.0});
  return ref;
}

double jeffrey_divergence(const IntervalHistogram& h,
                          const IntervalHistogram& k) {
  // Union of hubs in sorted order; absent hubs contribute frequency 0.
  std::map<double, std::pair<double, double>> freq;
  for (const auto& bin : h.bins) freq[bin.hub].first += bin.frequency;
  for (const auto& bin : k.bins) freq[bin.hub].second += bin.frequency;

  double d = 0.0;
  for (const auto& [hub, hk] : freq) {
    // Accumulate the smaller frequency's term first so the sum is
    // bit-identical under argument swap.
    const double lo = std::min(hk.first, hk.second);
    const double hi = std::max(hk.first, hk.second);
    const double mi = (lo + hi) / 2.0;
    if (lo > 0) d += lo * std::log(lo / mi);
    if (hi > 0) d += hi * std::log(hi / mi);
  }
  return d < 0 ? 0.0 : d;
}

BeaconResult detect_automated(std::span<const std::int64_t> timestamps,
                              const BeaconParams& params) {
  BeaconResult result;
  auto intervals = extract_intervals(timestamps);
  if (static_cast<int>(intervals.size()) < params.min_connections - 1)
    return result;
  result.histogram = cluster_intervals(intervals, params.bin_width_w);
  auto ref = periodic_reference(result.histogram);
  result.period = ref.bins.front().hub;
  result.divergence = jeffrey_divergence(result.histogram, ref);
  result.automated = result.divergence <= params.jeffrey_threshold;
  return result;
}

}  // namespace commwatch
