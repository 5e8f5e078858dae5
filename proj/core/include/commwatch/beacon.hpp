#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace commwatch {

/// Dynamically binned inter-connection interval distribution.
/// Each bin is a cluster centered on its founding interval (the "hub").
struct HistogramBin {
  double hub = 0.0;        // seconds
  double frequency = 0.0;  // fraction of intervals in this bin
};

struct IntervalHistogram {
  std::vector<HistogramBin> bins;
  int total_intervals = 0;
};

struct BeaconParams {
  double bin_width_w = 10.0;       // cluster half-width W, seconds
  double jeffrey_threshold = 0.06; // J_T
  int min_connections = 4;
};

struct BeaconResult {
  bool automated = false;
  IntervalHistogram histogram;
  double period = 0.0;      // hub of the periodic reference
  double divergence = 0.0;  // Jeffrey divergence against the reference
};

/// Pairwise gaps between successive timestamps; empty for < 2 events.
/// Timestamps must be sorted ascending.
std::vector<double> extract_intervals(std::span<const std::int64_t> timestamps);

/// Online hub clustering: the first interval founds the first cluster; each
/// subsequent interval joins the first existing cluster (in creation order)
/// whose hub is within `w`, else founds a new cluster.
IntervalHistogram cluster_intervals(std::span<const double> intervals,
                                    double w);

/// One-bin histogram at the hub of the maximum-frequency bin.
/// Ties choose the smallest hub.
IntervalHistogram periodic_reference(const IntervalHistogram& hist);

/// Symmetric Jeffrey divergence over the union of hubs, natural log,
/// 0*log 0 := 0. Range [0, 2 ln 2].
double jeffrey_divergence(const IntervalHistogram& h,
                          const IntervalHistogram& k);

/// Labels one (host, domain, day) channel automated if its interval
/// histogram is within jeffrey_threshold of the periodic reference.
BeaconResult detect_automated(std::span<const std::int64_t> timestamps,
                              const BeaconParams& params);

}  // namespace commwatch
