#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "commwatch/features.hpp"

namespace commwatch {

/// Raised by fit_ols when the normalized design matrix is singular.
class DegenerateFitError : public std::runtime_error {
 public:
  DegenerateFitError(std::string message, std::vector<std::string> features)
      : std::runtime_error(std::move(message)),
        collinear_features(std::move(features)) {}
  std::vector<std::string> collinear_features;
};

/// Linear scoring model over min-max normalized features.
struct RegressionModel {
  std::vector<std::string> feature_names;
  std::map<std::string, double> weights;
  double intercept = 0.0;
  std::map<std::string, std::pair<double, double>> norm_params;  // (min, max)
  std::map<std::string, double> defaults;  // raw-scale fill-ins for misses

  void save(const std::filesystem::path& path) const;
  static RegressionModel load(const std::filesystem::path& path);
};

struct Thresholds {
  double cc_score = 0.4;         // T_c
  double similarity_score = 0.25;  // T_score
  int max_iterations = 20;
};

struct TrainingSample {
  FeatureMap features;
  double label = 0.0;  // {0,1}
};

/// Ordinary least squares on min-max normalized features. Missing (NaN)
/// feature values are replaced by the per-feature mean of present values,
/// which is also stored as the model default.
RegressionModel fit_ols(const std::vector<std::string>& feature_names,
                        std::span<const TrainingSample> samples);

/// intercept + sum of weight * normalized feature; normalized values are
/// clamped to [0,1], missing features filled from model defaults.
double score_domain(const RegressionModel& model, const FeatureMap& features);

/// Additive similarity score used when training data is too scarce for
/// regression: connectivity + timing + IP proximity, normalized to [0,1].
double lanl_similarity_score(int connectivity_hosts, bool timing_correlated,
                             IpProximity proximity);

struct AutomatedChannel {
  std::string host;
  double period_s = 0.0;
  std::int64_t first_ts = 0;
};

/// Two-host heuristic: at least two distinct hosts with automated channels
/// to the domain whose periods or first-connection times fall within
/// `window_s` of each other.
bool lanl_detect_cc(std::span<const AutomatedChannel> channels,
                    double window_s = 10.0);

}  // namespace commwatch
