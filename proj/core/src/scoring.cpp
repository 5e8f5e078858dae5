#include "commwatch/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace commwatch {

namespace {

constexpr const char* kModelHeader = "commwatch-model v1";

double normalize(double value, double lo, double hi) {
  if (hi <= lo) return 0.0;
  return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

RegressionModel fit_ols(const std::vector<std::string>& feature_names,
                        std::span<const TrainingSample> samples) {
  const std::size_t n = samples.size();
  const std::size_t k = feature_names.size();
  if (n < 2) throw std::invalid_argument("fit_ols needs at least 2 samples");
  if (k < 1) throw std::invalid_argument("fit_ols needs at least 1 feature");

  RegressionModel model;
  model.feature_names = feature_names;

  // Per-feature extrema and mean of present values.
  for (const auto& name : feature_names) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    int present = 0;
    for (const auto& s : samples) {
      auto it = s.features.find(name);
      if (it == s.features.end() || std::isnan(it->second)) continue;
      lo = std::min(lo, it->second);
      hi = std::max(hi, it->second);
      sum += it->second;
      ++present;
    }
    if (present == 0) {
      lo = 0.0;
      hi = 0.0;
      model.defaults[name] = 0.0;
    } else {
      model.defaults[name] = sum / present;
    }
    model.norm_params[name] = {lo, hi};
  }

  // Design matrix with intercept column, normalized to [0,1].
  const std::size_t cols = k + 1;
  std::vector<std::vector<double>> x(n, std::vector<double>(cols, 1.0));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = samples[i].label;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& name = feature_names[j];
      auto it = samples[i].features.find(name);
      double raw = (it == samples[i].features.end() || std::isnan(it->second))
                       ? model.defaults[name]
                       : it->second;
      const auto [lo, hi] = model.norm_params[name];
      x[i][j + 1] = normalize(raw, lo, hi);
    }
  }

  // Normal equations (X'X) b = X'y, Gaussian elimination with partial
  // pivoting; a vanishing pivot names the collinear column.
  std::vector<std::vector<double>> a(cols, std::vector<double>(cols + 1, 0.0));
  for (std::size_t r = 0; r < cols; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += x[i][r] * x[i][c];
      a[r][c] = sum;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += x[i][r] * y[i];
    a[r][cols] = sum;
  }

  double max_diag = 1.0;
  for (std::size_t r = 0; r < cols; ++r) max_diag = std::max(max_diag, a[r][r]);
  const double pivot_tol = 1e-9 * max_diag;

  for (std::size_t p = 0; p < cols; ++p) {
    std::size_t best = p;
    for (std::size_t r = p + 1; r < cols; ++r)
      if (std::abs(a[r][p]) > std::abs(a[best][p])) best = r;
    std::swap(a[p], a[best]);
    if (std::abs(a[p][p]) < pivot_tol) {
      std::vector<std::string> bad;
      for (std::size_t q = p; q < cols; ++q)
        bad.push_back(q == 0 ? "(intercept)" : feature_names[q - 1]);
      throw DegenerateFitError("singular design matrix", std::move(bad));
    }
    for (std::size_t r = 0; r < cols; ++r) {
      if (r == p) continue;
      const double factor = a[r][p] / a[p][p];
      for (std::size_t c = p; c <= cols; ++c) a[r][c] -= factor * a[p][c];
    }
  }

  std::vector<double> solution(cols);
  for (std::size_t r = 0; r < cols; ++r) solution[r] = a[r][cols] / a[r][r];

  model.intercept = solution[0];
  for (std::size_t j = 0; j < k; ++j)
    model.weights[feature_names[j]] = solution[j + 1];
  return model;
}

double score_domain(const RegressionModel& model, const FeatureMap& features) {
  double score = model.intercept;
  for (const auto& name : model.feature_names) {
    auto it = features.find(name);
    double raw;
    if (it == features.end() || std::isnan(it->second)) {
      auto def = model.defaults.find(name);
      raw = def == model.defaults.end() ? 0.0 : def->second;
    } else {
      raw = it->second;
    }
    const auto np = model.norm_params.find(name);
    const double lo = np == model.norm_params.end() ? 0.0 : np->second.first;
    const double hi = np == model.norm_params.end() ? 1.0 : np->second.second;
    score += model.weights.at(name) * normalize(raw, lo, hi);
  }
  return score;
}

void RegressionModel::save(const std::filesystem::path& path) const {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write model file: " + path.string());
  out << kModelHeader << '\n';
  out << std::setprecision(17);
  out << "intercept\t" << intercept << '\n';
  for (const auto& name : feature_names) {
    const auto [lo, hi] = norm_params.at(name);
    out << "feature\t" << name << '\t' << weights.at(name) << '\t' << lo
        << '\t' << hi << '\t' << defaults.at(name) << '\n';
  }
}

RegressionModel RegressionModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  std::string header;
  std::getline(in, header);
  if (header != kModelHeader)
    throw std::runtime_error("unrecognized model header in " + path.string());
  RegressionModel model;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "intercept") {
      ss >> model.intercept;
    } else if (tag == "feature") {
      std::string name;
      double w, lo, hi, def;
      ss >> name >> w >> lo >> hi >> def;
      model.feature_names.push_back(name);
      model.weights[name] = w;
      model.norm_params[name] = {lo, hi};
      model.defaults[name] = def;
    } else {
      throw std::runtime_error("bad model line: " + line);
    }
  }
  return model;
}

double lanl_similarity_score(int connectivity_hosts, bool timing_correlated,
                             IpProximity proximity) {
  if (connectivity_hosts < 1)
    throw std::invalid_argument("connectivity requires at least one host");
  const double c = std::min(connectivity_hosts - 1, 9) / 9.0;
  const double t = timing_correlated ? 1.0 : 0.0;
  double p = 0.0;
  switch (proximity) {
    case IpProximity::none: p = 0.0; break;
    case IpProximity::ip16: p = 0.5; break;
    case IpProximity::ip24: p = 1.0; break;
  }
  return (c + t + p) / 3.0;
}

bool lanl_detect_cc(std::span<const AutomatedChannel> channels,
                    double window_s) {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      if (channels[i].host == channels[j].host) continue;
      const double period_gap =
          std::abs(channels[i].period_s - channels[j].period_s);
      const double first_gap = std::abs(
          static_cast<double>(channels[i].first_ts - channels[j].first_ts));
      if (period_gap <= window_s || first_gap <= window_s) return true;
    }
  }
  return false;
}

}  // namespace commwatch
