#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alea/errors.hpp"

namespace alea::data {

/// T observed values and the (T+1)th target.
struct RawSeries {
  std::vector<double> values;
  double target = 0.0;
  std::optional<double> true_scale;  // known Laplace scale for synthetic data

  std::size_t length() const { return values.size(); }

  void validate() const {
    if (values.size() < 2) throw DomainError("RawSeries: need at least 2 values");
    for (double v : values) {
      if (!std::isfinite(v)) throw DomainError("RawSeries: non-finite value");
    }
    if (!std::isfinite(target)) throw DomainError("RawSeries: non-finite target");
  }
};

inline double mean(std::span<const double> z) {
  if (z.empty()) throw DomainError("mean: empty input");
  double s = 0.0;
  for (double v : z) s += v;
  return s / static_cast<double>(z.size());
}

/// Population variance (divide by n).
inline double population_variance(std::span<const double> z) {
  const double m = mean(z);
  double s = 0.0;
  for (double v : z) s += (v - m) * (v - m);
  return s / static_cast<double>(z.size());
}

inline double population_std(std::span<const double> z) {
  return std::sqrt(population_variance(z));
}

inline constexpr double kDefaultTheta = 1e-6;

/// (z_i - mean) / std when std >= theta, otherwise z_i - mean.
inline std::vector<double> pi1_normalize(std::span<const double> z, double theta = kDefaultTheta) {
  if (z.size() < 2) throw DomainError("pi1_normalize: need at least 2 values");
  if (!(theta > 0.0)) throw DomainError("pi1_normalize: theta must be positive");
  const double m = mean(z);
  const double sd = population_std(z);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = sd >= theta ? (z[i] - m) / sd : z[i] - m;
  }
  return out;
}

/// Network input: normalized series followed by the raw mean and std.
struct FeatureVector {
  std::vector<double> normalized;
  double mean = 0.0;
  double std = 0.0;

  std::size_t dim() const { return normalized.size() + 2; }

  std::vector<double> flatten() const {
    std::vector<double> out(normalized);
    out.push_back(mean);
    out.push_back(std);
    return out;
  }
};

inline FeatureVector featurize(const RawSeries& z, double theta = kDefaultTheta) {
  z.validate();
  return {pi1_normalize(z.values, theta), data::mean(z.values), population_std(z.values)};
}

}  // namespace alea::data
