#pragma once

#include <string>

#include "alea/data/series.hpp"
#include "alea/errors.hpp"

namespace alea::models {

enum class BaselineKind { mean, zero, last };

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::mean: return "mean";
    case BaselineKind::zero: return "zero";
    case BaselineKind::last: return "last";
  }
  return "mean";
}

inline double baseline_predict(BaselineKind kind, const data::RawSeries& z) {
  z.validate();
  switch (kind) {
    case BaselineKind::mean: return data::mean(z.values);
    case BaselineKind::zero: return 0.0;
    case BaselineKind::last: return z.values.back();
  }
  return 0.0;
}

/// Population variance of the observed window, used as a proxy score.
inline double input_variance_score(const data::RawSeries& z) {
  z.validate();
  return data::population_variance(z.values);
}

}  // namespace alea::models
