#pragma once

namespace alea::models {

/// Point estimate, uncertainty score (lower = more confident) and truth.
struct PredictionRecord {
  double y_hat = 0.0;
  double score = 0.0;
  double y_true = 0.0;

  double abs_error() const { return y_hat > y_true ? y_hat - y_true : y_true - y_hat; }
};

}  // namespace alea::models
