#pragma once

// Turns a model or baseline plus an uncertainty score into PredictionRecords.

#include <cstdint>
#include <string>
#include <vector>

#include "alea/data/dataset.hpp"
#include "alea/errors.hpp"
#include "alea/models/baselines.hpp"
#include "alea/models/model.hpp"
#include "alea/models/record.hpp"

namespace alea::models {

enum class ScoreKind { var, b_het, drop };

inline std::string to_string(ScoreKind s) {
  switch (s) {
    case ScoreKind::var: return "var";
    case ScoreKind::b_het: return "b_het";
    case ScoreKind::drop: return "drop";
  }
  return "var";
}

/// Scores a model can be evaluated with: var always, plus its own score.
inline std::vector<ScoreKind> available_scores(const ModelSpec& spec) {
  switch (spec.uncertainty) {
    case Uncertainty::heteroscedastic: return {ScoreKind::var, ScoreKind::b_het};
    case Uncertainty::mc_dropout: return {ScoreKind::var, ScoreKind::drop};
    default: return {ScoreKind::var};
  }
}

struct McConfig {
  std::size_t n_samples = 100;
  std::uint64_t seed = 0;
};

/// Dropout models predict the MC mean; all others their deterministic output.
inline std::vector<PredictionRecord> predict_records(const Model& model, const data::Dataset& dataset,
                                                     ScoreKind score, const McConfig& mc = {}) {
  if (dataset.empty()) throw DomainError("predict_records: empty dataset");
  if (score == ScoreKind::b_het && model.spec().uncertainty != Uncertainty::heteroscedastic) {
    throw ConfigError("b_het score requires a heteroscedastic model");
  }
  if (score == ScoreKind::drop && model.spec().uncertainty != Uncertainty::mc_dropout) {
    throw ConfigError("drop score requires an mc_dropout model");
  }
  std::vector<data::FeatureVector> xs;
  xs.reserve(dataset.size());
  for (const auto& e : dataset.examples) xs.push_back(e.x);
  const Matrix x = feature_matrix(xs);

  std::vector<PredictionRecord> out(dataset.size());
  if (model.spec().uncertainty == Uncertainty::mc_dropout) {
    const auto mc_out = model.mc_dropout_predict_matrix(x, mc.n_samples, mc.seed);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].y_hat = mc_out[i].mean;
      if (score == ScoreKind::drop) out[i].score = mc_out[i].std;
    }
  } else {
    const auto preds = model.predict_matrix(x);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].y_hat = preds[i].y_hat;
      if (score == ScoreKind::b_het) out[i].score = *preds[i].scale;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].y_true = dataset.examples[i].y;
    if (score == ScoreKind::var) out[i].score = input_variance_score(dataset.examples[i].raw);
  }
  return out;
}

inline std::vector<PredictionRecord> baseline_records(BaselineKind kind, const data::Dataset& dataset) {
  std::vector<PredictionRecord> out;
  out.reserve(dataset.size());
  for (const auto& e : dataset.examples) {
    out.push_back({baseline_predict(kind, e.raw), input_variance_score(e.raw), e.y});
  }
  return out;
}

}  // namespace alea::models
