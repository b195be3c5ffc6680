#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "alea/data/dataset.hpp"
#include "alea/errors.hpp"
#include "alea/models/model.hpp"
#include "alea/nn/adam.hpp"

namespace alea::models {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();
  bool early_stopped = false;
  std::uint64_t seed = 0;
  std::string model_name;
};

inline nlohmann::ordered_json to_json(const TrainHistory& h) {
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}});
  }
  return {{"model", h.model_name},
          {"seed", h.seed},
          {"best_epoch", h.best_epoch},
          {"best_validation_loss", h.best_validation_loss},
          {"early_stopped", h.early_stopped},
          {"epochs", epochs}};
}

namespace detail {

struct Batchable {
  Matrix x;  // input_dim x N
  Matrix y;  // 1 x N
};

inline Batchable to_matrices(const data::Dataset& d) {
  Batchable b;
  std::vector<data::FeatureVector> xs;
  xs.reserve(d.size());
  b.y.resize(1, static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    xs.push_back(d.examples[i].x);
    b.y(0, static_cast<Eigen::Index>(i)) = d.examples[i].y;
  }
  b.x = feature_matrix(xs);
  return b;
}

/// Mean loss over the full set, without dropout.
inline double evaluate_loss(const Model& model, const Batchable& data, Eigen::Index chunk = 4096) {
  double total = 0.0;
  const Eigen::Index n = data.x.cols();
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index m = std::min(chunk, n - start);
    nn::Tape tape;
    const auto out = model.forward(tape, data.x.middleCols(start, m));
    const Matrix y = data.y.middleCols(start, m);
    total += tape.value(model.loss(tape, out, y))(0, 0) * static_cast<double>(m);
  }
  return total / static_cast<double>(n);
}

}  // namespace detail

/// Mini-batch Adam on the model's loss with early stopping. The parameters of
/// the epoch with the lowest validation loss are restored before returning.
inline TrainHistory train(Model& model, const data::Dataset& train_set, const data::Dataset& validation_set,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw DomainError("train: empty training set");
  if (validation_set.empty()) throw DomainError("train: empty validation set");
  const auto train_m = detail::to_matrices(train_set);
  const auto val_m = detail::to_matrices(validation_set);

  TrainHistory history;
  history.seed = cfg.seed;
  history.model_name = model.name();

  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const bool use_dropout = model.spec().uncertainty == Uncertainty::mc_dropout && model.spec().dropout_p > 0.0;

  nn::AdamState adam = nn::AdamState::for_params(model.params(), cfg.adam);
  nn::ParameterSet best = model.params();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_m.x.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix xb = train_m.x(Eigen::all, idx);
      const Matrix yb = train_m.y(Eigen::all, idx);
      nn::Tape tape;
      const auto out = model.forward(tape, xb, use_dropout ? &dropout_rng : nullptr);
      const Var loss = model.loss(tape, out, yb);
      const double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      const nn::Gradients grads = tape.backward(loss, model.params());
      try {
        nn::adam_step(model.params(), grads, adam);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      epoch_loss += value * static_cast<double>(end - start);
    }
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()), detail::evaluate_loss(model, val_m)};
    if (!std::isfinite(rec.validation_loss)) {
      throw TrainingError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    history.epochs.push_back(rec);
    if (rec.validation_loss < history.best_validation_loss) {
      history.best_validation_loss = rec.validation_loss;
      history.best_epoch = epoch;
      best = model.params();
    } else if (epoch - history.best_epoch >= cfg.patience) {
      history.early_stopped = true;
      break;
    }
  }
  model.params() = best;
  return history;
}

/// Splits off cfg.validation_fraction of the data (seeded by cfg.seed) and trains.
inline TrainHistory train(Model& model, const data::Dataset& dataset, const TrainConfig& cfg) {
  cfg.validate();
  const auto [train_set, validation_set] = data::split(dataset, cfg.validation_fraction, cfg.seed);
  return train(model, train_set, validation_set, cfg);
}

}  // namespace alea::models
