#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "alea/aleatoric.hpp"
#include "alea/errors.hpp"
#include "alea/nn/adam.hpp"

namespace alea::models {

enum class Backbone { dense, lstm };
enum class Uncertainty { point, homoscedastic, heteroscedastic, mc_dropout };

inline std::string to_string(Backbone b) { return b == Backbone::dense ? "dense" : "lstm"; }

inline std::string to_string(Uncertainty u) {
  switch (u) {
    case Uncertainty::point: return "point";
    case Uncertainty::homoscedastic: return "homoscedastic";
    case Uncertainty::heteroscedastic: return "heteroscedastic";
    case Uncertainty::mc_dropout: return "mc_dropout";
  }
  return "point";
}

inline Backbone backbone_from_string(const std::string& s) {
  if (s == "dense") return Backbone::dense;
  if (s == "lstm") return Backbone::lstm;
  throw ConfigError("unknown backbone: " + s);
}

inline Uncertainty uncertainty_from_string(const std::string& s) {
  if (s == "point") return Uncertainty::point;
  if (s == "homoscedastic" || s == "hom") return Uncertainty::homoscedastic;
  if (s == "heteroscedastic" || s == "het") return Uncertainty::heteroscedastic;
  if (s == "mc_dropout" || s == "drop") return Uncertainty::mc_dropout;
  throw ConfigError("unknown uncertainty kind: " + s);
}

/// Architecture of one model. input_dim is the flattened FeatureVector size
/// (T normalized values + mean + std).
struct ModelSpec {
  Backbone backbone = Backbone::dense;
  Uncertainty uncertainty = Uncertainty::point;
  std::size_t input_dim = 26;
  std::vector<std::size_t> dense_sizes{128, 64};  // dense backbone hidden layers
  std::vector<std::size_t> lstm_sizes{128, 128};  // lstm backbone recurrent layers
  std::vector<std::size_t> head_sizes{128};       // dense layers after the lstm stack
  double dropout_p = 0.0;
  double alpha = 1.0;
  double floor = 1e-3;

  static ModelSpec make(Backbone b, Uncertainty u, std::size_t input_dim, bool desk = false) {
    ModelSpec s;
    s.backbone = b;
    s.uncertainty = u;
    s.input_dim = input_dim;
    if (u == Uncertainty::mc_dropout) s.dropout_p = 0.5;
    if (desk) {
      s.dense_sizes = {32, 16};
      s.lstm_sizes = {32, 32};
      s.head_sizes = {32};
    }
    return s;
  }

  std::size_t series_length() const { return input_dim - 2; }

  ScaleSpec scale_spec() const {
    ScaleMode mode = ScaleMode::none;
    if (uncertainty == Uncertainty::homoscedastic) mode = ScaleMode::homoscedastic;
    if (uncertainty == Uncertainty::heteroscedastic) mode = ScaleMode::heteroscedastic;
    return {mode, alpha, floor};
  }

  /// Display name used for checkpoints and result tables, e.g. "DenseHet".
  std::string name() const {
    std::string n = backbone == Backbone::dense ? "Dense" : "LSTM";
    switch (uncertainty) {
      case Uncertainty::point: break;
      case Uncertainty::homoscedastic: n += "Hom"; break;
      case Uncertainty::heteroscedastic: n += "Het"; break;
      case Uncertainty::mc_dropout: n += "Drop"; break;
    }
    return n;
  }

  void validate() const {
    if (input_dim < 4) throw ConfigError("ModelSpec: input_dim must be >= 4 (T >= 2 plus mean, std)");
    const auto positive = [](const std::vector<std::size_t>& v) {
      for (auto n : v) {
        if (n == 0) return false;
      }
      return true;
    };
    if (backbone == Backbone::dense && dense_sizes.empty()) {
      throw ConfigError("ModelSpec: dense backbone needs at least one hidden layer");
    }
    if (backbone == Backbone::lstm && lstm_sizes.empty()) {
      throw ConfigError("ModelSpec: lstm backbone needs at least one recurrent layer");
    }
    if (!positive(dense_sizes) || !positive(lstm_sizes) || !positive(head_sizes)) {
      throw ConfigError("ModelSpec: layer sizes must be positive");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("ModelSpec: dropout_p must be in [0, 1)");
    if (dropout_p > 0.0 && uncertainty != Uncertainty::mc_dropout) {
      throw ConfigError("ModelSpec: dropout is only used by mc_dropout models");
    }
    scale_spec().validate();
  }
};

inline nlohmann::ordered_json to_json(const ModelSpec& s) {
  return {{"backbone", to_string(s.backbone)},
          {"uncertainty", to_string(s.uncertainty)},
          {"input_dim", s.input_dim},
          {"dense_sizes", s.dense_sizes},
          {"lstm_sizes", s.lstm_sizes},
          {"head_sizes", s.head_sizes},
          {"dropout_p", s.dropout_p},
          {"alpha", s.alpha},
          {"floor", s.floor}};
}

inline ModelSpec model_spec_from_json(const nlohmann::ordered_json& j) {
  ModelSpec s;
  s.backbone = backbone_from_string(j.at("backbone").get<std::string>());
  s.uncertainty = uncertainty_from_string(j.at("uncertainty").get<std::string>());
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.dense_sizes = j.at("dense_sizes").get<std::vector<std::size_t>>();
  s.lstm_sizes = j.at("lstm_sizes").get<std::vector<std::size_t>>();
  s.head_sizes = j.at("head_sizes").get<std::vector<std::size_t>>();
  s.dropout_p = j.at("dropout_p").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.floor = j.at("floor").get<double>();
  s.validate();
  return s;
}

struct TrainConfig {
  std::size_t max_epochs = 800;
  std::size_t patience = 20;
  double validation_fraction = 0.1;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  nn::AdamConfig adam;

  void validate() const {
    if (max_epochs < 1) throw ConfigError("TrainConfig: max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("TrainConfig: patience must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("TrainConfig: validation_fraction must be in (0, 1)");
    }
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("TrainConfig: lr must be > 0");
  }
};

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  return {{"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"validation_fraction", c.validation_fraction},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps", c.adam.eps}};
}

}  // namespace alea::models
