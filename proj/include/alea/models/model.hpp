#pragma once

// Dense and LSTM regression networks with optional Laplace scale heads.
//
// A heteroscedastic model owns two parameter-independent towers over the same
// input: phi for the location and psi for the pre-activation of the scale.
// A homoscedastic model adds a single pre-activation scalar "b_hom_pre".

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "alea/aleatoric.hpp"
#include "alea/data/series.hpp"
#include "alea/errors.hpp"
#include "alea/models/spec.hpp"
#include "alea/nn/checkpoint.hpp"
#include "alea/nn/dense.hpp"
#include "alea/nn/lstm.hpp"
#include "alea/nn/parameters.hpp"
#include "alea/nn/tape.hpp"

namespace alea::models {

using nn::Matrix;
using nn::Var;

/// Stacks feature vectors into an input_dim x N matrix, one column per sample.
inline Matrix feature_matrix(const std::vector<data::FeatureVector>& xs) {
  if (xs.empty()) return Matrix(0, 0);
  const auto dim = static_cast<Eigen::Index>(xs.front().dim());
  Matrix m(dim, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (static_cast<Eigen::Index>(xs[j].dim()) != dim) throw ShapeError("feature_matrix: ragged inputs");
    const auto col = static_cast<Eigen::Index>(j);
    const Eigen::Index T = dim - 2;
    for (Eigen::Index t = 0; t < T; ++t) m(t, col) = xs[j].normalized[static_cast<std::size_t>(t)];
    m(T, col) = xs[j].mean;
    m(T + 1, col) = xs[j].std;
  }
  return m;
}

/// One network mapping the feature matrix to a 1 x batch output row.
class Tower {
 public:
  template <typename Rng>
  static Tower create(nn::ParameterSet& params, const std::string& prefix, const ModelSpec& spec,
                      Rng& rng) {
    Tower t;
    Eigen::Index in = static_cast<Eigen::Index>(spec.input_dim);
    std::vector<std::size_t> hidden = spec.dense_sizes;
    if (spec.backbone == Backbone::lstm) {
      Eigen::Index step_in = 1;
      for (std::size_t l = 0; l < spec.lstm_sizes.size(); ++l) {
        const auto h = static_cast<Eigen::Index>(spec.lstm_sizes[l]);
        t.lstm_.push_back(nn::LstmLayer::create(params, prefix + ".lstm" + std::to_string(l), step_in, h, rng));
        step_in = h;
      }
      in = step_in + 2;
      hidden = spec.head_sizes;
    }
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      const auto out = static_cast<Eigen::Index>(hidden[l]);
      t.hidden_.push_back(nn::DenseLayer::create(params, prefix + ".dense" + std::to_string(l), in, out,
                                                 nn::Activation::relu, rng));
      in = out;
    }
    t.output_ = nn::DenseLayer::create(params, prefix + ".out", in, 1, nn::Activation::identity, rng);
    return t;
  }

  static Tower bind(const nn::ParameterSet& params, const std::string& prefix, const ModelSpec& spec) {
    Tower t;
    if (spec.backbone == Backbone::lstm) {
      for (std::size_t l = 0; l < spec.lstm_sizes.size(); ++l) {
        t.lstm_.push_back(nn::LstmLayer::bind(params, prefix + ".lstm" + std::to_string(l)));
      }
    }
    const auto& hidden = spec.backbone == Backbone::lstm ? spec.head_sizes : spec.dense_sizes;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      t.hidden_.push_back(
          nn::DenseLayer::bind(params, prefix + ".dense" + std::to_string(l), nn::Activation::relu));
    }
    t.output_ = nn::DenseLayer::bind(params, prefix + ".out", nn::Activation::identity);
    return t;
  }

  /// dropout_rng == nullptr disables dropout.
  Var forward(nn::Tape& tape, const nn::ParameterSet& params, Var x, double dropout_p,
              std::mt19937_64* dropout_rng) const {
    Var h = x;
    if (!lstm_.empty()) {
      const Eigen::Index T = tape.value(x).rows() - 2;
      std::vector<Var> seq;
      seq.reserve(static_cast<std::size_t>(T));
      for (Eigen::Index t = 0; t < T; ++t) seq.push_back(tape.slice_rows(x, t, 1));
      for (std::size_t l = 0; l < lstm_.size(); ++l) seq = lstm_[l].forward_sequence(tape, params, seq);
      Var stats = tape.slice_rows(x, T, 2);
      h = tape.concat_rows({seq.back(), stats});
    }
    for (const auto& layer : hidden_) {
      h = layer.forward(tape, params, h);
      if (dropout_rng && dropout_p > 0.0) h = tape.dropout(h, dropout_p, *dropout_rng);
    }
    return output_.forward(tape, params, h);
  }

 private:
  std::vector<nn::LstmLayer> lstm_;
  std::vector<nn::DenseLayer> hidden_;
  nn::DenseLayer output_;
};

struct Prediction {
  double y_hat = 0.0;
  std::optional<double> scale;
};

struct McPrediction {
  double mean = 0.0;
  double std = 0.0;
};

class Model {
 public:
  struct Output {
    Var mean;
    std::optional<Var> scale;
  };

  static Model build(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    m.seed_ = seed;
    std::mt19937_64 rng(seed);
    m.phi_ = Tower::create(m.params_, "phi", spec, rng);
    if (spec.uncertainty == Uncertainty::heteroscedastic) {
      m.psi_ = Tower::create(m.params_, "psi", spec, rng);
    }
    if (spec.uncertainty == Uncertainty::homoscedastic) {
      m.b_hom_ = m.params_.add("b_hom_pre", Matrix::Zero(1, 1));
    }
    return m;
  }

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  std::string name() const { return spec_.name(); }

  /// x is input_dim x batch. Dropout is active only when dropout_rng is given.
  Output forward(nn::Tape& tape, const Matrix& x, std::mt19937_64* dropout_rng = nullptr) const {
    if (x.rows() != static_cast<Eigen::Index>(spec_.input_dim)) {
      throw ShapeError("Model::forward: expected " + std::to_string(spec_.input_dim) + " input rows, got " +
                       std::to_string(x.rows()));
    }
    Var in = tape.constant(x);
    Output out;
    out.mean = phi_.forward(tape, params_, in, spec_.dropout_p, dropout_rng);
    const ScaleSpec ss = spec_.scale_spec();
    if (psi_) {
      out.scale = tape.positive_scale(psi_->forward(tape, params_, in, 0.0, nullptr), ss);
    } else if (b_hom_) {
      out.scale = tape.broadcast_cols(tape.positive_scale(tape.parameter(params_, *b_hom_), ss), x.cols());
    }
    return out;
  }

  /// MAE for point and dropout models, mean Laplace NLL for aleatoric ones.
  Var loss(nn::Tape& tape, const Output& out, const Matrix& targets) const {
    if (out.scale) return tape.laplace_nll_mean(out.mean, *out.scale, targets);
    return tape.mae_mean(out.mean, targets);
  }

  /// Homoscedastic scale g(b_hom_pre) with floor.
  std::optional<double> homoscedastic_scale() const {
    if (!b_hom_) return std::nullopt;
    return positive_scale(params_[*b_hom_].value(0, 0), spec_.scale_spec());
  }

  Prediction predict(const data::FeatureVector& x) const { return predict_batch({x}).front(); }

  std::vector<Prediction> predict_batch(const std::vector<data::FeatureVector>& xs) const {
    return predict_matrix(feature_matrix(xs));
  }

  std::vector<Prediction> predict_matrix(const Matrix& x, Eigen::Index chunk = 2048) const {
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index start = 0; start < x.cols(); start += chunk) {
      const Eigen::Index n = std::min(chunk, x.cols() - start);
      nn::Tape tape;
      const Output o = forward(tape, x.middleCols(start, n));
      const Matrix& mu = tape.value(o.mean);
      for (Eigen::Index j = 0; j < n; ++j) {
        Prediction p{mu(0, j), std::nullopt};
        if (o.scale) p.scale = tape.value(*o.scale)(0, j);
        out.push_back(p);
      }
    }
    return out;
  }

  McPrediction mc_dropout_predict(const data::FeatureVector& x, std::size_t n_samples,
                                  std::uint64_t seed) const {
    return mc_dropout_predict_matrix(feature_matrix({x}), n_samples, seed).front();
  }

  /// n_samples stochastic passes with dropout active; sample mean and
  /// sample standard deviation (n - 1 denominator) per column.
  std::vector<McPrediction> mc_dropout_predict_matrix(const Matrix& x, std::size_t n_samples,
                                                      std::uint64_t seed) const {
    if (n_samples < 2) throw DomainError("mc_dropout_predict: n_samples must be >= 2");
    std::mt19937_64 rng(seed);
    const Eigen::Index n = x.cols();
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(n);
    Eigen::ArrayXd sum_sq = Eigen::ArrayXd::Zero(n);
    std::vector<Eigen::ArrayXd> samples;
    samples.reserve(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
      nn::Tape tape;
      const Output o = forward(tape, x, &rng);
      samples.push_back(tape.value(o.mean).row(0).transpose().array());
      sum += samples.back();
    }
    const Eigen::ArrayXd mean = sum / static_cast<double>(n_samples);
    for (const auto& s : samples) sum_sq += (s - mean).square();
    const Eigen::ArrayXd sd = (sum_sq / static_cast<double>(n_samples - 1)).sqrt();
    std::vector<McPrediction> out(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = {mean(j), sd(j)};
    return out;
  }

  /// Checkpoint document: schema_version, name, architecture, parameters,
  /// rng_seed and (optionally) the training configuration.
  nlohmann::ordered_json to_json(const std::optional<TrainConfig>& training = std::nullopt) const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["name"] = name();
    j["architecture"] = models::to_json(spec_);
    j["parameters"] = nn::parameters_to_json(params_);
    j["rng_seed"] = seed_;
    j["training_config"] = training ? models::to_json(*training) : nlohmann::ordered_json(nullptr);
    return j;
  }

  static Model from_json(const nlohmann::ordered_json& j) {
    try {
      if (j.at("schema_version").get<int>() != 1) throw ConfigError("checkpoint: unsupported schema_version");
      Model m;
      m.spec_ = model_spec_from_json(j.at("architecture"));
      m.seed_ = j.at("rng_seed").get<std::uint64_t>();
      m.params_ = nn::parameters_from_json(j.at("parameters"));
      m.phi_ = Tower::bind(m.params_, "phi", m.spec_);
      if (m.spec_.uncertainty == Uncertainty::heteroscedastic) m.psi_ = Tower::bind(m.params_, "psi", m.spec_);
      if (m.spec_.uncertainty == Uncertainty::homoscedastic) {
        m.b_hom_ = m.params_.find("b_hom_pre");
        if (!m.b_hom_) throw ConfigError("checkpoint: missing b_hom_pre");
      }
      // Catch stray or mis-shaped parameters by comparing against a fresh build.
      const Model reference = build(m.spec_, m.seed_);
      if (reference.params_.size() != m.params_.size()) throw ConfigError("checkpoint: parameter count mismatch");
      for (std::size_t i = 0; i < m.params_.size(); ++i) {
        const auto& a = reference.params_[i];
        const auto& b = m.params_[i];
        if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) {
          throw ConfigError("checkpoint: unexpected parameter " + b.name);
        }
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("checkpoint: ") + e.what());
    }
  }

 private:
  ModelSpec spec_;
  std::uint64_t seed_ = 0;
  nn::ParameterSet params_;
  Tower phi_;
  std::optional<Tower> psi_;
  std::optional<std::size_t> b_hom_;
};

}  // namespace alea::models
