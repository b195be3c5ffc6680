#pragma once

#include <string>

#include "alea/errors.hpp"
#include "alea/nn/activation.hpp"
#include "alea/nn/init.hpp"
#include "alea/nn/parameters.hpp"
#include "alea/nn/tape.hpp"
#include "alea/nn/tensor.hpp"

namespace alea::nn {

/// Fully connected layer act(W x + b). W is out_dim x in_dim.
struct DenseLayerParams {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::identity;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }

  void validate() const {
    if (bias.size() != weights.rows()) {
      throw ShapeError("DenseLayerParams: bias length " + std::to_string(bias.size()) +
                       " != out_dim " + std::to_string(weights.rows()));
    }
    if (!weights.allFinite() || !bias.allFinite()) {
      throw DomainError("DenseLayerParams: non-finite entries");
    }
  }
};

inline Vector dense_forward(const DenseLayerParams& params, const Vector& input) {
  params.validate();
  if (input.size() != params.in_dim()) {
    throw ShapeError("dense_forward: input length " + std::to_string(input.size()) +
                     " != in_dim " + std::to_string(params.in_dim()));
  }
  Vector pre = params.weights * input + params.bias;
  return activate(params.activation, Matrix(pre)).col(0);
}

/// Dense layer whose weights live in a ParameterSet.
class DenseLayer {
 public:
  DenseLayer() = default;

  /// Registers "<prefix>.weight" (Glorot-uniform) and "<prefix>.bias" (zeros).
  template <typename Rng>
  static DenseLayer create(ParameterSet& params, const std::string& prefix, Eigen::Index in_dim,
                           Eigen::Index out_dim, Activation act, Rng& rng) {
    if (in_dim <= 0 || out_dim <= 0) throw ConfigError("DenseLayer: dimensions must be positive");
    DenseLayer layer;
    layer.in_dim_ = in_dim;
    layer.out_dim_ = out_dim;
    layer.activation_ = act;
    layer.weight_ = params.add(prefix + ".weight",
                               glorot_uniform(out_dim, in_dim, static_cast<double>(in_dim),
                                              static_cast<double>(out_dim), rng));
    layer.bias_ = params.add(prefix + ".bias", Matrix::Zero(out_dim, 1));
    return layer;
  }

  /// Rebinds to existing parameters (e.g. after loading a checkpoint).
  static DenseLayer bind(const ParameterSet& params, const std::string& prefix, Activation act) {
    const auto w = params.find(prefix + ".weight");
    const auto b = params.find(prefix + ".bias");
    if (!w || !b) throw ConfigError("DenseLayer: missing parameters for " + prefix);
    DenseLayer layer;
    layer.weight_ = *w;
    layer.bias_ = *b;
    layer.activation_ = act;
    layer.in_dim_ = params[*w].value.cols();
    layer.out_dim_ = params[*w].value.rows();
    require_shape(params[*b].value, layer.out_dim_, 1, "DenseLayer bias");
    return layer;
  }

  /// x is in_dim x batch.
  Var forward(Tape& tape, const ParameterSet& params, Var x) const {
    Var w = tape.parameter(params, weight_);
    Var b = tape.parameter(params, bias_);
    return tape.activate(tape.add_bias(tape.matmul(w, x), b), activation_);
  }

  DenseLayerParams snapshot(const ParameterSet& params) const {
    return {params[weight_].value, params[bias_].value.col(0), activation_};
  }

  Eigen::Index in_dim() const { return in_dim_; }
  Eigen::Index out_dim() const { return out_dim_; }
  Activation activation() const { return activation_; }

 private:
  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
  Activation activation_ = Activation::identity;
  Eigen::Index in_dim_ = 0;
  Eigen::Index out_dim_ = 0;
};

}  // namespace alea::nn
