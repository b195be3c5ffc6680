#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "alea/errors.hpp"
#include "alea/nn/activation.hpp"
#include "alea/nn/init.hpp"
#include "alea/nn/parameters.hpp"
#include "alea/nn/tape.hpp"
#include "alea/nn/tensor.hpp"

namespace alea::nn {

/// Plain LSTM cell (no peepholes). Each gate matrix multiplies [h_{t-1}; x_t]
/// and is hidden x (hidden + input).
struct LstmCellParams {
  Matrix w_f, w_i, w_c, w_o;
  Vector b_f, b_i, b_c, b_o;

  Eigen::Index hidden() const { return w_f.rows(); }
  Eigen::Index input_dim() const { return w_f.cols() - w_f.rows(); }

  void validate() const {
    const Eigen::Index h = w_f.rows();
    const Eigen::Index cols = w_f.cols();
    if (cols <= h) throw ShapeError("LstmCellParams: gate matrix needs hidden + input columns");
    for (const Matrix* w : {&w_i, &w_c, &w_o}) require_shape(*w, h, cols, "LstmCellParams gate");
    for (const Vector* b : {&b_f, &b_i, &b_c, &b_o}) {
      if (b->size() != h) throw ShapeError("LstmCellParams: bias length != hidden");
    }
    for (const Matrix* w : {&w_f, &w_i, &w_c, &w_o}) {
      if (!w->allFinite()) throw DomainError("LstmCellParams: non-finite weights");
    }
  }
};

struct LstmStep {
  Vector h;
  Vector c;
};

inline LstmStep lstm_cell_step(const LstmCellParams& p, const Vector& h_prev,
                               const Vector& c_prev, const Vector& x_t) {
  p.validate();
  if (h_prev.size() != p.hidden() || c_prev.size() != p.hidden()) {
    throw ShapeError("lstm_cell_step: state length != hidden");
  }
  if (x_t.size() != p.input_dim()) throw ShapeError("lstm_cell_step: input length mismatch");
  Vector hx(p.w_f.cols());
  hx << h_prev, x_t;
  const auto sig = [](const Vector& v) -> Vector { return activate(Activation::sigmoid, Matrix(v)).col(0); };
  const auto th = [](const Vector& v) -> Vector { return activate(Activation::tanh, Matrix(v)).col(0); };
  const Vector f = sig(p.w_f * hx + p.b_f);
  const Vector i = sig(p.w_i * hx + p.b_i);
  const Vector c = f.cwiseProduct(c_prev) + i.cwiseProduct(th(p.w_c * hx + p.b_c));
  const Vector o = sig(p.w_o * hx + p.b_o);
  return {o.cwiseProduct(th(c)), c};
}

/// LSTM layer over a sequence, weights stored in a ParameterSet under
/// "<prefix>.w_f", "<prefix>.b_f", ... for gates f, i, c, o.
class LstmLayer {
 public:
  static constexpr std::array<const char*, 4> kGates{"f", "i", "c", "o"};

  LstmLayer() = default;

  template <typename Rng>
  static LstmLayer create(ParameterSet& params, const std::string& prefix, Eigen::Index input_dim,
                          Eigen::Index hidden, Rng& rng) {
    if (input_dim <= 0 || hidden <= 0) throw ConfigError("LstmLayer: dimensions must be positive");
    LstmLayer layer;
    layer.input_dim_ = input_dim;
    layer.hidden_ = hidden;
    const double fan_in = static_cast<double>(hidden + input_dim);
    for (std::size_t g = 0; g < 4; ++g) {
      layer.w_[g] = params.add(prefix + ".w_" + kGates[g],
                               glorot_uniform(hidden, hidden + input_dim, fan_in,
                                              static_cast<double>(hidden), rng));
    }
    for (std::size_t g = 0; g < 4; ++g) {
      // Forget gate starts open.
      const double init = g == 0 ? 1.0 : 0.0;
      layer.b_[g] = params.add(prefix + ".b_" + kGates[g], Matrix::Constant(hidden, 1, init));
    }
    return layer;
  }

  static LstmLayer bind(const ParameterSet& params, const std::string& prefix) {
    LstmLayer layer;
    for (std::size_t g = 0; g < 4; ++g) {
      const auto w = params.find(prefix + ".w_" + kGates[g]);
      const auto b = params.find(prefix + ".b_" + kGates[g]);
      if (!w || !b) throw ConfigError("LstmLayer: missing parameters for " + prefix);
      layer.w_[g] = *w;
      layer.b_[g] = *b;
    }
    layer.hidden_ = params[layer.w_[0]].value.rows();
    layer.input_dim_ = params[layer.w_[0]].value.cols() - layer.hidden_;
    layer.snapshot(params).validate();
    return layer;
  }

  /// One step on the tape. h, c are hidden x batch; x is input x batch.
  std::pair<Var, Var> step(Tape& tape, const ParameterSet& params, Var h, Var c, Var x) const {
    Var hx = tape.concat_rows({h, x});
    auto gate = [&](std::size_t g) {
      return tape.add_bias(tape.matmul(tape.parameter(params, w_[g]), hx),
                           tape.parameter(params, b_[g]));
    };
    Var f = tape.sigmoid(gate(0));
    Var i = tape.sigmoid(gate(1));
    Var cand = tape.tanh(gate(2));
    Var o = tape.sigmoid(gate(3));
    Var c_next = tape.add(tape.mul(f, c), tape.mul(i, cand));
    Var h_next = tape.mul(o, tape.tanh(c_next));
    return {h_next, c_next};
  }

  /// Runs the sequence from zero state and returns every h_t.
  std::vector<Var> forward_sequence(Tape& tape, const ParameterSet& params,
                                    const std::vector<Var>& inputs) const {
    if (inputs.empty()) throw ShapeError("LstmLayer: empty sequence");
    const Eigen::Index batch = tape.value(inputs.front()).cols();
    Var h = tape.constant(Matrix::Zero(hidden_, batch));
    Var c = tape.constant(Matrix::Zero(hidden_, batch));
    std::vector<Var> hs;
    hs.reserve(inputs.size());
    for (Var x : inputs) {
      if (tape.value(x).rows() != input_dim_) throw ShapeError("LstmLayer: input dim mismatch");
      std::tie(h, c) = step(tape, params, h, c, x);
      hs.push_back(h);
    }
    return hs;
  }

  LstmCellParams snapshot(const ParameterSet& params) const {
    LstmCellParams p;
    p.w_f = params[w_[0]].value;
    p.w_i = params[w_[1]].value;
    p.w_c = params[w_[2]].value;
    p.w_o = params[w_[3]].value;
    p.b_f = params[b_[0]].value.col(0);
    p.b_i = params[b_[1]].value.col(0);
    p.b_c = params[b_[2]].value.col(0);
    p.b_o = params[b_[3]].value.col(0);
    return p;
  }

  Eigen::Index hidden() const { return hidden_; }
  Eigen::Index input_dim() const { return input_dim_; }

 private:
  std::array<std::size_t, 4> w_{};
  std::array<std::size_t, 4> b_{};
  Eigen::Index input_dim_ = 0;
  Eigen::Index hidden_ = 0;
};

}  // namespace alea::nn
