#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "alea/errors.hpp"
#include "alea/nn/tensor.hpp"

namespace alea::nn {

enum class Activation { identity, relu, sigmoid, tanh, elu };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::elu: return "elu";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "elu") return Activation::elu;
  throw ConfigError("unknown activation: " + std::string(s));
}

inline double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x < 0.0 ? 0.0 : x;  // NaN passes through
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::elu: return x >= 0.0 ? x : std::expm1(x);
  }
  return x;
}

/// Derivative expressed through the pre-activation x and the output y.
inline double activate_derivative(Activation a, double x, double y) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
    case Activation::elu: return x >= 0.0 ? 1.0 : y + 1.0;
  }
  return 1.0;
}

inline Matrix activate(Activation a, const Matrix& x) {
  if (a == Activation::identity) return x;
  return x.unaryExpr([a](double v) { return activate(a, v); });
}

}  // namespace alea::nn
