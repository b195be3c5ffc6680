#pragma once

#include <cmath>
#include <random>

#include "alea/nn/tensor.hpp"

namespace alea::nn {

/// U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
template <typename Rng>
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
                      Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> unif(-limit, limit);
  Matrix m(rows, cols);
  // Fill row-major so the draw order matches the serialized layout.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = unif(rng);
  }
  return m;
}

}  // namespace alea::nn
