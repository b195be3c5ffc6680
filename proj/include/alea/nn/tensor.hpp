#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "alea/errors.hpp"

namespace alea::nn {

// Column-major Eigen storage. Batched activations put one sample per column.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                          const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + "), got " + shape_str(m));
  }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace alea::nn
