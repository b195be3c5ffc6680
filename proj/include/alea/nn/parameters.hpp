#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alea/errors.hpp"
#include "alea/nn/tensor.hpp"

namespace alea::nn {

struct Parameter {
  std::string name;
  Matrix value;
};

/// Ordered, named collection of trainable matrices. Indices are stable.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    params_.push_back({std::move(name), std::move(value)});
    return params_.size() - 1;
  }

  std::size_t size() const { return params_.size(); }

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return i;
    }
    return std::nullopt;
  }

  /// Total number of scalar entries.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool operator==(const ParameterSet& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& a = params_[i];
      const auto& b = other.params_[i];
      if (a.name != b.name || a.value.rows() != b.value.rows() ||
          a.value.cols() != b.value.cols() || a.value != b.value) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Parameter> params_;
};

/// One gradient matrix per parameter, same order and shapes as the ParameterSet.
using Gradients = std::vector<Matrix>;

inline Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto& p : params) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

inline double squared_norm(const Matrix& m) { return m.squaredNorm(); }

}  // namespace alea::nn
