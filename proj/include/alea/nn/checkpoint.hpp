#pragma once

// Row-major flat-array serialization of a ParameterSet.

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "alea/errors.hpp"
#include "alea/nn/parameters.hpp"

namespace alea::nn {

/// {"<name>": {"shape": [rows, cols], "values": [...row-major...]}, ...}
/// Entries are emitted in ParameterSet order.
inline nlohmann::ordered_json parameters_to_json(const ParameterSet& params) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& p : params) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(p.value.size()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) flat.push_back(p.value(r, c));
    }
    out[p.name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"values", std::move(flat)}};
  }
  return out;
}

inline ParameterSet parameters_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("parameters: expected an object");
  ParameterSet params;
  for (const auto& [name, entry] : j.items()) {
    const auto& shape = entry.at("shape");
    const auto& values = entry.at("values");
    const auto rows = shape.at(0).get<Eigen::Index>();
    const auto cols = shape.at(1).get<Eigen::Index>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(values.size()) != rows * cols) {
      throw ConfigError("parameter " + name + ": shape does not match value count");
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values.at(k++).get<double>();
    }
    params.add(name, std::move(m));
  }
  return params;
}

}  // namespace alea::nn
