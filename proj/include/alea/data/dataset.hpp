#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "alea/data/series.hpp"
#include "alea/errors.hpp"

namespace alea::data {

enum class SplitTag { train, validation, test };

struct Example {
  FeatureVector x;
  double y = 0.0;
  RawSeries raw;
};

struct Dataset {
  std::vector<Example> examples;
  SplitTag tag = SplitTag::train;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

inline Dataset make_dataset(const std::vector<RawSeries>& series, SplitTag tag = SplitTag::train,
                            double theta = kDefaultTheta) {
  Dataset d;
  d.tag = tag;
  d.examples.reserve(series.size());
  for (const auto& s : series) d.examples.push_back({featurize(s, theta), s.target, s});
  return d;
}

/// Number of items assigned to the validation side.
inline std::size_t validation_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n >= 2) k = std::clamp<std::size_t>(k, 1, n - 1);
  return std::min(k, n);
}

/// Seeded shuffle, then the first validation_count items go to validation.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_items(const std::vector<T>& items, double fraction,
                                                      std::uint64_t seed) {
  if (items.empty()) throw DomainError("split: empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("split: fraction must be in (0, 1)");
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_val = validation_count(items.size(), fraction);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.second.reserve(n_val);
  out.first.reserve(items.size() - n_val);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_val ? out.second : out.first).push_back(items[idx[i]]);
  }
  return out;
}

/// Returns (train, validation).
inline std::pair<Dataset, Dataset> split(const Dataset& dataset, double validation_fraction,
                                         std::uint64_t seed) {
  auto [train, val] = split_items(dataset.examples, validation_fraction, seed);
  return {Dataset{std::move(train), SplitTag::train}, Dataset{std::move(val), SplitTag::validation}};
}

}  // namespace alea::data
