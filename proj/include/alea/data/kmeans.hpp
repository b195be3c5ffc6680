#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "alea/errors.hpp"

namespace alea::data {

struct ClusterResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;                // sum of squared distances to assigned centroids
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
  bool converged = false;
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace detail {

/// k-means++ seeding. Falls back to the lowest unused index when every
/// remaining point coincides with a chosen centroid.
inline std::vector<std::vector<double>> kmeanspp_init(const std::vector<std::vector<double>>& pts,
                                                      std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> centroids;
  std::vector<bool> used(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  centroids.push_back(pts[pick]);
  used[pick] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(pts[i], centroids[0]);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += used[i] ? 0.0 : d2[i];
    pick = n;
    if (total > 0.0) {
      double r = unif(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i] || d2[i] == 0.0) continue;
        pick = i;
        r -= d2[i];
        if (r < 0.0) break;
      }
    }
    if (pick == n) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) {
          pick = i;
          break;
        }
      }
    }
    used[pick] = true;
    centroids.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(pts[i], centroids.back()));
    }
  }
  return centroids;
}

inline double assign(const std::vector<std::vector<double>>& pts,
                     const std::vector<std::vector<double>>& centroids,
                     std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const double d = squared_distance(pts[i], centroids[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    assignments[i] = best_j;
    inertia += best;
  }
  return inertia;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. An emptied cluster keeps its
/// previous centroid.
inline ClusterResult kmeans(const std::vector<std::vector<double>>& series, std::size_t k,
                            std::uint64_t seed, std::size_t max_iter = 300) {
  if (series.empty()) throw DomainError("kmeans: no series");
  if (k == 0) throw DomainError("kmeans: k must be positive");
  if (k > series.size()) throw DomainError("kmeans: k exceeds the number of series");
  const std::size_t dim = series.front().size();
  for (const auto& s : series) {
    if (s.size() != dim) throw ShapeError("kmeans: series lengths differ");
  }

  std::mt19937_64 rng(seed);
  ClusterResult res;
  res.centroids = detail::kmeanspp_init(series, k, rng);
  res.assignments.assign(series.size(), 0);
  res.inertia = detail::assign(series, res.centroids, res.assignments);
  res.inertia_history.push_back(res.inertia);

  std::vector<std::size_t> previous;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < series.size(); ++i) {
      const std::size_t j = res.assignments[i];
      ++counts[j];
      for (std::size_t d = 0; d < dim; ++d) sums[j][d] += series[i][d];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) res.centroids[j][d] = sums[j][d] / static_cast<double>(counts[j]);
    }
    previous = res.assignments;
    res.inertia = detail::assign(series, res.centroids, res.assignments);
    res.inertia_history.push_back(res.inertia);
    res.iterations = iter + 1;
    if (res.assignments == previous) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace alea::data
