#pragma once

// Error-vs-Keep evaluation of forecasts that carry an uncertainty score.
// Records with a score strictly below a threshold kappa are kept; the error
// is the MAE over kept records only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alea/data/csv.hpp"
#include "alea/errors.hpp"
#include "alea/models/record.hpp"

namespace alea::eval {

using models::PredictionRecord;

/// Keep fractions of the comparison table columns.
inline constexpr std::array<double, 6> kKeepGrid{0.25, 0.41, 0.50, 0.75, 0.995, 1.0};

struct ThresholdResult {
  std::optional<double> mae;  // nullopt when nothing is kept
  double keep = 0.0;
  std::size_t n_kept = 0;
};

inline ThresholdResult mae_at_threshold(std::span<const PredictionRecord> records, double kappa) {
  if (records.empty()) throw DomainError("mae_at_threshold: no records");
  double err = 0.0;
  std::size_t kept = 0;
  for (const auto& r : records) {
    if (r.score < kappa) {
      err += r.abs_error();
      ++kept;
    }
  }
  ThresholdResult res;
  res.n_kept = kept;
  res.keep = static_cast<double>(kept) / static_cast<double>(records.size());
  if (kept > 0) res.mae = err / static_cast<double>(kept);
  return res;
}

struct CurvePoint {
  double threshold = 0.0;
  double keep_fraction = 0.0;
  std::optional<double> mae;
  std::size_t n_kept = 0;
};

struct ErrorKeepCurve {
  std::vector<CurvePoint> points;  // keep_fraction non-decreasing
  std::size_t n_total = 0;
};

/// Thresholds are the sorted unique scores plus one value just above the
/// maximum, evenly subsampled to at most n_points (both ends always kept).
inline ErrorKeepCurve error_keep_curve(std::span<const PredictionRecord> records, std::size_t n_points) {
  if (records.empty()) throw DomainError("error_keep_curve: no records");
  if (n_points < 2) throw DomainError("error_keep_curve: n_points must be >= 2");
  std::vector<double> thresholds;
  thresholds.reserve(records.size() + 1);
  for (const auto& r : records) thresholds.push_back(r.score);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

  std::vector<std::size_t> picks;
  const std::size_t m = thresholds.size();
  if (m <= n_points) {
    picks.resize(m);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
  } else {
    for (std::size_t i = 0; i < n_points; ++i) {
      const auto idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(n_points - 1)));
      if (picks.empty() || picks.back() != idx) picks.push_back(idx);
    }
  }

  ErrorKeepCurve curve;
  curve.n_total = records.size();
  curve.points.reserve(picks.size());
  for (std::size_t idx : picks) {
    const double kappa = thresholds[idx];
    const auto r = mae_at_threshold(records, kappa);
    curve.points.push_back({kappa, r.keep, r.mae, r.n_kept});
  }
  return curve;
}

/// Number of records kept for a keep fraction: ceil(k N), with a small
/// tolerance so that e.g. 0.41 * 100 keeps exactly 41.
inline std::size_t keep_count(double k_fraction, std::size_t n) {
  const double raw = std::ceil(k_fraction * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

/// MAE of the ceil(k N) lowest-score records; ties keep input order.
inline double mae_at_keep(std::span<const PredictionRecord> records, double k_fraction) {
  if (records.empty()) throw DomainError("mae_at_keep: no records");
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) throw DomainError("mae_at_keep: k must be in (0, 1]");
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].score < records[b].score; });
  const std::size_t n = keep_count(k_fraction, records.size());
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err += records[idx[i]].abs_error();
  return err / static_cast<double>(n);
}

/// Ranks starting at 1, ties receive their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Spearman rank correlation; nullopt if either side has constant rank.
inline std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct ScatterPoint {
  double abs_error = 0.0;
  double score = 0.0;
};

struct CorrelationResult {
  std::optional<double> spearman_rho;
  std::vector<ScatterPoint> scatter;
};

inline CorrelationResult error_score_correlation(std::span<const PredictionRecord> records) {
  if (records.size() < 3) throw DomainError("error_score_correlation: need at least 3 records");
  std::vector<double> errs;
  std::vector<double> scores;
  CorrelationResult res;
  errs.reserve(records.size());
  scores.reserve(records.size());
  res.scatter.reserve(records.size());
  for (const auto& r : records) {
    errs.push_back(r.abs_error());
    scores.push_back(r.score);
    res.scatter.push_back({r.abs_error(), r.score});
  }
  res.spearman_rho = spearman(errs, scores);
  return res;
}

inline double plain_mae(std::span<const PredictionRecord> records) {
  if (records.empty()) throw DomainError("plain_mae: no records");
  double err = 0.0;
  for (const auto& r : records) err += r.abs_error();
  return err / static_cast<double>(records.size());
}

/// threshold,keep_fraction,mae,n_kept (mae is "nan" for an empty selection).
inline void write_curve_csv(std::ostream& os, const ErrorKeepCurve& curve) {
  os << "threshold,keep_fraction,mae,n_kept\n";
  for (const auto& p : curve.points) {
    os << data::format_double(p.threshold) << ',' << data::format_double(p.keep_fraction) << ','
       << (p.mae ? data::format_double(*p.mae) : std::string("nan")) << ',' << p.n_kept << '\n';
  }
}

inline void write_scatter_csv(std::ostream& os, std::span<const ScatterPoint> scatter) {
  os << "abs_error,score\n";
  for (const auto& p : scatter) {
    os << data::format_double(p.abs_error) << ',' << data::format_double(p.score) << '\n';
  }
}

}  // namespace alea::eval
