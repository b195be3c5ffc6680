#pragma once

// Laplace likelihood machinery for aleatoric regression heads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "alea/errors.hpp"

namespace alea {

enum class ScaleMode { none, homoscedastic, heteroscedastic };

/// How the Laplace scale b is produced and bounded.
struct ScaleSpec {
  ScaleMode mode = ScaleMode::none;
  double alpha = 1.0;   // ELU alpha
  double floor = 1e-3;  // lower bound on b after the ELU+1 transform

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("ScaleSpec: alpha must be > 0");
    if (!(floor > 0.0)) throw ConfigError("ScaleSpec: floor must be > 0");
  }
};

/// g(x) = ELU(alpha, x) + 1.
inline double elu_plus_one(double x, double alpha = 1.0) {
  return x >= 0.0 ? x + 1.0 : alpha * std::expm1(x) + 1.0;
}

inline double elu_plus_one_derivative(double x, double alpha = 1.0) {
  return x >= 0.0 ? 1.0 : alpha * std::exp(x);
}

/// max(g(x), floor). Below the floor the derivative is zero.
inline double positive_scale(double pre, const ScaleSpec& spec) {
  return std::max(elu_plus_one(pre, spec.alpha), spec.floor);
}

inline double positive_scale_derivative(double pre, const ScaleSpec& spec) {
  return elu_plus_one(pre, spec.alpha) > spec.floor ? elu_plus_one_derivative(pre, spec.alpha)
                                                    : 0.0;
}

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

inline void require_positive_scale(double b, const char* what) {
  if (!(b > 0.0)) throw DomainError(std::string(what) + ": scale must be positive");
}
}  // namespace detail

/// Laplace density (1 / 2b) exp(-|y - mu| / b).
inline double laplace_likelihood(double y, double mu, double b) {
  detail::require_positive_scale(b, "laplace_likelihood");
  return std::exp(-std::abs(y - mu) / b) / (2.0 * b);
}

/// Per-sample negative log-likelihood without the constant log 2.
inline double laplace_nll_term(double y, double mu, double b) {
  return std::log(b) + std::abs(y - mu) / b;
}

/// Sum over samples of log b_i + |y_i - mu_i| / b_i.
inline double laplace_nll(std::span<const double> targets, std::span<const double> mus,
                          std::span<const double> scales) {
  detail::require_same_length(targets.size(), mus.size(), "laplace_nll");
  detail::require_same_length(targets.size(), scales.size(), "laplace_nll");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    detail::require_positive_scale(scales[i], "laplace_nll");
    total += laplace_nll_term(targets[i], mus[i], scales[i]);
  }
  return total;
}

struct LaplaceNllGradient {
  std::vector<double> d_mus;
  std::vector<double> d_scales;
};

/// Gradient of laplace_nll with respect to the locations and scales.
/// At a zero residual the subgradient 0 is used for the location.
inline LaplaceNllGradient laplace_nll_gradient(std::span<const double> targets,
                                               std::span<const double> mus,
                                               std::span<const double> scales) {
  detail::require_same_length(targets.size(), mus.size(), "laplace_nll_gradient");
  detail::require_same_length(targets.size(), scales.size(), "laplace_nll_gradient");
  LaplaceNllGradient g{std::vector<double>(targets.size()), std::vector<double>(targets.size())};
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double b = scales[i];
    detail::require_positive_scale(b, "laplace_nll_gradient");
    const double r = targets[i] - mus[i];
    const double sign = (r > 0.0) - (r < 0.0);
    g.d_mus[i] = -sign / b;
    g.d_scales[i] = 1.0 / b - std::abs(r) / (b * b);
  }
  return g;
}

/// Mean absolute error.
inline double mae_loss(std::span<const double> targets, std::span<const double> preds) {
  detail::require_same_length(targets.size(), preds.size(), "mae_loss");
  if (targets.empty()) throw DomainError("mae_loss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) total += std::abs(targets[i] - preds[i]);
  return total / static_cast<double>(targets.size());
}

}  // namespace alea
