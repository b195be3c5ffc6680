#pragma once

// Synthetic monthly series with known Laplace noise scales.
//
// Each series is drawn from one pattern family. The observed window gets
// Laplace noise of scale window_ratio * b and the target gets noise of scale b,
// where b follows the configured noise law and is stored as true_scale.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "alea/data/series.hpp"
#include "alea/errors.hpp"

namespace alea::data {

enum class Family { periodic, spiky, trend, noise };

inline constexpr std::array<Family, 4> kAllFamilies{Family::periodic, Family::spiky, Family::trend,
                                                    Family::noise};

inline std::string to_string(Family f) {
  switch (f) {
    case Family::periodic: return "periodic";
    case Family::spiky: return "spiky";
    case Family::trend: return "trend";
    case Family::noise: return "noise";
  }
  return "noise";
}

inline Family family_from_string(const std::string& s) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("unknown series family: " + s);
}

using Range = std::array<double, 2>;

struct FamilyConfig {
  std::size_t count = 0;
  Range level{10.0, 100.0};
  Range amplitude{5.0, 50.0};
  double spike_prob = 0.1;  // spiky family only
};

enum class NoiseLaw { constant, amplitude, family };

struct NoiseConfig {
  NoiseLaw law = NoiseLaw::constant;
  double b0 = 1.0;                    // constant law
  double b_min = 1.0;                 // amplitude law: b maps linearly from
  double b_max = 20.0;                //   amplitude_range onto [b_min, b_max]
  Range amplitude_range{5.0, 50.0};
  std::map<Family, double> family_scale;  // family law
  double window_ratio = 1.0;          // noise on observed values relative to b
};

struct GeneratorConfig {
  int schema_version = 1;
  std::size_t T = 24;
  std::uint64_t seed = 0;
  std::map<Family, FamilyConfig> families;
  NoiseConfig noise;

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& [f, fc] : families) n += fc.count;
    return n;
  }

  void validate() const {
    if (schema_version != 1) throw ConfigError("generator config: unsupported schema_version");
    if (T < 2) throw ConfigError("generator config: T must be >= 2");
    if (families.empty()) throw ConfigError("generator config: no families");
    for (const auto& [f, fc] : families) {
      const std::string name = to_string(f);
      if (fc.count == 0) throw ConfigError("generator config: count for " + name + " must be > 0");
      if (!(fc.level[0] <= fc.level[1]) || !(fc.amplitude[0] <= fc.amplitude[1])) {
        throw ConfigError("generator config: inverted range for " + name);
      }
      if (fc.amplitude[0] < 0.0) throw ConfigError("generator config: negative amplitude");
      if (!(fc.spike_prob >= 0.0 && fc.spike_prob <= 1.0)) {
        throw ConfigError("generator config: spike_prob must be in [0, 1]");
      }
    }
    const auto& n = noise;
    if (!(n.window_ratio >= 0.0)) throw ConfigError("noise: window_ratio must be >= 0");
    switch (n.law) {
      case NoiseLaw::constant:
        if (!(n.b0 >= 0.0)) throw ConfigError("noise: b0 must be >= 0");
        break;
      case NoiseLaw::amplitude:
        if (!(n.b_min >= 0.0 && n.b_min <= n.b_max)) throw ConfigError("noise: need 0 <= b_min <= b_max");
        if (!(n.amplitude_range[0] < n.amplitude_range[1])) {
          throw ConfigError("noise: amplitude_range must be increasing");
        }
        break;
      case NoiseLaw::family:
        for (const auto& [f, fc] : families) {
          auto it = n.family_scale.find(f);
          if (it == n.family_scale.end() || !(it->second >= 0.0)) {
            throw ConfigError("noise: missing or negative family_scale for " + to_string(f));
          }
        }
        break;
    }
  }
};

struct SyntheticSeries {
  RawSeries series;
  Family family = Family::noise;
  double amplitude = 0.0;
  double pattern_next = 0.0;  // noise-free value at step T+1
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline Range read_range(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::string law_name(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::constant: return "constant";
    case NoiseLaw::amplitude: return "amplitude";
    case NoiseLaw::family: return "family";
  }
  return "constant";
}

}  // namespace detail

inline GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, {"schema_version", "T", "seed", "families", "noise"},
                              "generator config");
  GeneratorConfig cfg;
  try {
    cfg.schema_version = j.at("schema_version").get<int>();
    if (j.contains("T")) cfg.T = j.at("T").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    const auto& fams = j.at("families");
    if (!fams.is_object()) throw ConfigError("families: expected an object");
    for (const auto& [name, fj] : fams.items()) {
      detail::reject_unknown_keys(fj, {"count", "level", "amplitude", "spike_prob"}, "family " + name);
      FamilyConfig fc;
      fc.count = fj.at("count").get<std::size_t>();
      if (fj.contains("level")) fc.level = detail::read_range(fj["level"], name + ".level");
      if (fj.contains("amplitude")) fc.amplitude = detail::read_range(fj["amplitude"], name + ".amplitude");
      if (fj.contains("spike_prob")) fc.spike_prob = fj["spike_prob"].get<double>();
      cfg.families[family_from_string(name)] = fc;
    }
    if (j.contains("noise")) {
      const auto& nj = j["noise"];
      detail::reject_unknown_keys(
          nj, {"law", "b0", "b_min", "b_max", "amplitude_range", "family_scale", "window_ratio"}, "noise");
      auto& n = cfg.noise;
      const std::string law = nj.value("law", std::string("constant"));
      if (law == "constant") {
        n.law = NoiseLaw::constant;
      } else if (law == "amplitude") {
        n.law = NoiseLaw::amplitude;
      } else if (law == "family") {
        n.law = NoiseLaw::family;
      } else {
        throw ConfigError("noise: unknown law '" + law + "'");
      }
      n.b0 = nj.value("b0", n.b0);
      n.b_min = nj.value("b_min", n.b_min);
      n.b_max = nj.value("b_max", n.b_max);
      if (nj.contains("amplitude_range")) {
        n.amplitude_range = detail::read_range(nj["amplitude_range"], "noise.amplitude_range");
      }
      if (nj.contains("family_scale")) {
        for (const auto& [name, v] : nj["family_scale"].items()) {
          n.family_scale[family_from_string(name)] = v.get<double>();
        }
      }
      n.window_ratio = nj.value("window_ratio", n.window_ratio);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json generator_config_to_json(const GeneratorConfig& cfg) {
  nlohmann::json fams = nlohmann::json::object();
  for (const auto& [f, fc] : cfg.families) {
    fams[to_string(f)] = {{"count", fc.count},
                          {"level", fc.level},
                          {"amplitude", fc.amplitude},
                          {"spike_prob", fc.spike_prob}};
  }
  nlohmann::json scales = nlohmann::json::object();
  for (const auto& [f, s] : cfg.noise.family_scale) scales[to_string(f)] = s;
  return {{"schema_version", cfg.schema_version},
          {"T", cfg.T},
          {"seed", cfg.seed},
          {"families", fams},
          {"noise",
           {{"law", detail::law_name(cfg.noise.law)},
            {"b0", cfg.noise.b0},
            {"b_min", cfg.noise.b_min},
            {"b_max", cfg.noise.b_max},
            {"amplitude_range", cfg.noise.amplitude_range},
            {"family_scale", scales},
            {"window_ratio", cfg.noise.window_ratio}}}};
}

/// Scale of the Laplace noise for one series.
inline double noise_scale(const NoiseConfig& n, Family f, double amplitude) {
  switch (n.law) {
    case NoiseLaw::constant: return n.b0;
    case NoiseLaw::amplitude: {
      const auto [lo, hi] = n.amplitude_range;
      const double u = std::clamp((amplitude - lo) / (hi - lo), 0.0, 1.0);
      return n.b_min + u * (n.b_max - n.b_min);
    }
    case NoiseLaw::family: return n.family_scale.at(f);
  }
  return n.b0;
}

/// Laplace(0, b) as the difference of two unit exponentials.
template <typename Rng>
double sample_laplace(double b, Rng& rng) {
  if (b == 0.0) return 0.0;
  std::exponential_distribution<double> expo(1.0);
  const double e1 = expo(rng);
  const double e2 = expo(rng);
  return b * (e1 - e2);
}

inline std::vector<SyntheticSeries> generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);

  std::vector<Family> order;
  order.reserve(cfg.total_count());
  for (const auto& [f, fc] : cfg.families) order.insert(order.end(), fc.count, f);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t T = cfg.T;
  std::vector<SyntheticSeries> out;
  out.reserve(order.size());
  std::vector<double> pattern(T + 1);
  for (Family f : order) {
    const FamilyConfig& fc = cfg.families.at(f);
    std::uniform_real_distribution<double> level_dist(fc.level[0], fc.level[1]);
    std::uniform_real_distribution<double> amp_dist(fc.amplitude[0], fc.amplitude[1]);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double level = level_dist(rng);
    const double amplitude = amp_dist(rng);

    switch (f) {
      case Family::periodic: {
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        for (std::size_t t = 0; t <= T; ++t) {
          pattern[t] = level + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t + 1) / 12.0 + phase);
        }
        break;
      }
      case Family::spiky:
        for (std::size_t t = 0; t <= T; ++t) {
          pattern[t] = level + (unit(rng) < fc.spike_prob ? amplitude : 0.0);
        }
        break;
      case Family::trend: {
        const double slope = (unit(rng) < 0.5 ? -1.0 : 1.0) * amplitude / static_cast<double>(T);
        for (std::size_t t = 0; t <= T; ++t) pattern[t] = level + slope * static_cast<double>(t);
        break;
      }
      case Family::noise:
        std::fill(pattern.begin(), pattern.end(), level);
        break;
    }

    const double b = noise_scale(cfg.noise, f, amplitude);
    SyntheticSeries s;
    s.family = f;
    s.amplitude = amplitude;
    s.pattern_next = pattern[T];
    s.series.values.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      s.series.values[t] = pattern[t] + sample_laplace(cfg.noise.window_ratio * b, rng);
    }
    s.series.target = pattern[T] + sample_laplace(b, rng);
    s.series.true_scale = b;
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<RawSeries> raw_series(const std::vector<SyntheticSeries>& synthetic) {
  std::vector<RawSeries> out;
  out.reserve(synthetic.size());
  for (const auto& s : synthetic) out.push_back(s.series);
  return out;
}

}  // namespace alea::data
