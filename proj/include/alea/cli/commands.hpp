#pragma once

// The four pipeline commands behind the `alea` executable: generate, train,
// evaluate and cluster. Each command is deterministic given its config and
// seeds and overwrites its outputs.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "alea/data/csv.hpp"
#include "alea/data/dataset.hpp"
#include "alea/data/kmeans.hpp"
#include "alea/data/series.hpp"
#include "alea/data/synthetic.hpp"
#include "alea/errors.hpp"
#include "alea/eval/selective.hpp"
#include "alea/models/baselines.hpp"
#include "alea/models/model.hpp"
#include "alea/models/scoring.hpp"
#include "alea/models/train.hpp"

namespace alea::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "ALEA_OUT_DIR";

inline fs::path default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "alea_out";
}

// ---------------------------------------------------------------- helpers --

inline json read_json_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open for reading: " + path.string());
  try {
    return json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw ConfigError("write failed: " + path.string());
}

inline void write_json_file(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path.string());
}

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline void require_schema(const json& j, const std::string& where) {
  if (!j.contains("schema_version")) throw ConfigError(where + ": missing schema_version");
  if (j.at("schema_version").get<int>() != 1) throw ConfigError(where + ": unsupported schema_version");
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any job is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

class Logger {
 public:
  explicit Logger(std::ostream* os) : os_(os) {}
  void line(const std::string& s) {
    if (!os_) return;
    std::lock_guard lock(mutex_);
    *os_ << s << '\n' << std::flush;
  }

 private:
  std::ostream* os_;
  std::mutex mutex_;
};

// --------------------------------------------------------------- generate --

/// Mixed-family data set of 20k series whose noise scale grows with amplitude.
inline data::GeneratorConfig default_generator_config() {
  data::GeneratorConfig cfg;
  for (auto f : data::kAllFamilies) cfg.families[f] = data::FamilyConfig{5000};
  cfg.noise.law = data::NoiseLaw::amplitude;
  return cfg;
}

/// Returns the number of rows written.
inline std::size_t run_generate(const data::GeneratorConfig& cfg, const fs::path& out_csv) {
  cfg.validate();
  const auto series = data::raw_series(data::generate_synthetic(cfg, cfg.seed));
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  data::write_series_csv(out_csv.string(), series);
  return series.size();
}

// ------------------------------------------------------------------ train --

struct ModelChoice {
  models::Backbone backbone = models::Backbone::dense;
  models::Uncertainty uncertainty = models::Uncertainty::point;
};

inline std::vector<ModelChoice> full_grid() {
  std::vector<ModelChoice> g;
  for (auto b : {models::Backbone::dense, models::Backbone::lstm}) {
    for (auto u : {models::Uncertainty::point, models::Uncertainty::homoscedastic,
                   models::Uncertainty::heteroscedastic, models::Uncertainty::mc_dropout}) {
      g.push_back({b, u});
    }
  }
  return g;
}

struct TrainRunConfig {
  std::vector<ModelChoice> models = full_grid();
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5};
  bool desk = false;
  std::optional<std::vector<std::size_t>> dense_sizes;
  std::optional<std::vector<std::size_t>> lstm_sizes;
  std::optional<std::vector<std::size_t>> head_sizes;
  std::optional<double> dropout_p;
  double alpha = 1.0;
  double floor = 1e-3;
  models::TrainConfig train;
  double theta = data::kDefaultTheta;

  models::ModelSpec spec_for(const ModelChoice& c, std::size_t T) const {
    auto s = models::ModelSpec::make(c.backbone, c.uncertainty, T + 2, desk);
    if (dense_sizes) s.dense_sizes = *dense_sizes;
    if (lstm_sizes) s.lstm_sizes = *lstm_sizes;
    if (head_sizes) s.head_sizes = *head_sizes;
    if (dropout_p && c.uncertainty == models::Uncertainty::mc_dropout) s.dropout_p = *dropout_p;
    s.alpha = alpha;
    s.floor = floor;
    return s;
  }

  void validate() const {
    if (models.empty()) throw ConfigError("train config: models list is empty");
    if (seeds.empty()) throw ConfigError("train config: seeds list is empty");
    if (!(theta > 0.0)) throw ConfigError("train config: theta must be > 0");
    train.validate();
    for (const auto& c : models) spec_for(c, 24).validate();
  }
};

inline TrainRunConfig train_run_config_from_json(const json& j) {
  reject_unknown_keys(j, {"schema_version", "models", "seeds", "desk", "architecture", "train", "theta"},
                      "train config");
  TrainRunConfig cfg;
  try {
    require_schema(j, "train config");
    if (j.contains("models")) {
      cfg.models.clear();
      for (const auto& m : j["models"]) {
        reject_unknown_keys(m, {"backbone", "uncertainty"}, "train config models[]");
        cfg.models.push_back({models::backbone_from_string(m.at("backbone").get<std::string>()),
                              models::uncertainty_from_string(m.at("uncertainty").get<std::string>())});
      }
    }
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("desk")) cfg.desk = j["desk"].get<bool>();
    if (j.contains("theta")) cfg.theta = j["theta"].get<double>();
    if (j.contains("architecture")) {
      const auto& a = j["architecture"];
      reject_unknown_keys(a, {"dense_sizes", "lstm_sizes", "head_sizes", "dropout_p", "alpha", "floor"},
                          "train config architecture");
      if (a.contains("dense_sizes")) cfg.dense_sizes = a["dense_sizes"].get<std::vector<std::size_t>>();
      if (a.contains("lstm_sizes")) cfg.lstm_sizes = a["lstm_sizes"].get<std::vector<std::size_t>>();
      if (a.contains("head_sizes")) cfg.head_sizes = a["head_sizes"].get<std::vector<std::size_t>>();
      if (a.contains("dropout_p")) cfg.dropout_p = a["dropout_p"].get<double>();
      cfg.alpha = a.value("alpha", cfg.alpha);
      cfg.floor = a.value("floor", cfg.floor);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      reject_unknown_keys(t,
                          {"max_epochs", "patience", "validation_fraction", "batch_size", "lr", "beta1", "beta2",
                           "eps"},
                          "train config train");
      auto& tc = cfg.train;
      tc.max_epochs = t.value("max_epochs", tc.max_epochs);
      tc.patience = t.value("patience", tc.patience);
      tc.validation_fraction = t.value("validation_fraction", tc.validation_fraction);
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.adam.lr = t.value("lr", tc.adam.lr);
      tc.adam.beta1 = t.value("beta1", tc.adam.beta1);
      tc.adam.beta2 = t.value("beta2", tc.adam.beta2);
      tc.adam.eps = t.value("eps", tc.adam.eps);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline std::string checkpoint_stem(const std::string& model_name, std::uint64_t seed) {
  return model_name + "_seed" + std::to_string(seed);
}

struct TrainJobResult {
  std::string model_name;
  std::uint64_t seed = 0;
  fs::path checkpoint;
  models::TrainHistory history;
};

/// Trains every (model, seed) pair on the CSV at data_csv and writes
/// <Name>_seed<s>.ckpt.json and <Name>_seed<s>.history.json into out_dir.
inline std::vector<TrainJobResult> run_train(const TrainRunConfig& cfg, const fs::path& data_csv,
                                             const fs::path& out_dir, std::size_t jobs = 1,
                                             std::ostream* log = nullptr) {
  cfg.validate();
  require_file(data_csv, "data file");
  const auto series = data::read_series_csv(data_csv.string());
  if (series.size() < 2) throw ConfigError("train: need at least 2 series");
  const std::size_t T = series.front().length();
  const auto dataset = data::make_dataset(series, data::SplitTag::train, cfg.theta);
  fs::create_directories(out_dir);

  struct Job {
    ModelChoice choice;
    std::uint64_t seed;
  };
  std::vector<Job> job_list;
  for (const auto& c : cfg.models) {
    for (auto s : cfg.seeds) job_list.push_back({c, s});
  }
  std::vector<TrainJobResult> results(job_list.size());
  Logger logger(log);
  parallel_for(job_list.size(), jobs, [&](std::size_t i) {
    const auto& job = job_list[i];
    const auto spec = cfg.spec_for(job.choice, T);
    auto tc = cfg.train;
    tc.seed = job.seed;
    auto model = models::Model::build(spec, job.seed);
    logger.line("train " + model.name() + " seed " + std::to_string(job.seed) + " (" +
                std::to_string(model.params().scalar_count()) + " parameters)");
    auto history = models::train(model, dataset, tc);
    const auto stem = checkpoint_stem(model.name(), job.seed);
    write_json_file(out_dir / (stem + ".ckpt.json"), model.to_json(tc));
    write_json_file(out_dir / (stem + ".history.json"), models::to_json(history));
    logger.line("done " + stem + ": best epoch " + std::to_string(history.best_epoch) + ", validation loss " +
                data::format_double(history.best_validation_loss));
    results[i] = {model.name(), job.seed, out_dir / (stem + ".ckpt.json"), std::move(history)};
  });
  return results;
}

// --------------------------------------------------------------- evaluate --

struct EvalConfig {
  std::size_t mc_samples = 100;
  std::uint64_t mc_seed = 0;
  std::size_t curve_points = 200;
  double theta = data::kDefaultTheta;

  void validate() const {
    if (mc_samples < 2) throw ConfigError("eval config: mc_samples must be >= 2");
    if (curve_points < 2) throw ConfigError("eval config: curve_points must be >= 2");
    if (!(theta > 0.0)) throw ConfigError("eval config: theta must be > 0");
  }
};

inline EvalConfig eval_config_from_json(const json& j) {
  reject_unknown_keys(j, {"schema_version", "mc_samples", "mc_seed", "curve_points", "theta"}, "eval config");
  EvalConfig cfg;
  try {
    require_schema(j, "eval config");
    cfg.mc_samples = j.value("mc_samples", cfg.mc_samples);
    cfg.mc_seed = j.value("mc_seed", cfg.mc_seed);
    cfg.curve_points = j.value("curve_points", cfg.curve_points);
    cfg.theta = j.value("theta", cfg.theta);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("eval config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

/// Mean and sample standard deviation (n - 1) over seeds; std is 0 for one seed.
struct SeedStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

inline SeedStat seed_stat(const std::vector<double>& v) {
  SeedStat s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct MatrixRow {
  std::string predictor;
  std::string score;
  std::vector<std::uint64_t> seeds;
  std::vector<std::array<double, eval::kKeepGrid.size()>> per_seed;  // mae_at_keep on the grid
  std::vector<double> plain_mae;
  std::vector<std::optional<double>> spearman;
};

inline json to_json(const MatrixRow& r) {
  json keep = json::object();
  for (std::size_t k = 0; k < eval::kKeepGrid.size(); ++k) {
    std::vector<double> v;
    for (const auto& s : r.per_seed) v.push_back(s[k]);
    const auto st = seed_stat(v);
    keep[data::format_double(eval::kKeepGrid[k])] = {{"mean", st.mean}, {"std", st.std}};
  }
  const auto plain = seed_stat(r.plain_mae);
  json rho = json::array();
  for (const auto& s : r.spearman) rho.push_back(s ? json(*s) : json(nullptr));
  return {{"predictor", r.predictor},
          {"score", r.score},
          {"n_seeds", r.per_seed.size()},
          {"seeds", r.seeds},
          {"mae_at_keep", keep},
          {"plain_mae", {{"mean", plain.mean}, {"std", plain.std}}},
          {"spearman_abs_error_score", rho}};
}

struct CheckpointFile {
  fs::path path;
  std::string name;
  std::uint64_t seed = 0;
};

inline std::vector<CheckpointFile> list_checkpoints(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("checkpoint directory not found: " + dir.string());
  std::vector<CheckpointFile> out;
  const std::string suffix = ".ckpt.json";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto fname = entry.path().filename().string();
    if (!entry.is_regular_file() || fname.size() <= suffix.size() ||
        fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const auto j = read_json_file(entry.path());
    out.push_back({entry.path(), j.at("name").get<std::string>(), j.at("rng_seed").get<std::uint64_t>()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.name, a.seed, a.path) < std::tie(b.name, b.seed, b.path);
  });
  if (out.empty()) throw ConfigError("no *.ckpt.json files in " + dir.string());
  return out;
}

/// Evaluates every checkpoint under every score it supports, plus the
/// trivial baselines under the input-variance score. Writes matrix.json,
/// curves/<predictor>_<score>[_seed<s>].csv and, for heteroscedastic models,
/// scatter/<predictor>_seed<s>.csv. Returns the matrix document.
inline json run_evaluate(const EvalConfig& cfg, const fs::path& checkpoint_dir, const fs::path& test_csv,
                         const fs::path& out_dir, std::size_t jobs = 1, std::ostream* log = nullptr) {
  cfg.validate();
  require_file(test_csv, "data file");
  const auto series = data::read_series_csv(test_csv.string());
  if (series.size() < 3) throw ConfigError("evaluate: need at least 3 test series");
  const auto test = data::make_dataset(series, data::SplitTag::test, cfg.theta);
  const auto checkpoints = list_checkpoints(checkpoint_dir);
  fs::create_directories(out_dir / "curves");
  Logger logger(log);

  struct Eval {
    std::string score;
    std::array<double, eval::kKeepGrid.size()> keep{};
    double plain = 0.0;
    std::optional<double> rho;
  };
  std::vector<std::vector<Eval>> per_ckpt(checkpoints.size());

  const auto summarize = [&](const std::vector<models::PredictionRecord>& recs, const std::string& stem) {
    Eval e;
    for (std::size_t k = 0; k < eval::kKeepGrid.size(); ++k) e.keep[k] = eval::mae_at_keep(recs, eval::kKeepGrid[k]);
    e.plain = eval::plain_mae(recs);
    const auto corr = eval::error_score_correlation(recs);
    e.rho = corr.spearman_rho;
    std::ostringstream curve;
    eval::write_curve_csv(curve, eval::error_keep_curve(recs, cfg.curve_points));
    write_text_file(out_dir / "curves" / (stem + ".csv"), curve.str());
    return std::make_pair(e, corr);
  };

  parallel_for(checkpoints.size(), jobs, [&](std::size_t i) {
    const auto& ck = checkpoints[i];
    const auto model = models::Model::from_json(read_json_file(ck.path));
    if (model.spec().series_length() != test.examples.front().raw.length()) {
      throw ConfigError(ck.path.string() + ": series length does not match test data");
    }
    logger.line("evaluate " + ck.path.filename().string());
    for (auto score : models::available_scores(model.spec())) {
      const auto recs = models::predict_records(model, test, score, {cfg.mc_samples, cfg.mc_seed});
      const auto score_name = models::to_string(score);
      auto [e, corr] = summarize(recs, model.name() + "_" + score_name + "_seed" + std::to_string(ck.seed));
      e.score = score_name;
      if (score == models::ScoreKind::b_het) {
        std::ostringstream scatter;
        eval::write_scatter_csv(scatter, corr.scatter);
        write_text_file(out_dir / "scatter" / (checkpoint_stem(model.name(), ck.seed) + ".csv"), scatter.str());
      }
      per_ckpt[i].push_back(e);
    }
  });

  std::vector<MatrixRow> rows;
  for (auto kind : {models::BaselineKind::mean, models::BaselineKind::zero, models::BaselineKind::last}) {
    const auto recs = models::baseline_records(kind, test);
    const auto [e, corr] = summarize(recs, models::to_string(kind) + "_var");
    rows.push_back({models::to_string(kind), "var", {}, {e.keep}, {e.plain}, {e.rho}});
  }
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    for (const auto& e : per_ckpt[i]) {
      const auto key = std::make_pair(checkpoints[i].name, e.score);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, rows.size()).first;
        rows.push_back({checkpoints[i].name, e.score, {}, {}, {}, {}});
      }
      auto& row = rows[it->second];
      row.seeds.push_back(checkpoints[i].seed);
      row.per_seed.push_back(e.keep);
      row.plain_mae.push_back(e.plain);
      row.spearman.push_back(e.rho);
    }
  }

  json doc;
  doc["schema_version"] = 1;
  doc["n_test"] = test.size();
  doc["keep_grid"] = eval::kKeepGrid;
  doc["rows"] = json::array();
  for (const auto& r : rows) doc["rows"].push_back(to_json(r));
  write_json_file(out_dir / "matrix.json", doc);
  return doc;
}

/// Plain-text rendering of the matrix: one row per (predictor, score) with
/// mean and std of the MAE at each keep fraction.
inline std::string format_matrix(const json& doc) {
  std::ostringstream os;
  os << std::left;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-14s %-6s", "predictor", "score");
  os << buf;
  for (double k : eval::kKeepGrid) {
    std::snprintf(buf, sizeof buf, " %17s", ("K=" + data::format_double(k * 100) + "%").c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& r : doc.at("rows")) {
    std::snprintf(buf, sizeof buf, "%-14s %-6s", r.at("predictor").get<std::string>().c_str(),
                  r.at("score").get<std::string>().c_str());
    os << buf;
    for (const auto& [k, v] : r.at("mae_at_keep").items()) {
      std::snprintf(buf, sizeof buf, " %8.3f +- %6.3f", v.at("mean").get<double>(), v.at("std").get<double>());
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- cluster --

struct ClusterSummary {
  std::size_t k = 0;
  std::size_t n_series = 0;
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// k-means on the normalized observed windows. Writes centroids.csv (one row
/// per centroid, columns c1..cT), assignments.csv (row,cluster) and
/// cluster.json with the inertia.
inline ClusterSummary run_cluster(const fs::path& data_csv, std::size_t k, std::uint64_t seed,
                                  const fs::path& out_dir, double theta = data::kDefaultTheta) {
  require_file(data_csv, "data file");
  const auto series = data::read_series_csv(data_csv.string());
  std::vector<std::vector<double>> pts;
  pts.reserve(series.size());
  for (const auto& s : series) pts.push_back(data::pi1_normalize(s.values, theta));
  const auto res = data::kmeans(pts, k, seed);

  fs::create_directories(out_dir);
  std::ostringstream c;
  const std::size_t T = pts.front().size();
  for (std::size_t t = 0; t < T; ++t) c << (t ? "," : "") << 'c' << (t + 1);
  c << '\n';
  for (const auto& centroid : res.centroids) {
    for (std::size_t t = 0; t < T; ++t) c << (t ? "," : "") << data::format_double(centroid[t]);
    c << '\n';
  }
  write_text_file(out_dir / "centroids.csv", c.str());
  std::ostringstream a;
  a << "row,cluster\n";
  for (std::size_t i = 0; i < res.assignments.size(); ++i) a << i << ',' << res.assignments[i] << '\n';
  write_text_file(out_dir / "assignments.csv", a.str());

  ClusterSummary summary{k, pts.size(), res.inertia, res.iterations, res.converged};
  write_json_file(out_dir / "cluster.json", {{"k", k},
                                             {"seed", seed},
                                             {"n_series", summary.n_series},
                                             {"inertia", res.inertia},
                                             {"iterations", res.iterations},
                                             {"converged", res.converged}});
  return summary;
}

}  // namespace alea::cli
