// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "alea/alea.hpp"
#include "alea/cli/commands.hpp"
#include "support/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace alea;
using models::Backbone;
using models::Uncertainty;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("alea_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

models::TrainConfig desk_train_config(std::uint64_t seed) {
  models::TrainConfig c;
  c.seed = seed;
  return c;
}

struct Split {
  data::Dataset train;
  data::Dataset test;
};

Split make_split(const data::GeneratorConfig& train_cfg, std::uint64_t train_seed, std::size_t n_test,
                 std::uint64_t test_seed) {
  auto test_cfg = train_cfg;
  const double scale = static_cast<double>(n_test) / static_cast<double>(train_cfg.total_count());
  std::size_t assigned = 0;
  for (auto it = test_cfg.families.begin(); it != test_cfg.families.end(); ++it) {
    auto next = std::next(it);
    it->second.count = next == test_cfg.families.end()
                           ? n_test - assigned
                           : static_cast<std::size_t>(std::llround(static_cast<double>(it->second.count) * scale));
    assigned += it->second.count;
  }
  return {data::make_dataset(data::raw_series(data::generate_synthetic(train_cfg, train_seed))),
          data::make_dataset(data::raw_series(data::generate_synthetic(test_cfg, test_seed)), data::SplitTag::test)};
}

data::GeneratorConfig families_config(std::size_t total, data::NoiseConfig noise) {
  data::GeneratorConfig cfg;
  for (auto f : data::kAllFamilies) cfg.families[f] = data::FamilyConfig{total / 4};
  cfg.noise = std::move(noise);
  return cfg;
}

// ------------------------------------------------------------------ C1 --

models::ModelSpec tiny_spec(Backbone b, Uncertainty u, std::size_t T) {
  auto s = models::ModelSpec::make(b, u, T + 2, true);
  s.dense_sizes = {7, 5};
  s.lstm_sizes = {5};
  s.head_sizes = {4};
  return s;
}

Outcome gradient_correctness() {
  constexpr int kInstances = 50;
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> n01(0.0, 1.0);
  double worst = 0.0;
  int checked = 0;
  int failures = 0;
  for (auto b : {Backbone::dense, Backbone::lstm}) {
    const std::size_t T = b == Backbone::lstm ? 6 : 8;
    for (auto u : {Uncertainty::homoscedastic, Uncertainty::heteroscedastic}) {
      for (int inst = 0; inst < kInstances; ++inst) {
        auto model = models::Model::build(tiny_spec(b, u, T), rng());
        // Zero-initialised biases put a dead first layer exactly on the next
        // ReLU kink; random offsets keep every instance differentiable.
        for (auto& p : model.params()) {
          if (p.name.ends_with(".bias") || p.name == "b_hom_pre") {
            for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value(i) += 0.5 * n01(rng);
          }
        }
        const Eigen::Index batch = 5;
        nn::Matrix x(static_cast<Eigen::Index>(T + 2), batch);
        nn::Matrix y(1, batch);
        for (Eigen::Index j = 0; j < batch; ++j) {
          for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, j) = n01(rng);
          y(0, j) = 3.0 * n01(rng);
        }
        const auto loss_of = [&](const nn::ParameterSet& ps) {
          auto m = model;
          m.params() = ps;
          nn::Tape tape;
          const auto out = m.forward(tape, x);
          return tape.value(m.loss(tape, out, y))(0, 0);
        };
        nn::Tape tape;
        const auto out = model.forward(tape, x);
        const auto analytic = tape.backward(model.loss(tape, out, y), model.params());
        const auto numeric = oracle::numeric_gradients(model.params(), loss_of);
        const double err = oracle::relative_error(analytic, numeric);
        worst = std::max(worst, err);
        ++checked;
        if (!(err < 1e-5)) ++failures;
      }
    }
  }
  return {failures == 0, std::to_string(checked) + " instances (dense 2-layer, LSTM 1-layer T=6; hom and het NLL), "
                             "max relative error " + fmt(worst, 3) + ", failures " + std::to_string(failures)};
}

// ------------------------------------------------------------------ C2 --

Outcome loss_oracles() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> wide(-20.0, 20.0);
  std::uniform_real_distribution<double> pos(1e-3, 30.0);
  double nll_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double y = wide(rng), mu = wide(rng), b = pos(rng);
    const double closed = std::log(b) + std::abs(y - mu) / b;
    nll_err = std::max(nll_err, std::abs(laplace_nll(std::vector<double>{y}, std::vector<double>{mu},
                                                     std::vector<double>{b}) -
                                         closed));
  }
  double elu_err = 0.0;
  std::uniform_real_distribution<double> alpha_dist(0.1, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = wide(rng), a = alpha_dist(rng);
    const double closed = x > 0.0 ? x + 1.0 : a * (std::exp(x) - 1.0) + 1.0;
    elu_err = std::max(elu_err, std::abs(elu_plus_one(x, a) - closed));
  }
  double integral_err = 0.0;
  for (double b : {0.05, 1.0, 5.0, 20.0}) {
    const double mu = 1.5;
    // Composite Simpson on each side of the kink, truncated at 40 b (mass e^-40).
    const auto simpson = [&](double lo, double hi) {
      const int n = 200000;
      const double h = (hi - lo) / n;
      double s = laplace_likelihood(lo, mu, b) + laplace_likelihood(hi, mu, b);
      for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * laplace_likelihood(lo + k * h, mu, b);
      return s * h / 3.0;
    };
    integral_err = std::max(integral_err, std::abs(simpson(mu - 40 * b, mu) + simpson(mu, mu + 40 * b) - 1.0));
  }
  const bool pass = nll_err < 1e-12 && elu_err < 1e-12 && integral_err < 1e-6;
  return {pass, "nll max error " + fmt(nll_err, 3) + ", elu+1 max error " + fmt(elu_err, 3) +
                    ", |integral - 1| max " + fmt(integral_err, 3)};
}

// ------------------------------------------------------------------ C3 --

Outcome homoscedastic_recovery() {
  data::NoiseConfig noise;
  noise.law = data::NoiseLaw::constant;
  noise.b0 = 5.0;
  // b_hom converges to mean |r|, which includes forecast error; clean windows
  // and no random spikes keep that error small next to b0.
  noise.window_ratio = 0.2;
  auto cfg = families_config(20000, noise);
  cfg.families.erase(data::Family::spiky);
  for (auto& [f, fc] : cfg.families) fc.count = 20000 / 3 + (f == data::Family::periodic ? 20000 % 3 : 0);
  const auto ds = data::make_dataset(data::raw_series(data::generate_synthetic(cfg, 301)));
  auto model = models::Model::build(models::ModelSpec::make(Backbone::dense, Uncertainty::homoscedastic, 26, true), 3);
  const auto hist = models::train(model, ds, desk_train_config(3));
  const double b_hom = *model.homoscedastic_scale();
  const auto recs = models::predict_records(model, ds, models::ScoreKind::var);
  const double mean_abs = eval::plain_mae(recs);
  return {b_hom >= 4.5 && b_hom <= 5.5, "b_hom " + fmt(b_hom) + " (mean |r| on the data " + fmt(mean_abs) +
                                            ", " + std::to_string(hist.epochs.size()) + " epochs)"};
}

// ------------------------------------------------------------------ C4 --

Outcome heteroscedastic_recovery() {
  data::NoiseConfig noise;
  noise.law = data::NoiseLaw::amplitude;
  noise.b_min = 1.0;
  noise.b_max = 20.0;
  noise.amplitude_range = {5.0, 50.0};
  noise.window_ratio = 1.0;
  const auto cfg = families_config(20000, noise);
  const auto split = make_split(cfg, 401, 5000, 402);
  auto model =
      models::Model::build(models::ModelSpec::make(Backbone::dense, Uncertainty::heteroscedastic, 26, true), 4);
  const auto hist = models::train(model, split.train, desk_train_config(4));
  const auto recs = models::predict_records(model, split.test, models::ScoreKind::b_het);
  std::vector<double> pred, truth;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    pred.push_back(recs[i].score);
    truth.push_back(*split.test.examples[i].raw.true_scale);
  }
  const auto rho = eval::spearman(pred, truth);
  return {rho && *rho > 0.8, "Spearman(b_hat, true scale) " + (rho ? fmt(*rho) : std::string("undefined")) +
                                 " on " + std::to_string(recs.size()) + " held-out series (" +
                                 std::to_string(hist.epochs.size()) + " epochs)"};
}

// -------------------------------------------------------------- C5, C7 --

data::GeneratorConfig selective_config(std::size_t total) {
  data::NoiseConfig noise;
  noise.law = data::NoiseLaw::family;
  noise.family_scale = {{data::Family::periodic, 1.0},
                        {data::Family::trend, 3.0},
                        {data::Family::spiky, 6.0},
                        {data::Family::noise, 12.0}};
  noise.window_ratio = 0.25;
  auto cfg = families_config(total, noise);
  cfg.families[data::Family::periodic].amplitude = {20.0, 50.0};
  cfg.families[data::Family::trend].amplitude = {20.0, 60.0};
  cfg.families[data::Family::spiky].amplitude = {5.0, 30.0};
  return cfg;
}

struct SelectiveRun {
  std::vector<std::array<double, 3>> mae25;  // het+b_het, het+var, hom+var per seed
  std::vector<models::PredictionRecord> het_records_seed0;
};

SelectiveRun selective_runs(const Split& split, std::size_t n_seeds) {
  SelectiveRun run;
  run.mae25.resize(n_seeds);
  cli::parallel_for(n_seeds, std::max(1u, std::thread::hardware_concurrency()), [&](std::size_t s) {
    const auto seed = static_cast<std::uint64_t>(s);
    auto het =
        models::Model::build(models::ModelSpec::make(Backbone::dense, Uncertainty::heteroscedastic, 26, true), seed);
    auto hom =
        models::Model::build(models::ModelSpec::make(Backbone::dense, Uncertainty::homoscedastic, 26, true), seed);
    models::train(het, split.train, desk_train_config(seed));
    models::train(hom, split.train, desk_train_config(seed));
    const auto het_b = models::predict_records(het, split.test, models::ScoreKind::b_het);
    const auto het_v = models::predict_records(het, split.test, models::ScoreKind::var);
    const auto hom_v = models::predict_records(hom, split.test, models::ScoreKind::var);
    run.mae25[s] = {eval::mae_at_keep(het_b, 0.25), eval::mae_at_keep(het_v, 0.25), eval::mae_at_keep(hom_v, 0.25)};
    if (s == 0) run.het_records_seed0 = het_b;
  });
  return run;
}

Outcome selective_ordering(const SelectiveRun& run) {
  int holds = 0;
  std::ostringstream os;
  for (std::size_t s = 0; s < run.mae25.size(); ++s) {
    const auto& m = run.mae25[s];
    if (m[0] < m[1] && m[0] < m[2]) ++holds;
    os << (s ? "; " : "") << "seed " << s << ": " << fmt(m[0]) << " / " << fmt(m[1]) << " / " << fmt(m[2]);
  }
  return {holds >= 5, "MAE@25% het+b_het / het+var / hom+var: " + os.str() + "; ordering holds in " +
                          std::to_string(holds) + " of " + std::to_string(run.mae25.size()) + " seeds"};
}

Outcome fig4_analogue(const SelectiveRun& run, const fs::path& dir) {
  const auto corr = eval::error_score_correlation(run.het_records_seed0);
  const auto path = dir / "scatter_b_het.csv";
  {
    std::ofstream os(path);
    eval::write_scatter_csv(os, corr.scatter);
  }
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  const bool header_ok = line == "abs_error,score";
  std::size_t rows = 0;
  bool parse_ok = true;
  while (std::getline(is, line)) {
    const auto cells = data::split_csv_line(line);
    if (cells.size() != 2) parse_ok = false;
    for (const auto& c : cells) {
      try {
        data::parse_double(c);
      } catch (const std::exception&) {
        parse_ok = false;
      }
    }
    ++rows;
  }
  const bool pass = corr.spearman_rho && *corr.spearman_rho > 0.3 && header_ok && parse_ok && rows == 10000;
  return {pass, "Spearman(|error|, b_het) " + (corr.spearman_rho ? fmt(*corr.spearman_rho) : std::string("undefined")) +
                    " on " + std::to_string(run.het_records_seed0.size()) + " held-out records; scatter CSV rows " +
                    std::to_string(rows) + (parse_ok && header_ok ? ", parsed" : ", unparseable")};
}

// ------------------------------------------------------------------ C6 --

Outcome error_keep_machinery(const std::vector<models::PredictionRecord>& model_records) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<models::PredictionRecord>> sets{model_records};
  std::exponential_distribution<double> e(0.3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<models::PredictionRecord> rs(2000);
    for (auto& r : rs) r = {e(rng), u(rng), 0.0};
    sets.push_back(rs);
  }
  bool monotone = true;
  bool transform_exact = true;
  double endpoint_err = 0.0;
  for (const auto& rs : sets) {
    auto oracle = rs;
    for (auto& r : oracle) r.score = r.abs_error();
    double prev = -1.0;
    for (const auto& p : eval::error_keep_curve(oracle, 1000).points) {
      if (!p.mae) continue;
      if (*p.mae < prev) monotone = false;
      prev = *p.mae;
    }
    auto transformed = rs;
    for (auto& r : transformed) r.score = std::atan(r.score) * 3.0 + 7.0;
    for (double k : eval::kKeepGrid) {
      if (eval::mae_at_keep(rs, k) != eval::mae_at_keep(transformed, k)) transform_exact = false;
    }
    double max_score = -std::numeric_limits<double>::infinity();
    for (const auto& r : rs) max_score = std::max(max_score, r.score);
    const auto above = eval::mae_at_threshold(rs, std::nextafter(max_score, std::numeric_limits<double>::infinity()));
    endpoint_err = std::max(endpoint_err, std::abs(*above.mae - eval::plain_mae(rs)));
  }
  const bool pass = monotone && transform_exact && endpoint_err <= 1e-12;
  return {pass, std::to_string(sets.size()) + " record sets; oracle curve monotone: " + (monotone ? "yes" : "no") +
                    ", transform invariance exact: " + (transform_exact ? "yes" : "no") +
                    ", endpoint error " + fmt(endpoint_err, 3)};
}

// ------------------------------------------------------------------ C8 --

Outcome baselines_sanity() {
  data::GeneratorConfig cfg;
  cfg.families[data::Family::periodic] = data::FamilyConfig{10000};
  cfg.noise.law = data::NoiseLaw::constant;
  cfg.noise.b0 = 0.5;
  auto test_cfg = cfg;
  test_cfg.families[data::Family::periodic].count = 5000;
  const auto train_set = data::make_dataset(data::raw_series(data::generate_synthetic(cfg, 801)));
  const auto test_set = data::make_dataset(data::raw_series(data::generate_synthetic(test_cfg, 802)));
  auto model = models::Model::build(models::ModelSpec::make(Backbone::dense, Uncertainty::point, 26, true), 8);
  models::train(model, train_set, desk_train_config(8));
  const double dense = eval::plain_mae(models::predict_records(model, test_set, models::ScoreKind::var));
  const double mean = eval::plain_mae(models::baseline_records(models::BaselineKind::mean, test_set));
  const double zero = eval::plain_mae(models::baseline_records(models::BaselineKind::zero, test_set));
  const double last = eval::plain_mae(models::baseline_records(models::BaselineKind::last, test_set));
  const bool pass = last > dense && zero > std::max({dense, mean, last});
  return {pass, "full MAE dense " + fmt(dense) + ", last " + fmt(last) + ", mean " + fmt(mean) + ", zero " + fmt(zero)};
}

// ------------------------------------------------------------------ C9 --

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism(const fs::path& dir) {
  const std::string cli = ALEA_CLI_PATH;
  const auto gen_cfg = dir / "gen.json";
  auto g = cli::default_generator_config();
  for (auto& [f, fc] : g.families) fc.count = 500;
  g.seed = 99;
  cli::write_text_file(gen_cfg, data::generator_config_to_json(g).dump(2));
  const auto train_cfg = dir / "train.json";
  cli::write_text_file(train_cfg, R"({"schema_version": 1,
    "models": [{"backbone": "dense", "uncertainty": "heteroscedastic"},
               {"backbone": "dense", "uncertainty": "mc_dropout"},
               {"backbone": "lstm", "uncertainty": "homoscedastic"}],
    "seeds": [5], "desk": true,
    "architecture": {"lstm_sizes": [8], "head_sizes": [8]},
    "train": {"max_epochs": 3}})");
  const auto run = [&](const std::string& tag) {
    const auto out = dir / tag;
    const std::string cmd = "\"" + cli + "\" generate --config \"" + gen_cfg.string() + "\" --out \"" +
                            (out / "data.csv").string() + "\" > /dev/null && \"" + cli + "\" train --config \"" +
                            train_cfg.string() + "\" --data \"" + (out / "data.csv").string() + "\" --out \"" +
                            (out / "ckpt").string() + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  if (run("a") != 0 || run("b") != 0) return {false, "CLI run failed"};
  std::vector<std::string> files{"data.csv"};
  for (const auto& e : fs::directory_iterator(dir / "a" / "ckpt")) files.push_back("ckpt/" + e.path().filename().string());
  std::sort(files.begin(), files.end());
  std::size_t identical = 0;
  for (const auto& f : files) {
    const auto a = slurp(dir / "a" / f);
    if (!a.empty() && a == slurp(dir / "b" / f)) ++identical;
  }
  return {identical == files.size() && files.size() == 7,
          std::to_string(identical) + " of " + std::to_string(files.size()) + " output files byte-identical"};
}

}  // namespace

int main() {
  const auto dir = scratch_dir();
  int failed = 0;
  const auto report = [&](const std::string& id, const std::string& title, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << title << ": " << o.detail << " [" << fmt(secs, 3)
              << " s]" << std::endl;
  };

  report("C1", "gradient correctness", gradient_correctness);
  report("C2", "loss oracles", loss_oracles);
  report("C3", "homoscedastic recovery", homoscedastic_recovery);
  report("C4", "heteroscedastic recovery", heteroscedastic_recovery);

  SelectiveRun selective;
  bool selective_ready = false;
  report("C5", "selective-risk ordering", [&] {
    const auto split = make_split(selective_config(20000), 501, 10000, 502);
    selective = selective_runs(split, 6);
    selective_ready = true;
    return selective_ordering(selective);
  });
  const auto need_selective = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!selective_ready) return {false, "selective-risk training did not complete"};
      return fn();
    };
  };
  report("C6", "error-keep machinery", need_selective([&] { return error_keep_machinery(selective.het_records_seed0); }));
  report("C7", "error vs score correlation", need_selective([&] { return fig4_analogue(selective, dir); }));
  report("C8", "baselines sanity", baselines_sanity);
  report("C9", "determinism", [&] { return determinism(dir); });

  std::error_code ec;
  fs::remove_all(dir, ec);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
