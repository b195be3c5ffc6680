// alea: generate synthetic series, train model grids, evaluate selective
// prediction matrices and cluster series shapes.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "alea/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace alea;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoints;
  std::vector<std::uint64_t> seeds;
  bool desk = false;
  std::size_t jobs = 1;
  std::size_t k = 16;
};

fs::path out_or(const Options& o, const fs::path& fallback) { return o.out.empty() ? fallback : fs::path(o.out); }

int cmd_generate(const Options& o) {
  auto cfg = o.config.empty() ? cli::default_generator_config()
                              : data::generator_config_from_json(cli::read_json_file(o.config));
  if (!o.seeds.empty()) cfg.seed = o.seeds.front();
  const auto out = out_or(o, cli::default_out_dir() / "data.csv");
  const auto rows = cli::run_generate(cfg, out);
  std::cout << "wrote " << rows << " series to " << out.string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  auto cfg = o.config.empty() ? cli::TrainRunConfig{}
                              : cli::train_run_config_from_json(cli::read_json_file(o.config));
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.desk) cfg.desk = true;
  const auto out = out_or(o, cli::default_out_dir() / "checkpoints");
  const auto results = cli::run_train(cfg, o.data, out, o.jobs, &std::cerr);
  std::cout << "wrote " << results.size() << " checkpoints to " << out.string() << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const auto cfg = o.config.empty() ? cli::EvalConfig{} : cli::eval_config_from_json(cli::read_json_file(o.config));
  const fs::path checkpoints = o.checkpoints.empty() ? cli::default_out_dir() / "checkpoints" : fs::path(o.checkpoints);
  const auto out = out_or(o, cli::default_out_dir() / "eval");
  const auto doc = cli::run_evaluate(cfg, checkpoints, o.data, out, o.jobs, &std::cerr);
  std::cout << cli::format_matrix(doc);
  std::cout << "wrote " << (out / "matrix.json").string() << '\n';
  return 0;
}

int cmd_cluster(const Options& o) {
  const std::uint64_t seed = o.seeds.empty() ? 0 : o.seeds.front();
  const auto out = out_or(o, cli::default_out_dir() / "clusters");
  const auto s = cli::run_cluster(o.data, o.k, seed, out);
  std::cout << "k=" << s.k << " inertia=" << data::format_double(s.inertia) << " iterations=" << s.iterations
            << (s.converged ? "" : " (not converged)") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace-scale forecasting with selective prediction"};
  app.require_subcommand(1);
  Options o;

  const std::string out_help = std::string("output path (default under $") + cli::kOutDirEnv + ")";
  auto* gen = app.add_subcommand("generate", "write a synthetic data set as CSV");
  gen->add_option("--config", o.config, "generator config JSON")->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, out_help);
  gen->add_option("--seeds", o.seeds, "generator seed (first value used)")->delimiter(',');

  auto* train = app.add_subcommand("train", "train a grid of models and write checkpoints");
  train->add_option("--config", o.config, "train config JSON")->check(CLI::ExistingFile);
  train->add_option("--data", o.data, "training CSV")->required();
  train->add_option("--out", o.out, out_help);
  train->add_option("--seeds", o.seeds, "comma-separated seeds")->delimiter(',');
  train->add_flag("--desk", o.desk, "small architectures for laptop runs");
  train->add_option("--jobs", o.jobs, "parallel (model, seed) jobs")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "score checkpoints and baselines on a test CSV");
  evaluate->add_option("--config", o.config, "eval config JSON")->check(CLI::ExistingFile);
  evaluate->add_option("--data", o.data, "test CSV")->required();
  evaluate->add_option("--checkpoints", o.checkpoints, "directory of *.ckpt.json");
  evaluate->add_option("--out", o.out, out_help);
  evaluate->add_option("--jobs", o.jobs, "parallel checkpoint jobs")->check(CLI::PositiveNumber);

  auto* cluster = app.add_subcommand("cluster", "k-means over normalized series shapes");
  cluster->add_option("--data", o.data, "series CSV")->required();
  cluster->add_option("--k", o.k, "number of clusters")->check(CLI::PositiveNumber);
  cluster->add_option("--seeds", o.seeds, "k-means seed (first value used)")->delimiter(',');
  cluster->add_option("--out", o.out, out_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*train) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*cluster) return cmd_cluster(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
