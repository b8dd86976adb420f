#pragma once

// Seeded runs behind the command-line subcommands. Each run writes CSV files
// into an output directory and returns the numbers it reported, so tests can
// check them without re-parsing the files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "deephedge/config.hpp"
#include "deephedge/trainer.hpp"

namespace deephedge::experiments {

// A checkpoint together with the configuration it was trained under.
struct TrainedPolicy {
  std::string path;
  std::string sha256;
  config::RunConfig cfg;
  nn::PolicyParams policy;
  double v0 = 0.0;

  const market::MarketParams& market() const { return cfg.train.market; }
  const account::OptionSpec& option() const { return cfg.train.option; }
  account::Strategy strategy() const;
};

// Throws MissingCheckpoint naming `needed` (the training run that produces the
// file) when the path does not exist.
TrainedPolicy load_trained(const std::string& path, const std::string& needed = {});

std::string sha256_file(const std::filesystem::path& path);

// Files written by a run plus the checkpoints it read, for the manifest.
struct RunRecord {
  std::string command;
  std::vector<std::string> outputs;  // names relative to the output directory
  std::vector<std::pair<std::string, std::string>> checkpoints;  // path, sha256
};

// resolved config + [manifest] with command, checkpoint and output hashes.
void write_manifest(const std::filesystem::path& out_dir, const config::RunConfig& cfg,
                    const RunRecord& record);

struct TrainRun {
  RunRecord record;
  training::TrainResult result;
};

// policy.ckpt (every train.checkpoint_every iterations and at exit) and
// training_log.csv.
TrainRun run_train(const config::RunConfig& cfg, const std::filesystem::path& out_dir);

struct EvaluateRun {
  RunRecord record;
  std::vector<training::RiskReport> reports;  // drl, black_scholes, leland
};

// report.csv and episodes.csv on a common test set of evaluate.n_paths paths.
EvaluateRun run_evaluate(const config::RunConfig& cfg, const std::filesystem::path& out_dir);

struct SurfaceRun {
  RunRecord record;
  std::size_t rows = 0;
};

// policy_surface.csv: (alpha, beta, S_t, V_t, X_drl, X_bs, X_leland) over the
// S grid, the V levels and the two impact levels.
SurfaceRun run_policy_surface(const config::RunConfig& cfg, const std::filesystem::path& out_dir);

struct TurnoverRow {
  std::string strategy;
  double alpha = 1.0;
  double beta = 1.0;
  training::RiskReport report;
};

struct PathComparisonRun {
  RunRecord record;
  std::vector<TurnoverRow> turnover;
};

// path.csv, positions.csv for one seeded path, turnover.csv over the test set.
PathComparisonRun run_path_comparison(const config::RunConfig& cfg,
                                      const std::filesystem::path& out_dir);

struct WindowRow {
  double mu = 0.0;
  std::string strategy;
  double alpha = 1.0;
  double beta = 1.0;
  double mean_position = 0.0;  // mean X_{t+1} over decisions t <= window_last_t
};

struct ConstantPriceRun {
  RunRecord record;
  std::vector<WindowRow> windows;
};

// positions.csv and summary.csv on the constant path S_t = price.
ConstantPriceRun run_constant_price(const config::RunConfig& cfg,
                                    const std::filesystem::path& out_dir);

struct TailRow {
  std::string lambda;  // per-step decay as written in the config
  std::string strategy;
  double stdev_dx = 0.0;
};

struct PinRiskRun {
  RunRecord record;
  std::vector<TailRow> tails;
  bool drl_nonincreasing = true;
  std::vector<account::EpisodeRecord> drl_episodes;  // one per persistence level
};

// positions.csv (with A_t, B_t) and summary.csv with the stdev of dX over the
// last pin_risk.tail_steps decisions.
PinRiskRun run_pin_risk(const config::RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace deephedge::experiments
