#pragma once

// Run configuration: a flat, sectioned INI file whose key names carry units.
//
//   [run]      seed, out_dir
//   [market]   mu_annual, sigma_annual, s0, dt_years, r_per_step, alpha, beta,
//              lambda_a_per_step, lambda_b_per_step, a0_shares, b0_shares
//   [option]   strike, horizon_steps, premium (number or "auto")
//   [train]    batch_size, iterations, lr, lr_decay_factor, lr_decay_every,
//              hidden_layers, activation, clip_shares, fixed_sample,
//              record_wall_time, checkpoint_every
//   [evaluate] checkpoint, n_paths, keep_episodes, market_source
//   [policy_surface] [path_comparison] [constant_price] [pin_risk]
//              checkpoints plus experiment settings
//
// Unknown sections or keys are errors. A [manifest] section is ignored so a
// run's manifest.ini can be fed back as its config.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "deephedge/trainer.hpp"

namespace deephedge::config {

// "section.key" -> raw value
using FlatConfig = std::map<std::string, std::string>;

struct EvaluateSettings {
  std::string checkpoint;
  int n_paths = 100000;
  int keep_episodes = 10;
  // "checkpoint": market and option stored with the policy; "config": the
  // [market] / [option] sections of this file (strike and horizon must match).
  std::string market_source = "checkpoint";
};

struct PolicySurfaceSettings {
  std::vector<std::string> checkpoints;
  int t_step = 6;
  double x_prev_shares = 0.5;
  double s_min = 700.0;
  double s_max = 1300.0;
  int s_points = 61;
  int v_levels = 5;
  double v_min_fraction = 0.5;
  double v_max_fraction = 1.5;
};

struct PathComparisonSettings {
  std::vector<std::string> checkpoints;
  int test_paths = 10000;
};

struct ConstantPriceSettings {
  std::vector<std::string> checkpoints;
  double price = 1000.0;
  int window_last_t = 3;
};

struct PinRiskSettings {
  std::vector<std::string> checkpoints;
  int tail_steps = 3;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  training::TrainConfig train;
  bool premium_auto = true;
  int checkpoint_every = 500;
  EvaluateSettings evaluate;
  PolicySurfaceSettings policy_surface;
  PathComparisonSettings path_comparison;
  ConstantPriceSettings constant_price;
  PinRiskSettings pin_risk;

  // Premium after resolving "auto" to the Black-Scholes price.
  void resolve();
};

RunConfig default_config();

FlatConfig read_flat(std::istream& in);
FlatConfig read_flat_file(const std::string& path);

// Applies the keys over the defaults and resolves the premium. Throws
// ConfigError on unknown keys or malformed values.
RunConfig from_flat(const FlatConfig& flat);
RunConfig load_config(const std::string& path);

// Canonical text of every key, in schema order; numbers in their shortest
// exactly round-tripping form.
FlatConfig to_flat(const RunConfig& cfg);
void write_config(std::ostream& out, const RunConfig& cfg);

// Keys that define a trained policy (run.seed, market.*, option.*, train.*),
// stored as checkpoint metadata.
std::vector<std::pair<std::string, std::string>> training_metadata(const RunConfig& cfg);
RunConfig from_metadata(const std::vector<std::pair<std::string, std::string>>& meta);

std::string format_number(double v);

}  // namespace deephedge::config
