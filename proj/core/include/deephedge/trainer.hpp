#pragma once

// Differentiable hedging episodes, the semi-quadratic Monte-Carlo risk and the
// policy-gradient training loop.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deephedge/account.hpp"
#include "deephedge/autodiff.hpp"
#include "deephedge/policy.hpp"

namespace deephedge::training {

inline constexpr int kFeatureCount = 6;

// (t/T, log(S_t/K), A_t, B_t, X_t, V_t/V_0)
using FeatureVector = std::array<double, kFeatureCount>;

FeatureVector normalize_state(int t, double s, const market::ImpactState<double>& impact,
                              double x, double v, const account::OptionSpec& option, double v0);

// Bounds on the raw network output; a non-positive or infinite bound disables
// clipping.
struct PositionClip {
  double bound = 5.0;
  bool enabled() const;
  double apply(double x) const;
};

struct RolloutTrace {
  ad::Var losses;                // 1 x N, R = -P_X per path
  std::vector<ad::Var> actions;  // X_1..X_T, each 1 x N
};

// Batched episode over `paths` on a tape. Prices are constants; positions,
// cash, impact states and portfolio values are differentiable. v0 scales the
// portfolio-value feature. Throws EpisodeError on a non-finite step.
RolloutTrace rollout_episode(ad::Tape& tape, const nn::TapePolicy& policy,
                             std::span<const market::PricePath> paths,
                             const account::OptionSpec& option,
                             const market::MarketParams& params, double v0,
                             PositionClip clip = {});

// (1/N) sum max(0, R_i)^2
ad::Var semi_quadratic_risk(ad::Var losses);
double semi_quadratic_risk(std::span<const double> losses);

struct TrainConfig {
  market::MarketParams market;
  account::OptionSpec option;
  int batch_size = 256;
  int iterations = 5000;
  double lr = 1e-3;
  double lr_decay = 0.5;
  int lr_decay_every = 2000;
  std::uint64_t seed = 42;
  std::vector<int> hidden = {64, 64, 64};
  nn::Activation activation = nn::Activation::relu;
  PositionClip clip;
  // Reuse one fixed sample of batch_size paths in every iteration.
  bool fixed_sample = false;
  bool record_wall_time = false;

  void validate() const;
  std::vector<int> architecture() const;
  // Learning rate used at iteration j.
  double learning_rate(int iteration) const;
};

struct IterationLog {
  int iteration = 0;
  double rho_hat = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
  bool aborted = false;
};

struct TrainResult {
  nn::PolicyParams policy;
  nn::AdamState adam;
  std::vector<IterationLog> history;
  int aborted_steps = 0;
};

// Called after each completed iteration (1-based count).
using IterationHook =
    std::function<void(int completed, const nn::PolicyParams&, const nn::AdamState&)>;

// Minibatch j is simulate_paths(market, T, N, substream_seed(seed, j, train salt)).
// Throws TrainingFailed when more than 1% of the steps were aborted.
TrainResult train(const TrainConfig& config, const IterationHook& hook = {});

// Minibatch used at iteration j.
std::vector<market::PricePath> training_batch(const TrainConfig& config, int iteration);

// Same policy evaluated pathwise on doubles through the account module. The
// portfolio-value feature is scaled by v0, or by the episode's V_0 when unset.
account::Strategy policy_strategy(const nn::PolicyParams& policy,
                                  const account::OptionSpec& option, PositionClip clip = {},
                                  std::optional<double> v0 = std::nullopt);

struct RiskReport {
  std::string strategy;
  int n_paths = 0;
  double rho_hat = 0.0;
  double mean_profit = 0.0;
  double stdev_profit = 0.0;
  double mean_turnover = 0.0;
  double mean_excess_cost = 0.0;
};

// Out-of-sample report over simulate_paths(params, T, n_paths, seed).
RiskReport evaluate(const account::Strategy& strategy, const std::string& name, int n_paths,
                    std::uint64_t seed, const market::MarketParams& params,
                    const account::OptionSpec& option,
                    std::vector<account::EpisodeRecord>* keep = nullptr,
                    std::size_t keep_first = 0);

RiskReport summarize(const std::string& name, std::span<const account::EpisodeRecord> episodes);

}  // namespace deephedge::training
