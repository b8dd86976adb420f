#include "deephedge/trainer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <iostream>

#include "deephedge/errors.hpp"
#include "deephedge/rng.hpp"

namespace deephedge::training {

namespace {

constexpr std::uint64_t kTrainSalt = 0x747261696e;  // "train"

void check_finite(const ad::Var& v, int step, const char* what) {
  if (!ad::all_finite(v.value())) throw EpisodeError(step, fmt::format("non-finite {}", what));
}

ad::Var clip_on_tape(ad::Var x, PositionClip clip) {
  if (!clip.enabled()) return x;
  // x - (x - c)^+ + (-c - x)^+
  return x - ad::pos_part(x - clip.bound) + ad::pos_part(-clip.bound - x);
}

}  // namespace

FeatureVector normalize_state(int t, double s, const market::ImpactState<double>& impact,
                              double x, double v, const account::OptionSpec& option, double v0) {
  if (!(s > 0.0)) throw ContractViolation("normalize_state: price must be > 0");
  if (v0 == 0.0) throw ConfigError("normalize_state: V_0 is zero; the premium must make V_0 > 0");
  return {static_cast<double>(t) / option.horizon, std::log(s / option.strike), impact.a, impact.b,
          x, v / v0};
}

bool PositionClip::enabled() const { return bound > 0.0 && std::isfinite(bound); }

double PositionClip::apply(double x) const {
  if (!enabled()) return x;
  return std::min(std::max(x, -bound), bound);
}

RolloutTrace rollout_episode(ad::Tape& tape, const nn::TapePolicy& policy,
                             std::span<const market::PricePath> paths,
                             const account::OptionSpec& option,
                             const market::MarketParams& params, double v0, PositionClip clip) {
  if (paths.empty()) throw ContractViolation("rollout_episode: empty batch");
  if (v0 == 0.0) throw ConfigError("rollout_episode: V_0 is zero");
  const int horizon = option.horizon;
  const auto n = static_cast<Eigen::Index>(paths.size());
  for (const auto& p : paths) {
    if (p.horizon() != horizon) throw ContractViolation("rollout_episode: path length mismatch");
  }
  auto price_row = [&](int t) {
    ad::Matrix row(1, n);
    for (Eigen::Index i = 0; i < n; ++i) row(0, i) = paths[static_cast<std::size_t>(i)].prices[static_cast<std::size_t>(t)];
    return row;
  };

  RolloutTrace trace;
  trace.actions.reserve(static_cast<std::size_t>(horizon));
  auto state = account::open_account(tape.constant(option.premium, 1, n), params);
  const double inv_v0 = 1.0 / v0;

  for (int t = 0; t < horizon; ++t) {
    ad::Matrix s_row = price_row(t);
    ad::Matrix moneyness = (s_row.array() / option.strike).log().matrix();
    const ad::Var s = tape.constant(std::move(s_row));
    const ad::Var v = account::portfolio_value(state, s, params);
    const std::array<ad::Var, kFeatureCount> features = {
        tape.constant(static_cast<double>(t) / horizon, 1, n),
        tape.constant(std::move(moneyness)),
        state.impact.a,
        state.impact.b,
        state.x,
        v * inv_v0,
    };
    const ad::Var position = clip_on_tape(policy.forward(ad::concat_rows(features)), clip);
    check_finite(position, t, "position");
    state = account::rebalance(state, s, position, params);
    check_finite(state.cash, t, "cash");
    trace.actions.push_back(position);
  }
  const ad::Var s_T = tape.constant(price_row(horizon));
  trace.losses = -account::settle(state, s_T, option.strike, params);
  check_finite(trace.losses, horizon, "settlement");
  return trace;
}

ad::Var semi_quadratic_risk(ad::Var losses) {
  return ad::mean(ad::pow_const(ad::pos_part(losses), 2.0));
}

double semi_quadratic_risk(std::span<const double> losses) {
  if (losses.empty()) throw ContractViolation("semi_quadratic_risk: empty batch");
  double total = 0.0;
  for (double r : losses) {
    const double p = r > 0.0 ? r : 0.0;
    total += p * p;
  }
  return total / static_cast<double>(losses.size());
}

void TrainConfig::validate() const {
  market.validate();
  option.validate();
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (iterations < 0) throw ConfigError("train.iterations must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay_factor must be > 0");
  if (lr_decay_every < 1) throw ConfigError("train.lr_decay_every must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("train.hidden_layers widths must be >= 1");
  }
  if (option.premium == 0.0 && market.a0 == 0.0 && market.b0 == 0.0) {
    throw ConfigError("option.premium is zero, so V_0 = 0 and the value feature is undefined");
  }
}

std::vector<int> TrainConfig::architecture() const {
  std::vector<int> layers{kFeatureCount};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(1);
  return layers;
}

double TrainConfig::learning_rate(int iteration) const {
  return lr * std::pow(lr_decay, iteration / lr_decay_every);
}

std::vector<market::PricePath> training_batch(const TrainConfig& config, int iteration) {
  const auto index = config.fixed_sample ? 0u : static_cast<std::uint64_t>(iteration);
  return market::simulate_paths(config.market, config.option.horizon, config.batch_size,
                                substream_seed(config.seed, index, kTrainSalt));
}

TrainResult train(const TrainConfig& config, const IterationHook& hook) {
  config.validate();
  TrainResult result;
  result.policy = nn::init_policy(config.architecture(), config.activation, config.seed);
  result.adam = nn::AdamState::for_size(result.policy.theta.size(), config.lr);
  result.history.reserve(static_cast<std::size_t>(config.iterations));

  const auto open = account::open_account(config.option.premium, config.market);
  const double v0 = account::portfolio_value(open, config.market.s0, config.market);

  std::vector<market::PricePath> fixed;
  if (config.fixed_sample) fixed = training_batch(config, 0);

  for (int j = 0; j < config.iterations; ++j) {
    const auto start = std::chrono::steady_clock::now();
    IterationLog log;
    log.iteration = j;
    const std::vector<market::PricePath> fresh =
        config.fixed_sample ? std::vector<market::PricePath>{} : training_batch(config, j);
    const auto& batch = config.fixed_sample ? fixed : fresh;
    try {
      ad::Tape tape;
      nn::TapePolicy policy(tape, result.policy);
      const auto trace =
          rollout_episode(tape, policy, batch, config.option, config.market, v0, config.clip);
      const ad::Var risk = semi_quadratic_risk(trace.losses);
      log.rho_hat = risk.value()(0, 0);
      const auto grad = policy.flatten(tape.backward(risk));
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      log.grad_norm = std::sqrt(norm2);
      result.adam.lr = config.learning_rate(j);
      nn::adam_step(result.policy.theta, grad, result.adam);
    } catch (const NumericalError& e) {
      log.aborted = true;
      log.rho_hat = std::numeric_limits<double>::quiet_NaN();
      ++result.aborted_steps;
      std::cerr << fmt::format("train: iteration {} aborted: {}\n", j, e.what());
    }
    if (config.record_wall_time) {
      log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                        .count();
    }
    result.history.push_back(log);
    if (hook) hook(j + 1, result.policy, result.adam);
  }
  if (config.iterations > 0 &&
      static_cast<double>(result.aborted_steps) > 0.01 * static_cast<double>(config.iterations)) {
    throw TrainingFailed(fmt::format("{} of {} training steps aborted on non-finite values",
                                     result.aborted_steps, config.iterations));
  }
  return result;
}

account::Strategy policy_strategy(const nn::PolicyParams& policy,
                                  const account::OptionSpec& option, PositionClip clip,
                                  std::optional<double> v0) {
  policy.validate();
  return [policy, option, clip, v0](const account::DecisionPoint& d) {
    const double scale = v0.value_or(d.initial_value);
    const auto features =
        normalize_state(d.t, d.price, d.state.impact, d.state.x, d.value, option, scale);
    return clip.apply(nn::ffnn_forward(policy, features));
  };
}

RiskReport summarize(const std::string& name, std::span<const account::EpisodeRecord> episodes) {
  RiskReport report;
  report.strategy = name;
  report.n_paths = static_cast<int>(episodes.size());
  std::vector<double> losses;
  losses.reserve(episodes.size());
  double sum_p = 0.0, sum_turn = 0.0, sum_cost = 0.0;
  for (const auto& e : episodes) {
    losses.push_back(e.loss);
    sum_p += e.profit;
    sum_turn += e.turnover();
    sum_cost += e.excess_cost();
  }
  const auto n = static_cast<double>(episodes.size());
  report.rho_hat = semi_quadratic_risk(losses);
  report.mean_profit = sum_p / n;
  double ss = 0.0;
  for (const auto& e : episodes) ss += (e.profit - report.mean_profit) * (e.profit - report.mean_profit);
  report.stdev_profit = episodes.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  report.mean_turnover = sum_turn / n;
  report.mean_excess_cost = sum_cost / n;
  return report;
}

RiskReport evaluate(const account::Strategy& strategy, const std::string& name, int n_paths,
                    std::uint64_t seed, const market::MarketParams& params,
                    const account::OptionSpec& option, std::vector<account::EpisodeRecord>* keep,
                    std::size_t keep_first) {
  if (n_paths < 1) throw ConfigError("evaluate: n_paths must be >= 1");
  RiskReport report;
  report.strategy = name;
  report.n_paths = n_paths;
  double sum_loss2 = 0.0, sum_p = 0.0, sum_p2 = 0.0, sum_turn = 0.0, sum_cost = 0.0;
  for (int i = 0; i < n_paths; ++i) {
    const auto path =
        market::simulate_path(params, option.horizon, substream_seed(seed, static_cast<std::uint64_t>(i)));
    auto rec = account::run_episode(strategy, path, option, params);
    const double pos_loss = rec.loss > 0.0 ? rec.loss : 0.0;
    sum_loss2 += pos_loss * pos_loss;
    sum_p += rec.profit;
    sum_p2 += rec.profit * rec.profit;
    sum_turn += rec.turnover();
    sum_cost += rec.excess_cost();
    if (keep && static_cast<std::size_t>(i) < keep_first) keep->push_back(std::move(rec));
  }
  const auto n = static_cast<double>(n_paths);
  report.rho_hat = sum_loss2 / n;
  report.mean_profit = sum_p / n;
  report.stdev_profit =
      n_paths > 1 ? std::sqrt(std::max(0.0, (sum_p2 - n * report.mean_profit * report.mean_profit) / (n - 1.0)))
                  : 0.0;
  report.mean_turnover = sum_turn / n;
  report.mean_excess_cost = sum_cost / n;
  return report;
}

}  // namespace deephedge::training
