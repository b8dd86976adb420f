#include "deephedge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace deephedge::baselines {

void Baseline::validate() const {
  if (!(k >= 0.0 && k < 1.0)) throw ConfigError("baseline k must be in [0, 1)");
}

double norm_cdf(double x) {
  // erfc keeps full relative precision in the lower tail.
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

double bs_delta(double s, double strike, double r_annual, double sigma, int steps_remaining,
                double dt) {
  if (steps_remaining < 1) throw ContractViolation("bs_delta: no steps remaining");
  if (!(s > 0.0) || !(strike > 0.0)) throw ContractViolation("bs_delta: prices must be > 0");
  if (!(sigma > 0.0)) throw ContractViolation("bs_delta: sigma must be > 0");
  const double tau = steps_remaining * dt;
  const double d1 =
      (std::log(s / strike) + (r_annual + 0.5 * sigma * sigma) * tau) / std::sqrt(sigma * sigma * tau);
  return norm_cdf(d1);
}

double bs_call_price(double s, double strike, double r_annual, double sigma, double tau) {
  if (tau <= 0.0 || sigma <= 0.0) {
    return std::max(0.0, s - strike * std::exp(-r_annual * std::max(tau, 0.0)));
  }
  const double vol = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / strike) + (r_annual + 0.5 * sigma * sigma) * tau) / vol;
  const double d2 = d1 - vol;
  return s * norm_cdf(d1) - strike * std::exp(-r_annual * tau) * norm_cdf(d2);
}

double calibrate_k(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ContractViolation("calibrate_k: beta must be in (0, 1]");
  return 2.0 - std::pow(2.0, beta);
}

double calibrate_k(const market::MarketParams& params, CalibrationSide side) {
  if (side == CalibrationSide::sell) return calibrate_k(params.beta);
  return std::pow(2.0, params.alpha) - 2.0;
}

double leland_sigma(double sigma, double k, double dt) {
  if (!(sigma > 0.0) || !(dt > 0.0) || !(k >= 0.0)) {
    throw ContractViolation("leland_sigma: need sigma > 0, dt > 0, k >= 0");
  }
  if (k == 0.0) return sigma;
  return sigma * std::sqrt(1.0 + std::sqrt(2.0 / std::numbers::pi) * k / (sigma * std::sqrt(dt)));
}

double effective_sigma(const Baseline& baseline, const market::MarketParams& params) {
  if (baseline.kind == BaselineKind::black_scholes) return params.sigma;
  return leland_sigma(params.sigma, baseline.k, params.dt);
}

double baseline_position(const Baseline& baseline, double s, int t,
                         const account::OptionSpec& option, const market::MarketParams& params) {
  return bs_delta(s, option.strike, params.r / params.dt, effective_sigma(baseline, params),
                  option.horizon - t, params.dt);
}

account::Strategy baseline_strategy(const Baseline& baseline, const account::OptionSpec& option,
                                    const market::MarketParams& params) {
  baseline.validate();
  const double sigma = effective_sigma(baseline, params);
  const double r_annual = params.r / params.dt;
  return [sigma, r_annual, strike = option.strike, dt = params.dt](const account::DecisionPoint& d) {
    return bs_delta(d.price, strike, r_annual, sigma, d.horizon - d.t, dt);
  };
}

account::EpisodeRecord baseline_rollout(const Baseline& baseline, const market::PricePath& path,
                                        const account::OptionSpec& option,
                                        const market::MarketParams& params) {
  return account::run_episode(baseline_strategy(baseline, option, params), path, option, params);
}

double default_premium(const account::OptionSpec& option, const market::MarketParams& params) {
  return bs_call_price(params.s0, option.strike, params.r / params.dt, params.sigma,
                       option.horizon * params.dt);
}

}  // namespace deephedge::baselines
