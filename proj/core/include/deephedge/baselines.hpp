#pragma once

// Delta-hedging benchmarks: Black-Scholes and the Leland volatility
// adjustment for proportional costs.

#include "deephedge/account.hpp"

namespace deephedge::baselines {

enum class BaselineKind { black_scholes, leland };

struct Baseline {
  BaselineKind kind = BaselineKind::black_scholes;
  double k = 0.0;  // proportional cost rate, Leland only; 0 <= k < 1

  void validate() const;
};

// Which side of the book the Leland cost rate is matched against.
enum class CalibrationSide { sell, buy };

double norm_cdf(double x);

// Phi(d1), d1 = [log(S/K) + (r + sigma^2/2) tau] / (sigma sqrt(tau)),
// tau = steps_remaining * dt. r is annualized.
double bs_delta(double s, double strike, double r_annual, double sigma, int steps_remaining,
                double dt);

// Black-Scholes call price with time to maturity tau (years), r annualized.
double bs_call_price(double s, double strike, double r_annual, double sigma, double tau);

// Sell side: S0 (1 - k) = F^b(S0, 0, 1), i.e. k = 2 - 2^beta.
// Buy side:  S0 (1 + k) = F^a(S0, 0, 1), i.e. k = 2^alpha - 2.
double calibrate_k(double beta);
double calibrate_k(const market::MarketParams& params, CalibrationSide side);

// sigma sqrt(1 + sqrt(2/pi) k / (sigma sqrt(dt)))
double leland_sigma(double sigma, double k, double dt);

// Volatility the baseline plugs into the delta formula.
double effective_sigma(const Baseline& baseline, const market::MarketParams& params);

// X_{t+1} = Phi(d1) at S_t with T - t steps left. Reads only (S_t, t).
double baseline_position(const Baseline& baseline, double s, int t,
                         const account::OptionSpec& option, const market::MarketParams& params);

account::Strategy baseline_strategy(const Baseline& baseline, const account::OptionSpec& option,
                                    const market::MarketParams& params);

account::EpisodeRecord baseline_rollout(const Baseline& baseline, const market::PricePath& path,
                                        const account::OptionSpec& option,
                                        const market::MarketParams& params);

// Black-Scholes premium for the option, from (S0, K, sigma, r, T dt).
double default_premium(const account::OptionSpec& option, const market::MarketParams& params);

}  // namespace deephedge::baselines
