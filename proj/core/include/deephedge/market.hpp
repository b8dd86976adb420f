#pragma once

// Simulated market: GBM mid-prices, power-law supply curves for the limit
// order book, and exponentially decaying impact persistence.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "deephedge/errors.hpp"
#include "deephedge/scalar.hpp"

namespace deephedge::market {

// Per-step decay rate of an impact persistence state. Infinity is a distinct
// state (no persistence) and is never pushed through exp().
class DecayRate {
 public:
  constexpr DecayRate() = default;

  static constexpr DecayRate infinite() { return DecayRate(true, 0.0); }
  static DecayRate per_step(double lambda) {
    if (std::isinf(lambda) && lambda > 0.0) return infinite();
    if (!(lambda >= 0.0)) throw ContractViolation("decay rate must be >= 0");
    return DecayRate(false, lambda);
  }

  constexpr bool is_infinite() const { return infinite_; }
  // lambda, or +inf for the no-persistence case.
  double rate() const { return infinite_ ? std::numeric_limits<double>::infinity() : rate_; }
  // Fraction of the state carried to the next step, e^{-lambda}; 0 for infinite.
  double retention() const { return infinite_ ? 0.0 : std::exp(-rate_); }

  friend bool operator==(const DecayRate&, const DecayRate&) = default;

 private:
  constexpr DecayRate(bool inf, double rate) : infinite_(inf), rate_(rate) {}
  bool infinite_ = true;
  double rate_ = 0.0;
};

struct MarketParams {
  double mu = 0.0892;        // annualized drift
  double sigma = 0.1952;     // annualized volatility
  double s0 = 1000.0;        // initial mid-price
  double dt = 1.0 / 12.0;    // step length in years
  double r = 0.0;            // per-step risk-free rate; cash accrues by e^r
  double alpha = 1.0;        // buy-side impact exponent, >= 1
  double beta = 1.0;         // sell-side impact exponent, in (0, 1]
  DecayRate lambda_a = DecayRate::infinite();
  DecayRate lambda_b = DecayRate::infinite();
  double a0 = 0.0;
  double b0 = 0.0;

  // Throws ConfigError when an invariant is broken.
  void validate() const;
};

struct PricePath {
  std::vector<double> prices;  // S_0..S_T
  std::vector<double> draws;   // Z_1..Z_T
  std::uint64_t seed = 0;      // substream seed the draws came from

  int horizon() const { return static_cast<int>(prices.size()) - 1; }
};

template <class Real>
struct ImpactState {
  Real a{};  // buy-side persistence A_t
  Real b{};  // sell-side persistence B_t
};

enum class Side { buy, sell };

// S_{t} = S_{t-1} exp((mu - sigma^2/2) dt + sigma sqrt(dt) z)
double gbm_step(double prev_price, const MarketParams& params, double z);

// Largest number of doubles a single simulate_paths call may allocate.
inline constexpr std::size_t kPathStorageBudget = std::size_t{1} << 28;

// Path i uses the substream substream_seed(seed, i).
std::vector<PricePath> simulate_paths(const MarketParams& params, int horizon, int n_paths,
                                      std::uint64_t seed);
PricePath simulate_path(const MarketParams& params, int horizon, std::uint64_t stream_seed);
PricePath constant_path(double price, int horizon);

// Columns: path_id,t,S_t
void write_paths_csv(std::ostream& out, std::span<const PricePath> paths);

namespace detail {
template <class Real>
void require_nonnegative(const Real& x) {
  if constexpr (std::is_same_v<Real, double>) {
    if (!(x >= 0.0)) throw ContractViolation("trade size must be >= 0");
  }
}
}  // namespace detail

// G(x) = S ((1+x)^exponent - 1), evaluated as S expm1(exponent log1p(x)).
template <class Price, class Real>
auto supply_curve(const Price& s, const Real& x, double exponent) {
  detail::require_nonnegative(x);
  return s * expm1(exponent * log1p(x));
}

template <class Price, class Real>
auto supply_curve(Side /*side*/, const Price& s, const Real& x, double exponent) {
  return supply_curve(s, x, exponent);
}

// F(y, x) = G(x + y) - G(y), rewritten as
//   S (1+y)^e expm1(e log1p(x / (1+y)))
// so that e = 1 reduces to S x without cancellation for any y.
template <class Price, class Real>
auto impact_trade(const Price& s, const Real& y, const Real& x, double exponent) {
  detail::require_nonnegative(x);
  detail::require_nonnegative(y);
  const auto one_plus_y = 1.0 + y;
  return s * pow_const(one_plus_y, exponent) * expm1(exponent * log1p(x / one_plus_y));
}

template <class Price, class Real>
auto impact_trade(Side /*side*/, const Price& s, const Real& y, const Real& x, double exponent) {
  return impact_trade(s, y, x, exponent);
}

// Cost F^a of buying x shares against buy-side persistence y.
template <class Price, class Real>
auto buy_cost(const Price& s, const Real& y, const Real& x, const MarketParams& p) {
  return impact_trade(s, y, x, p.alpha);
}

// Revenue F^b of selling x shares against sell-side persistence y.
template <class Price, class Real>
auto sell_revenue(const Price& s, const Real& y, const Real& x, const MarketParams& p) {
  return impact_trade(s, y, x, p.beta);
}

namespace detail {
template <class Real>
Real decay(const Real& carried, DecayRate rate) {
  if (rate.is_infinite()) return constant_like(carried, 0.0);
  if (rate.rate() == 0.0) return carried;
  return rate.retention() * carried;
}
}  // namespace detail

// A' = e^{-lambda_a} (A + dX^+),  B' = e^{-lambda_b} (B + dX^-)
template <class Real>
ImpactState<Real> persistence_step(const ImpactState<Real>& state, const Real& trade_delta,
                                   const MarketParams& params) {
  return {detail::decay<Real>(state.a + pos_part(trade_delta), params.lambda_a),
          detail::decay<Real>(state.b + neg_part(trade_delta), params.lambda_b)};
}

}  // namespace deephedge::market
