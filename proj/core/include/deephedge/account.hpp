#pragma once

// Self-financing hedging account for a short European call.
//
// Timeline: at decision time t the hedger picks X_{t+1}. The trade
// dX = X_{t+1} - X_t is executed at S_t against the current persistence state
// (A_t, B_t), the cash account pays c_t and accrues one period, and then the
// persistence state absorbs the trade and decays once, giving (A_{t+1}, B_{t+1}).
//
// Every function is a template over the numeric type so the same formulas run
// on plain doubles and on the autodiff tape.

#include <functional>
#include <iosfwd>
#include <span>
#include <type_traits>
#include <vector>

#include "deephedge/market.hpp"

namespace deephedge::account {

using market::ImpactState;
using market::MarketParams;

struct OptionSpec {
  double strike = 1000.0;
  int horizon = 12;
  double premium = 0.0;

  void validate() const;
};

template <class Real>
struct AccountState {
  int t = 0;
  Real x{};          // position X_t
  Real cum_buys{};   // X^a_t
  Real cum_sells{};  // X^b_t
  Real cash{};       // M_t, before rebalancing at t
  ImpactState<Real> impact{};
};

template <class Real>
struct RebalanceResult {
  AccountState<Real> next;
  Real cost;  // c_t, positive when cash leaves the account
};

template <class Real>
AccountState<Real> open_account(const Real& premium, const MarketParams& params) {
  const Real zero = constant_like(premium, 0.0);
  return {0, zero, zero, zero, premium,
          {constant_like(premium, params.a0), constant_like(premium, params.b0)}};
}

// c_t = F^a(S_t, A_t, dX^+) - F^b(S_t, B_t, dX^-)
template <class Price, class Real>
Real transaction_amount(const Price& s, const ImpactState<Real>& impact, const Real& trade_delta,
                        const MarketParams& params) {
  return market::buy_cost(s, impact.a, pos_part(trade_delta), params) -
         market::sell_revenue(s, impact.b, neg_part(trade_delta), params);
}

template <class Price, class Real>
RebalanceResult<Real> rebalance_step(const AccountState<Real>& state, const Price& s,
                                     const Real& new_position, const MarketParams& params) {
  if constexpr (std::is_same_v<Real, double>) {
    if (!std::isfinite(new_position)) throw ContractViolation("rebalance: non-finite position");
  }
  const Real delta = new_position - state.x;
  const Real cost = transaction_amount(s, state.impact, delta, params);
  AccountState<Real> next;
  next.t = state.t + 1;
  next.x = new_position;
  next.cum_buys = state.cum_buys + pos_part(delta);
  next.cum_sells = state.cum_sells + neg_part(delta);
  next.cash = params.r == 0.0 ? state.cash - cost : std::exp(params.r) * (state.cash - cost);
  next.impact = market::persistence_step(state.impact, delta, params);
  return {std::move(next), cost};
}

template <class Price, class Real>
AccountState<Real> rebalance(const AccountState<Real>& state, const Price& s,
                             const Real& new_position, const MarketParams& params) {
  return rebalance_step(state, s, new_position, params).next;
}

// 1 when F^b(S_T, B_T, 1) > K, else 0; a constant on the tape.
template <class Price, class Real>
Real exercise_indicator(const Price& s_T, const ImpactState<Real>& impact, double strike,
                        const MarketParams& params) {
  const Real one = constant_like(impact.b, 1.0);
  return greater_than(market::sell_revenue(s_T, impact.b, one, params), strike);
}

inline bool exercise_event(double s_T, const ImpactState<double>& impact, double strike,
                           const MarketParams& params) {
  return exercise_indicator(s_T, impact, strike, params) > 0.5;
}

// P_X = F^b(S_T, B_T, (X_T - 1_E)^+) - F^a(S_T, A_T, (1_E - X_T)^+) + M_T + K 1_E
template <class Price, class Real>
Real settle(const AccountState<Real>& state, const Price& s_T, double strike,
            const MarketParams& params) {
  const Real exercised = exercise_indicator(s_T, state.impact, strike, params);
  return market::sell_revenue(s_T, state.impact.b, pos_part(state.x - exercised), params) -
         market::buy_cost(s_T, state.impact.a, pos_part(exercised - state.x), params) +
         state.cash + strike * exercised;
}

// V_t = M_t + F^b(S_t, B_t, X_t^+) - F^a(S_t, A_t, X_t^-)
template <class Price, class Real>
Real portfolio_value(const AccountState<Real>& state, const Price& s, const MarketParams& params) {
  return state.cash + market::sell_revenue(s, state.impact.b, pos_part(state.x), params) -
         market::buy_cost(s, state.impact.a, neg_part(state.x), params);
}

struct EpisodeRecord {
  market::PricePath path;
  std::vector<double> actions;  // X_1..X_T
  std::vector<double> costs;    // c_0..c_{T-1}
  std::vector<double> cash;     // M_0..M_T
  std::vector<double> values;   // V_0..V_T
  std::vector<double> impact_a; // A_0..A_T
  std::vector<double> impact_b; // B_0..B_T
  bool exercised = false;
  double terminal_cash = 0.0;
  double profit = 0.0;
  double loss = 0.0;

  double turnover() const;
  // Sum of c_t - S_t dX_t: what the rebalances paid over mid-price execution.
  double excess_cost() const;
};

// What a strategy sees when it picks X_{t+1}.
struct DecisionPoint {
  int t;
  int horizon;
  double price;
  const AccountState<double>& state;
  double value;          // V_t
  double initial_value;  // V_0
};

using Strategy = std::function<double(const DecisionPoint&)>;

EpisodeRecord run_episode(const Strategy& strategy, const market::PricePath& path,
                          const OptionSpec& option, const MarketParams& params);

// Columns: path_id,t,S_t,X_next,c_t,M_t,V_t,A_t,B_t,P_X. The row at t = T holds
// the terminal state, X_next = X_T, c_T = 0, and the settlement profit.
void write_episodes_csv(std::ostream& out, std::span<const EpisodeRecord> episodes);

}  // namespace deephedge::account
