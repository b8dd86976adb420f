#include "deephedge/account.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

namespace deephedge::account {

void OptionSpec::validate() const {
  if (!(strike > 0.0) || !std::isfinite(strike)) throw ConfigError("option.strike must be > 0");
  if (horizon < 1) throw ConfigError("option.horizon must be >= 1");
  if (!(premium >= 0.0) || !std::isfinite(premium)) throw ConfigError("option.premium must be >= 0");
}

double EpisodeRecord::turnover() const {
  double total = 0.0;
  double prev = 0.0;
  for (double x : actions) {
    total += std::abs(x - prev);
    prev = x;
  }
  return total;
}

double EpisodeRecord::excess_cost() const {
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    total += costs[t] - path.prices[t] * (actions[t] - prev);
    prev = actions[t];
  }
  return total;
}

EpisodeRecord run_episode(const Strategy& strategy, const market::PricePath& path,
                          const OptionSpec& option, const MarketParams& params) {
  const int horizon = option.horizon;
  if (path.horizon() != horizon) {
    throw ContractViolation(
        fmt::format("path has {} steps, option expects {}", path.horizon(), horizon));
  }
  EpisodeRecord rec;
  rec.path = path;
  rec.actions.reserve(static_cast<std::size_t>(horizon));
  rec.costs.reserve(static_cast<std::size_t>(horizon));

  auto state = open_account(option.premium, params);
  const double v0 = portfolio_value(state, path.prices[0], params);
  for (int t = 0; t < horizon; ++t) {
    const double s = path.prices[static_cast<std::size_t>(t)];
    const double v = portfolio_value(state, s, params);
    rec.cash.push_back(state.cash);
    rec.values.push_back(v);
    rec.impact_a.push_back(state.impact.a);
    rec.impact_b.push_back(state.impact.b);

    const double position = strategy(DecisionPoint{t, horizon, s, state, v, v0});
    if (!std::isfinite(position)) throw EpisodeError(t, "strategy returned a non-finite position");
    auto step = rebalance_step(state, s, position, params);
    rec.actions.push_back(position);
    rec.costs.push_back(step.cost);
    state = std::move(step.next);
  }
  const double s_T = path.prices.back();
  rec.cash.push_back(state.cash);
  rec.values.push_back(portfolio_value(state, s_T, params));
  rec.impact_a.push_back(state.impact.a);
  rec.impact_b.push_back(state.impact.b);
  rec.exercised = exercise_event(s_T, state.impact, option.strike, params);
  rec.terminal_cash = state.cash;
  rec.profit = settle(state, s_T, option.strike, params);
  rec.loss = -rec.profit;
  if (!std::isfinite(rec.profit)) throw EpisodeError(horizon, "non-finite settlement");
  return rec;
}

void write_episodes_csv(std::ostream& out, std::span<const EpisodeRecord> episodes) {
  out << "path_id,t,S_t,X_next,c_t,M_t,V_t,A_t,B_t,P_X\n";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    const std::size_t horizon = e.actions.size();
    for (std::size_t t = 0; t < horizon; ++t) {
      out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},\n", i, t,
                         e.path.prices[t], e.actions[t], e.costs[t], e.cash[t], e.values[t],
                         e.impact_a[t], e.impact_b[t]);
    }
    const double x_T = horizon > 0 ? e.actions.back() : 0.0;
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", i,
                       horizon, e.path.prices[horizon], x_T, 0.0, e.cash[horizon],
                       e.values[horizon], e.impact_a[horizon], e.impact_b[horizon], e.profit);
  }
}

}  // namespace deephedge::account
