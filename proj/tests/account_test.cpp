#include "deephedge/account.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace deephedge::account {
namespace {

using market::DecayRate;
using market::ImpactState;

MarketParams with_impact(double alpha, double beta) {
  MarketParams p;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

TEST(TransactionAmount, Examples) {
  const auto p = with_impact(1.0, 1.0);
  EXPECT_EQ(transaction_amount(1000.0, ImpactState<double>{0.0, 0.0}, 0.0, p), 0.0);
  EXPECT_DOUBLE_EQ(transaction_amount(1000.0, ImpactState<double>{0.0, 0.0}, 0.5, p), 500.0);
  EXPECT_DOUBLE_EQ(transaction_amount(1000.0, ImpactState<double>{0.0, 0.0}, -0.5, p), -500.0);
  const auto q = with_impact(1.02, 0.98);
  EXPECT_NEAR(transaction_amount(1000.0, ImpactState<double>{0.0, 0.0}, 0.3, q), 306.84, 0.01);
}

TEST(Rebalance, NoTradeOnlyDecaysImpact) {
  auto p = with_impact(1.01, 0.99);
  p.lambda_a = DecayRate::per_step(std::log(2.0));
  p.lambda_b = DecayRate::per_step(std::log(2.0));
  AccountState<double> s{3, 0.4, 0.6, 0.2, 123.0, {0.5, 0.25}};
  const auto next = rebalance(s, 1000.0, 0.4, p);
  EXPECT_EQ(next.cash, 123.0);
  EXPECT_EQ(next.x, 0.4);
  EXPECT_EQ(next.t, 4);
  EXPECT_DOUBLE_EQ(next.impact.a, 0.25);
  EXPECT_DOUBLE_EQ(next.impact.b, 0.125);
}

TEST(Rebalance, FrictionlessBuy) {
  const auto p = with_impact(1.0, 1.0);
  const auto open = open_account(50.0, p);
  const auto next = rebalance(open, 1000.0, 0.5, p);
  EXPECT_DOUBLE_EQ(next.cash, 50.0 - 500.0);
  EXPECT_EQ(next.x, 0.5);
  EXPECT_EQ(next.cum_buys, 0.5);
  EXPECT_EQ(next.cum_sells, 0.0);
}

TEST(Rebalance, PersistenceMakesSecondBuyDearer) {
  auto p = with_impact(1.01, 1.0);
  p.lambda_a = DecayRate::per_step(0.0);
  const auto open = open_account(0.0, p);
  const auto first = rebalance_step(open, 1000.0, 0.5, p);
  const auto second = rebalance_step(first.next, 1000.0, 1.0, p);
  // 1000 (1.5^1.01 - 1) and 1000 (2^1.01 - 1.5^1.01)
  EXPECT_NEAR(first.cost, 506.0943, 1e-3);
  EXPECT_NEAR(second.cost, 507.8168, 1e-3);
  EXPECT_GT(second.cost, first.cost);
}

TEST(Rebalance, RejectsNonFinitePosition) {
  const auto p = with_impact(1.0, 1.0);
  EXPECT_THROW(rebalance(open_account(0.0, p), 1000.0, std::nan(""), p), ContractViolation);
}

TEST(ExerciseEvent, Examples) {
  EXPECT_TRUE(exercise_event(1100.0, {0.0, 0.0}, 1000.0, with_impact(1.0, 1.0)));
  EXPECT_FALSE(exercise_event(1000.5, {0.0, 0.0}, 1000.0, with_impact(1.0, 0.999)));
  EXPECT_FALSE(exercise_event(1000.0, {0.0, 0.0}, 1000.0, with_impact(1.0, 1.0)));
}

TEST(Settle, Examples) {
  const auto p = with_impact(1.02, 0.98);
  AccountState<double> hedged{12, 1.0, 1.0, 0.0, -900.0, {0.0, 0.0}};
  // Exercised with one share held: the share is delivered against K.
  EXPECT_DOUBLE_EQ(settle(hedged, 1200.0, 1000.0, p), -900.0 + 1000.0);

  AccountState<double> flat{12, 0.0, 0.0, 0.0, 77.0, {0.0, 0.0}};
  EXPECT_EQ(settle(flat, 900.0, 1000.0, p), 77.0);

  const auto q = with_impact(1.0, 1.0);
  AccountState<double> half{12, 0.5, 0.5, 0.0, 10.0, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(settle(half, 900.0, 1000.0, q), 10.0 + 450.0);
}

TEST(PortfolioValue, Examples) {
  const auto q = with_impact(1.0, 1.0);
  AccountState<double> flat{0, 0.0, 0.0, 0.0, 42.0, {0.0, 0.0}};
  EXPECT_EQ(portfolio_value(flat, 1000.0, q), 42.0);
  AccountState<double> half{0, 0.5, 0.5, 0.0, 100.0, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(portfolio_value(half, 1000.0, q), 600.0);
  AccountState<double> one{0, 1.0, 1.0, 0.0, 0.0, {0.0, 0.0}};
  EXPECT_NEAR(portfolio_value(one, 1000.0, with_impact(1.0, 0.98)), 972.45, 0.02);
  AccountState<double> shortish{0, -0.5, 0.0, 0.5, 600.0, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(portfolio_value(shortish, 1000.0, q), 100.0);
}

struct RandomEpisode {
  std::vector<double> actions;
  market::PricePath path;
};

RandomEpisode random_episode(std::mt19937_64& rng, const MarketParams& p, int horizon) {
  std::normal_distribution<double> pos(0.5, 0.6);
  RandomEpisode e;
  e.path = market::simulate_path(p, horizon, rng());
  for (int t = 0; t < horizon; ++t) e.actions.push_back(pos(rng));
  return e;
}

TEST(SelfFinancing, CashIsPremiumMinusCostsWithZeroRate) {
  auto p = with_impact(1.02, 0.98);
  p.lambda_a = DecayRate::per_step(std::log(2.0));
  p.lambda_b = DecayRate::per_step(0.3);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto e = random_episode(rng, p, 12);
    auto state = open_account(80.0, p);
    double paid = 0.0, turnover = 0.0, prev = 0.0;
    for (int t = 0; t < 12; ++t) {
      const auto step = rebalance_step(state, e.path.prices[t], e.actions[t], p);
      paid += step.cost;
      turnover += std::abs(e.actions[t] - prev) * e.path.prices[t];
      prev = e.actions[t];
      state = step.next;
      EXPECT_NEAR(state.x, state.cum_buys - state.cum_sells, 1e-12 * (1.0 + state.cum_buys));
    }
    EXPECT_NEAR(state.cash, 80.0 - paid, 1e-9 * std::max(1.0, turnover / 1000.0));
  }
}

TEST(SelfFinancing, AccruedCashWithPositiveRate) {
  auto p = with_impact(1.01, 0.99);
  p.r = 0.004;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto e = random_episode(rng, p, 12);
    auto state = open_account(80.0, p);
    double discounted = 80.0 * std::exp(p.r * 12);
    for (int t = 0; t < 12; ++t) {
      const auto step = rebalance_step(state, e.path.prices[t], e.actions[t], p);
      discounted -= step.cost * std::exp(p.r * (12 - t));
      state = step.next;
    }
    EXPECT_NEAR(state.cash, discounted, 1e-9 * 100.0);
  }
}

TEST(Episode, NoTradeUnexercisedIsZeroProfit) {
  const auto p = with_impact(1.02, 0.98);
  OptionSpec option{1000.0, 3, 0.0};
  const auto path = market::constant_path(900.0, 3);
  const auto rec = run_episode([](const DecisionPoint&) { return 0.0; }, path, option, p);
  EXPECT_FALSE(rec.exercised);
  EXPECT_EQ(rec.profit, 0.0);
  EXPECT_EQ(rec.turnover(), 0.0);
}

TEST(Episode, ExerciseForcesTerminalPurchase) {
  const auto p = with_impact(1.02, 0.98);
  OptionSpec option{1000.0, 2, 0.0};
  const auto path = market::constant_path(1100.0, 2);
  const auto rec = run_episode([](const DecisionPoint&) { return 0.0; }, path, option, p);
  EXPECT_TRUE(rec.exercised);
  EXPECT_LT(rec.profit, 0.0);
  EXPECT_DOUBLE_EQ(rec.profit, 1000.0 - market::buy_cost(1100.0, 0.0, 1.0, p));
}

TEST(Episode, ProfitIsNonincreasingInCosts) {
  // Raising alpha raises every buy cost; a buy-only strategy must not profit from it.
  OptionSpec option{1000.0, 4, 50.0};
  const auto path = market::constant_path(950.0, 4);
  auto buy_more = [](const DecisionPoint& d) { return 0.2 * (d.t + 1); };
  double prev = INFINITY;
  for (double alpha : {1.0, 1.01, 1.02, 1.05}) {
    const auto rec = run_episode(buy_more, path, option, with_impact(alpha, 1.0));
    EXPECT_LE(rec.profit, prev);
    prev = rec.profit;
  }
}

TEST(Episode, CsvCarriesProfitOnTerminalRow) {
  const auto p = with_impact(1.0, 1.0);
  OptionSpec option{1000.0, 2, 10.0};
  std::vector<EpisodeRecord> recs{
      run_episode([](const DecisionPoint&) { return 0.5; }, market::constant_path(1000.0, 2), option, p)};
  std::ostringstream out;
  write_episodes_csv(out, recs);
  std::istringstream in(out.str());
  std::string header, row0, row1, row2;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_EQ(header, "path_id,t,S_t,X_next,c_t,M_t,V_t,A_t,B_t,P_X");
  EXPECT_EQ(row0.back(), ',');
  EXPECT_EQ(row2.rfind("0,2,1000,0.5,0,", 0), 0u);
  EXPECT_NE(row2.back(), ',');
}

}  // namespace
}  // namespace deephedge::account
