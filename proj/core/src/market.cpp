#include "deephedge/market.hpp"

#include <fmt/format.h>

#include <ostream>

#include "deephedge/rng.hpp"

namespace deephedge::market {

void MarketParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(mu) || !finite(sigma) || !finite(s0) || !finite(dt) || !finite(r) ||
      !finite(alpha) || !finite(beta) || !finite(a0) || !finite(b0)) {
    throw ConfigError("market parameters must be finite");
  }
  if (sigma < 0.0) throw ConfigError("market.sigma must be >= 0");
  if (dt <= 0.0) throw ConfigError("market.dt must be > 0");
  if (s0 <= 0.0) throw ConfigError("market.s0 must be > 0");
  if (alpha < 1.0) throw ConfigError("market.alpha must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("market.beta must be in (0, 1]");
  if (a0 < 0.0 || b0 < 0.0) throw ConfigError("initial persistence states must be >= 0");
}

double gbm_step(double prev_price, const MarketParams& params, double z) {
  if (!std::isfinite(prev_price) || !std::isfinite(z)) {
    throw ContractViolation("gbm_step: non-finite input");
  }
  if (!(prev_price > 0.0)) throw ContractViolation("gbm_step: price must be > 0");
  const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * params.dt;
  const double vol = params.sigma * std::sqrt(params.dt);
  return prev_price * std::exp(drift + vol * z);
}

PricePath simulate_path(const MarketParams& params, int horizon, std::uint64_t stream_seed) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  PricePath path;
  path.seed = stream_seed;
  path.prices.reserve(static_cast<std::size_t>(horizon) + 1);
  path.draws.reserve(static_cast<std::size_t>(horizon));
  NormalStream rng(stream_seed);
  double s = params.s0;
  path.prices.push_back(s);
  for (int t = 1; t <= horizon; ++t) {
    const double z = rng.normal();
    s = gbm_step(s, params, z);
    path.draws.push_back(z);
    path.prices.push_back(s);
  }
  return path;
}

std::vector<PricePath> simulate_paths(const MarketParams& params, int horizon, int n_paths,
                                      std::uint64_t seed) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
  const std::size_t doubles =
      static_cast<std::size_t>(n_paths) * (2 * static_cast<std::size_t>(horizon) + 1);
  if (doubles > kPathStorageBudget) {
    throw ConfigError(fmt::format("{} paths of {} steps exceed the path storage budget", n_paths,
                                  horizon));
  }
  std::vector<PricePath> paths;
  paths.reserve(static_cast<std::size_t>(n_paths));
  for (int i = 0; i < n_paths; ++i) {
    paths.push_back(simulate_path(params, horizon, substream_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return paths;
}

PricePath constant_path(double price, int horizon) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  PricePath path;
  path.prices.assign(static_cast<std::size_t>(horizon) + 1, price);
  path.draws.assign(static_cast<std::size_t>(horizon), 0.0);
  return path;
}

void write_paths_csv(std::ostream& out, std::span<const PricePath> paths) {
  out << "path_id,t,S_t\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& prices = paths[i].prices;
    for (std::size_t t = 0; t < prices.size(); ++t) {
      out << fmt::format("{},{},{:.17g}\n", i, t, prices[t]);
    }
  }
}

}  // namespace deephedge::market
