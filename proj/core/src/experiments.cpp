#include "deephedge/experiments.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "deephedge/baselines.hpp"
#include "deephedge/csv.hpp"
#include "deephedge/errors.hpp"
#include "deephedge/rng.hpp"

namespace deephedge::experiments {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPathSalt = 0x70617468;  // "path"
constexpr std::uint64_t kTestSalt = 0x74657374;  // "test"

std::ofstream open_out(const fs::path& out_dir, const std::string& name, RunRecord& record) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / name, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", (out_dir / name).string()));
  record.outputs.push_back(name);
  return out;
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

bool no_persistence(const market::MarketParams& m) {
  return m.lambda_a.is_infinite() && m.lambda_b.is_infinite();
}

// One required checkpoint: what it must have been trained with.
struct Need {
  std::string label;
  std::string hint;  // training config producing it
  std::function<bool(const config::RunConfig&)> ok;
};

Need impact_need(double alpha, double beta, std::string hint) {
  return {fmt::format("alpha={}, beta={}, no persistence", alpha, beta), std::move(hint),
          [alpha, beta](const config::RunConfig& c) {
            return same(c.train.market.alpha, alpha) && same(c.train.market.beta, beta) &&
                   no_persistence(c.train.market);
          }};
}

std::vector<TrainedPolicy> load_all(const std::vector<std::string>& paths,
                                    const std::vector<Need>& needs, const std::string& key,
                                    RunRecord& record) {
  if (paths.size() != needs.size()) {
    std::string wanted;
    for (const auto& n : needs) wanted += fmt::format("\n  {}", n.label);
    throw ConfigError(fmt::format("{} must list {} checkpoints, in order:{}", key, needs.size(), wanted));
  }
  std::vector<TrainedPolicy> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto p = load_trained(paths[i], fmt::format("a policy trained with {} (deephedge train --config {})",
                                                needs[i].label, needs[i].hint));
    if (!needs[i].ok(p.cfg)) {
      throw ConfigError(fmt::format("{}: checkpoint '{}' was not trained with {}", key, paths[i],
                                    needs[i].label));
    }
    record.checkpoints.emplace_back(p.path, p.sha256);
    out.push_back(std::move(p));
  }
  return out;
}

// All policies must share the price dynamics and contract so they can be run
// on one common path.
void require_common_path(const std::vector<TrainedPolicy>& ps, const std::string& key,
                         bool allow_mu_change) {
  const auto& m0 = ps.front().market();
  const auto& o0 = ps.front().option();
  for (const auto& p : ps) {
    const auto& m = p.market();
    if (!same(m.sigma, m0.sigma) || !same(m.dt, m0.dt) || !same(m.s0, m0.s0) || !same(m.r, m0.r) ||
        (!allow_mu_change && !same(m.mu, m0.mu)) || p.option().horizon != o0.horizon ||
        !same(p.option().strike, o0.strike)) {
      throw ConfigError(fmt::format("{}: checkpoint '{}' disagrees with '{}' on sigma, dt, s0, r, "
                                    "mu, horizon or strike",
                                    key, p.path, ps.front().path));
    }
  }
}

baselines::Baseline leland_for(const market::MarketParams& m) {
  return {baselines::BaselineKind::leland, baselines::calibrate_k(m.beta)};
}

// One row per decision time: prefix cells, then t, S_t, X_t, X_{t+1}, A_t, B_t.
void write_positions(csv::Writer& w, const std::vector<csv::Cell>& prefix,
                     const account::EpisodeRecord& rec) {
  const int horizon = rec.path.horizon();
  for (int t = 0; t < horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    auto cells = prefix;
    cells.insert(cells.end(), {t, rec.path.prices[i], t == 0 ? 0.0 : rec.actions[i - 1], rec.actions[i],
                               rec.impact_a[i], rec.impact_b[i]});
    w.row(cells);
  }
}

double sample_stdev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

account::Strategy TrainedPolicy::strategy() const {
  return training::policy_strategy(policy, option(), cfg.train.clip, v0);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

TrainedPolicy load_trained(const std::string& path, const std::string& needed) {
  if (path.empty() || !fs::exists(path)) {
    throw MissingCheckpoint(fmt::format("missing checkpoint '{}'{}", path,
                                        needed.empty() ? "" : "; required: " + needed));
  }
  const auto ck = nn::load_checkpoint(path);
  if (ck.find("market.alpha") == nullptr) {
    throw ConfigError(fmt::format("checkpoint '{}' carries no training configuration", path));
  }
  TrainedPolicy p;
  p.path = path;
  p.sha256 = sha256_file(path);
  p.cfg = config::from_metadata(ck.metadata);
  p.policy = ck.policy;
  if (p.policy.layers.front() != training::kFeatureCount) {
    throw ConfigError(fmt::format("checkpoint '{}' expects {} features", path, p.policy.layers.front()));
  }
  const auto& m = p.market();
  p.v0 = account::portfolio_value(account::open_account(p.option().premium, m), m.s0, m);
  return p;
}

void write_manifest(const fs::path& out_dir, const config::RunConfig& cfg, const RunRecord& record) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "manifest.ini", std::ios::binary);
  config::write_config(out, cfg);
  out << "\n[manifest]\n";
  out << "command = " << record.command << '\n';
  for (std::size_t i = 0; i < record.checkpoints.size(); ++i) {
    out << fmt::format("checkpoint_{} = {}\n", i + 1, record.checkpoints[i].first);
    out << fmt::format("checkpoint_{}_sha256 = {}\n", i + 1, record.checkpoints[i].second);
  }
  for (std::size_t i = 0; i < record.outputs.size(); ++i) {
    out << fmt::format("output_{} = {}\n", i + 1, record.outputs[i]);
    out << fmt::format("output_{}_sha256 = {}\n", i + 1, sha256_file(out_dir / record.outputs[i]));
  }
}

TrainRun run_train(const config::RunConfig& cfg, const fs::path& out_dir) {
  TrainRun run;
  run.record.command = "train";
  fs::create_directories(out_dir);
  const auto ckpt_path = (out_dir / "policy.ckpt").string();
  const auto meta = config::training_metadata(cfg);
  auto save = [&](const nn::PolicyParams& policy, const nn::AdamState& adam) {
    nn::save_checkpoint(ckpt_path, {policy, adam, cfg.seed, meta});
  };
  run.result = training::train(cfg.train, [&](int done, const nn::PolicyParams& p, const nn::AdamState& a) {
    if (done % cfg.checkpoint_every == 0) save(p, a);
  });
  save(run.result.policy, run.result.adam);
  run.record.outputs.push_back("policy.ckpt");

  auto log = open_out(out_dir, "training_log.csv", run.record);
  csv::Writer w(log, {"iteration", "rho_hat", "grad_norm", "wall_ms"});
  for (const auto& it : run.result.history) {
    w.row({it.iteration, it.rho_hat, it.grad_norm, it.wall_ms});
  }
  return run;
}

EvaluateRun run_evaluate(const config::RunConfig& cfg, const fs::path& out_dir) {
  EvaluateRun run;
  run.record.command = "evaluate";
  const auto trained = load_trained(cfg.evaluate.checkpoint,
                                    "a policy from `deephedge train`; set evaluate.checkpoint");
  run.record.checkpoints.emplace_back(trained.path, trained.sha256);

  market::MarketParams market = trained.market();
  account::OptionSpec option = trained.option();
  if (cfg.evaluate.market_source == "config") {
    if (cfg.train.option.horizon != option.horizon || !same(cfg.train.option.strike, option.strike) ||
        !same(cfg.train.market.dt, market.dt)) {
      throw ConfigError("evaluate.market_source = config: horizon, strike and dt must match the checkpoint");
    }
    market = cfg.train.market;
    option = cfg.train.option;
  }
  const auto test_seed = substream_seed(cfg.seed, 0, kTestSalt);
  const int n = cfg.evaluate.n_paths;
  std::vector<account::EpisodeRecord> kept;
  const auto drl_strategy =
      training::policy_strategy(trained.policy, option, trained.cfg.train.clip, trained.v0);
  run.reports.push_back(training::evaluate(drl_strategy, "drl", n, test_seed, market, option, &kept,
                                           static_cast<std::size_t>(std::max(0, cfg.evaluate.keep_episodes))));
  run.reports.push_back(training::evaluate(baselines::baseline_strategy({}, option, market),
                                           "black_scholes", n, test_seed, market, option));
  run.reports.push_back(training::evaluate(baselines::baseline_strategy(leland_for(market), option, market),
                                           "leland", n, test_seed, market, option));

  auto out = open_out(out_dir, "report.csv", run.record);
  csv::Writer w(out, {"strategy", "alpha", "beta", "mu_annual", "n_paths", "rho_hat", "mean_profit",
                      "stdev_profit", "mean_turnover", "mean_excess_cost"});
  for (const auto& r : run.reports) {
    w.row({r.strategy, market.alpha, market.beta, market.mu, r.n_paths, r.rho_hat, r.mean_profit,
           r.stdev_profit, r.mean_turnover, r.mean_excess_cost});
  }
  auto episodes = open_out(out_dir, "episodes.csv", run.record);
  account::write_episodes_csv(episodes, kept);
  return run;
}

SurfaceRun run_policy_surface(const config::RunConfig& cfg, const fs::path& out_dir) {
  SurfaceRun run;
  run.record.command = "policy-surface";
  const auto& s = cfg.policy_surface;
  const auto ps = load_all(s.checkpoints,
                           {impact_need(1.0, 1.0, "configs/train_a1.00_b1.00.ini"),
                            impact_need(1.01, 0.99, "configs/train_a1.01_b0.99.ini")},
                           "policy_surface.checkpoints", run.record);
  if (s.s_points < 1 || s.v_levels < 1 || !(s.s_min > 0.0) || s.s_max < s.s_min) {
    throw ConfigError("policy_surface: need s_points >= 1, v_levels >= 1 and 0 < s_min <= s_max");
  }
  auto out = open_out(out_dir, "policy_surface.csv", run.record);
  csv::Writer w(out, {"alpha", "beta", "S_t", "V_t", "X_drl", "X_bs", "X_leland"});
  for (const auto& p : ps) {
    const auto& m = p.market();
    const auto& option = p.option();
    if (s.t_step < 0 || s.t_step >= option.horizon) {
      throw ConfigError(fmt::format("policy_surface.t_step must be in [0, {})", option.horizon));
    }
    const auto leland = leland_for(m);
    for (int i = 0; i < s.s_points; ++i) {
      const double price =
          s.s_points == 1 ? s.s_min : s.s_min + (s.s_max - s.s_min) * i / (s.s_points - 1);
      const double x_bs = baselines::baseline_position({}, price, s.t_step, option, m);
      const double x_le = baselines::baseline_position(leland, price, s.t_step, option, m);
      for (int j = 0; j < s.v_levels; ++j) {
        const double frac = s.v_levels == 1 ? s.v_min_fraction
                                            : s.v_min_fraction + (s.v_max_fraction - s.v_min_fraction) *
                                                                     j / (s.v_levels - 1);
        const double v = frac * p.v0;
        const auto features =
            training::normalize_state(s.t_step, price, {0.0, 0.0}, s.x_prev_shares, v, option, p.v0);
        const double x_drl = p.cfg.train.clip.apply(nn::ffnn_forward(p.policy, features));
        w.row({m.alpha, m.beta, price, v, x_drl, x_bs, x_le});
      }
    }
  }
  run.rows = w.rows();
  return run;
}

PathComparisonRun run_path_comparison(const config::RunConfig& cfg, const fs::path& out_dir) {
  PathComparisonRun run;
  run.record.command = "path-comparison";
  const auto ps = load_all(cfg.path_comparison.checkpoints,
                           {impact_need(1.0, 1.0, "configs/train_a1.00_b1.00.ini"),
                            impact_need(1.01, 0.99, "configs/train_a1.01_b0.99.ini"),
                            impact_need(1.02, 0.98, "configs/train_a1.02_b0.98.ini")},
                           "path_comparison.checkpoints", run.record);
  require_common_path(ps, "path_comparison", false);
  const auto& m0 = ps.front().market();
  const int horizon = ps.front().option().horizon;
  const auto path = market::simulate_path(m0, horizon, substream_seed(cfg.seed, 0, kPathSalt));

  {
    auto out = open_out(out_dir, "path.csv", run.record);
    csv::Writer w(out, {"t", "S_t"});
    for (int t = 0; t <= horizon; ++t) w.row({t, path.prices[static_cast<std::size_t>(t)]});
  }
  {
    auto out = open_out(out_dir, "positions.csv", run.record);
    csv::Writer w(out, {"strategy", "alpha", "beta", "t", "S_t", "X_t", "X_next", "A_t", "B_t"});
    for (const auto& p : ps) {
      const auto& m = p.market();
      write_positions(w, {"drl", m.alpha, m.beta}, account::run_episode(p.strategy(), path, p.option(), m));
      write_positions(w, {"black_scholes", m.alpha, m.beta},
                      baselines::baseline_rollout({}, path, p.option(), m));
      write_positions(w, {"leland", m.alpha, m.beta},
                      baselines::baseline_rollout(leland_for(m), path, p.option(), m));
    }
  }
  const auto test_seed = substream_seed(cfg.seed, 0, kTestSalt);
  const int n = cfg.path_comparison.test_paths;
  for (const auto& p : ps) {
    const auto& m = p.market();
    const auto& o = p.option();
    run.turnover.push_back({"drl", m.alpha, m.beta, training::evaluate(p.strategy(), "drl", n, test_seed, m, o)});
    run.turnover.push_back({"black_scholes", m.alpha, m.beta,
                            training::evaluate(baselines::baseline_strategy({}, o, m), "black_scholes", n,
                                               test_seed, m, o)});
    run.turnover.push_back({"leland", m.alpha, m.beta,
                            training::evaluate(baselines::baseline_strategy(leland_for(m), o, m), "leland",
                                               n, test_seed, m, o)});
  }
  auto out = open_out(out_dir, "turnover.csv", run.record);
  csv::Writer w(out, {"strategy", "alpha", "beta", "n_paths", "mean_turnover", "rho_hat", "mean_profit",
                      "mean_excess_cost"});
  for (const auto& row : run.turnover) {
    w.row({row.strategy, row.alpha, row.beta, row.report.n_paths, row.report.mean_turnover,
           row.report.rho_hat, row.report.mean_profit, row.report.mean_excess_cost});
  }
  return run;
}

ConstantPriceRun run_constant_price(const config::RunConfig& cfg, const fs::path& out_dir) {
  ConstantPriceRun run;
  run.record.command = "constant-price";
  auto with_mu = [](Need need, bool positive) {
    auto base = need.ok;
    need.label += positive ? ", mu > 0" : ", mu = 0";
    need.hint.insert(need.hint.size() - 4, positive ? "" : "_mu0");
    need.ok = [base, positive](const config::RunConfig& c) {
      return base(c) && (positive ? c.train.market.mu > 0.0 : c.train.market.mu == 0.0);
    };
    return need;
  };
  std::vector<Need> needs;
  for (bool positive : {true, false}) {
    needs.push_back(with_mu(impact_need(1.0, 1.0, "configs/train_a1.00_b1.00.ini"), positive));
    needs.push_back(with_mu(impact_need(1.01, 0.99, "configs/train_a1.01_b0.99.ini"), positive));
    needs.push_back(with_mu(impact_need(1.02, 0.98, "configs/train_a1.02_b0.98.ini"), positive));
  }
  const auto ps = load_all(cfg.constant_price.checkpoints, needs, "constant_price.checkpoints", run.record);
  require_common_path(ps, "constant_price", true);
  const int horizon = ps.front().option().horizon;
  const auto path = market::constant_path(cfg.constant_price.price, horizon);
  const int last = std::min(cfg.constant_price.window_last_t, horizon - 1);
  if (last < 0) throw ConfigError("constant_price.window_last_t must be >= 0");

  auto window_mean = [&](const account::EpisodeRecord& rec) {
    double sum = 0.0;
    for (int t = 0; t <= last; ++t) sum += rec.actions[static_cast<std::size_t>(t)];
    return sum / (last + 1);
  };
  auto out = open_out(out_dir, "positions.csv", run.record);
  csv::Writer w(out, {"mu_annual", "strategy", "alpha", "beta", "t", "S_t", "X_t", "X_next", "A_t", "B_t"});
  for (const auto& p : ps) {
    const auto& m = p.market();
    const auto& o = p.option();
    const std::vector<std::pair<std::string, account::EpisodeRecord>> recs = {
        {"drl", account::run_episode(p.strategy(), path, o, m)},
        {"black_scholes", baselines::baseline_rollout({}, path, o, m)},
        {"leland", baselines::baseline_rollout(leland_for(m), path, o, m)},
    };
    for (const auto& [name, rec] : recs) {
      write_positions(w, {m.mu, name, m.alpha, m.beta}, rec);
      run.windows.push_back({m.mu, name, m.alpha, m.beta, window_mean(rec)});
    }
  }
  auto summary = open_out(out_dir, "summary.csv", run.record);
  csv::Writer s(summary, {"mu_annual", "strategy", "alpha", "beta", "window_last_t", "mean_position"});
  for (const auto& row : run.windows) {
    s.row({row.mu, row.strategy, row.alpha, row.beta, last, row.mean_position});
  }
  return run;
}

PinRiskRun run_pin_risk(const config::RunConfig& cfg, const fs::path& out_dir) {
  PinRiskRun run;
  run.record.command = "pin-risk";
  auto pin_need = [](std::string label, std::string hint, double lambda) {
    return Need{fmt::format("T=8, dt=1/2016, alpha=1.001, beta=0.999, lambda={}", label), std::move(hint),
                [lambda](const config::RunConfig& c) {
                  const auto& m = c.train.market;
                  const bool impact = same(m.alpha, 1.001) && same(m.beta, 0.999) &&
                                      c.train.option.horizon == 8 && same(m.dt, 1.0 / 2016.0);
                  if (std::isinf(lambda)) return impact && no_persistence(m);
                  return impact && !m.lambda_a.is_infinite() && !m.lambda_b.is_infinite() &&
                         same(m.lambda_a.rate(), lambda) && same(m.lambda_b.rate(), lambda);
                }};
  };
  const auto ps = load_all(cfg.pin_risk.checkpoints,
                           {pin_need("inf", "configs/pin_lambda_inf.ini", INFINITY),
                            pin_need("ln 2", "configs/pin_lambda_ln2.ini", std::log(2.0)),
                            pin_need("0", "configs/pin_lambda_0.ini", 0.0)},
                           "pin_risk.checkpoints", run.record);
  require_common_path(ps, "pin_risk", false);
  const auto& m0 = ps.front().market();
  const auto& o0 = ps.front().option();
  if (!same(m0.s0, o0.strike)) throw ConfigError("pin_risk: the path must start at the strike (s0 = strike)");
  const int horizon = o0.horizon;
  const int tail = cfg.pin_risk.tail_steps;
  if (tail < 2 || tail > horizon) throw ConfigError("pin_risk.tail_steps must be in [2, horizon]");
  const auto path = market::simulate_path(m0, horizon, substream_seed(cfg.seed, 0, kPathSalt));

  auto tail_stdev = [&](const account::EpisodeRecord& rec) {
    std::vector<double> dx;
    for (int t = horizon - tail; t < horizon; ++t) {
      const double prev = t == 0 ? 0.0 : rec.actions[static_cast<std::size_t>(t - 1)];
      dx.push_back(rec.actions[static_cast<std::size_t>(t)] - prev);
    }
    return sample_stdev(dx);
  };
  auto out = open_out(out_dir, "positions.csv", run.record);
  csv::Writer w(out, {"strategy", "lambda_per_step", "t", "S_t", "X_t", "X_next", "A_t", "B_t"});
  for (const auto& p : ps) {
    const auto& m = p.market();
    const auto label = config::to_flat(p.cfg).at("market.lambda_a_per_step");
    auto drl = account::run_episode(p.strategy(), path, p.option(), m);
    const auto bs = baselines::baseline_rollout({}, path, p.option(), m);
    const auto le = baselines::baseline_rollout(leland_for(m), path, p.option(), m);
    write_positions(w, {"drl", label}, drl);
    write_positions(w, {"black_scholes", label}, bs);
    write_positions(w, {"leland", label}, le);
    run.tails.push_back({label, "drl", tail_stdev(drl)});
    run.tails.push_back({label, "black_scholes", tail_stdev(bs)});
    run.tails.push_back({label, "leland", tail_stdev(le)});
    run.drl_episodes.push_back(std::move(drl));
  }
  double prev = INFINITY;
  for (const auto& row : run.tails) {
    if (row.strategy != "drl") continue;
    if (row.stdev_dx > prev) run.drl_nonincreasing = false;
    prev = row.stdev_dx;
  }
  if (!run.drl_nonincreasing) {
    std::cerr << "pin-risk: warning: DRL tail stdev of dX is not nonincreasing from lambda=inf to lambda=0\n";
  }
  auto summary = open_out(out_dir, "summary.csv", run.record);
  csv::Writer s(summary, {"lambda_per_step", "strategy", "tail_steps", "stdev_dx", "drl_nonincreasing"});
  for (const auto& row : run.tails) {
    s.row({row.lambda, row.strategy, tail, row.stdev_dx,
           std::string(run.drl_nonincreasing ? "true" : "false")});
  }
  return run;
}

}  // namespace deephedge::experiments
