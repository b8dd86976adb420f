// Acceptance run: one PASS/FAIL line per criterion AC1..AC11.
//
//   deephedge_acceptance CONFIG_DIR WORK_DIR
//
// AC5..AC7 and AC10 train the desk-scale policies from the shipped configs,
// which takes most of the runtime. Exit status is 0 only if every line passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "deephedge/baselines.hpp"
#include "deephedge/config.hpp"
#include "deephedge/experiments.hpp"
#include "deephedge/rng.hpp"
#include "deephedge/trainer.hpp"

namespace {

using namespace deephedge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_configs;
fs::path g_work;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

config::RunConfig shipped(const std::string& name) {
  return config::load_config((g_configs / (name + ".ini")).string());
}

// Trains a shipped config once per acceptance run.
std::map<std::string, std::string> g_trained;
std::map<std::string, double> g_train_seconds;

std::string trained(const std::string& name) {
  if (auto it = g_trained.find(name); it != g_trained.end()) return it->second;
  const auto cfg = shipped(name);
  const auto dir = g_work / "runs" / name;
  std::cerr << fmt::format("  training {} ({} iterations)...", name, cfg.train.iterations) << std::flush;
  const auto t0 = Clock::now();
  experiments::run_train(cfg, dir);
  g_train_seconds[name] = seconds_since(t0);
  std::cerr << fmt::format(" {:.0f} s\n", g_train_seconds[name]);
  return g_trained[name] = (dir / "policy.ckpt").string();
}

// AC1: alpha = beta = 1, lambda = inf.
Outcome ac1() {
  market::MarketParams p;
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> price(1.0, 5000.0), size(0.0, 20.0), pos(-5.0, 5.0),
      cash(-5000.0, 5000.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double s = price(gen), x = size(gen);
    worst = std::max(worst, rel_err(market::impact_trade(market::Side::buy, s, 0.0, x, p.alpha), s * x));
    worst = std::max(worst, rel_err(market::impact_trade(market::Side::sell, s, 0.0, x, p.beta), s * x));
    account::AccountState<double> st;
    st.x = pos(gen);
    st.cash = cash(gen);
    const double want = st.cash + s * st.x;
    const double got = account::portfolio_value(st, s, p);
    worst = std::max(worst, std::abs(got - want) / std::max(std::abs(st.cash) + std::abs(s * st.x), 1.0));
  }
  return {worst < 1e-12, fmt::format("max relative error {:.3g} over 1e5 draws", worst)};
}

// AC2: cash reconstructed from supply-curve differences against the recursion.
Outcome ac2() {
  market::MarketParams p;
  p.alpha = 1.02;
  p.beta = 0.98;
  p.r = 1e-3;
  p.lambda_a = market::DecayRate::per_step(std::log(2.0));
  p.lambda_b = market::DecayRate::per_step(0.3);
  const account::OptionSpec option{1000.0, 12, 77.75};
  const auto G = [](double s, double x, double e) { return s * (std::pow(1.0 + x, e) - 1.0); };
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> act(-1.5, 2.5);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const auto path = market::simulate_path(p, option.horizon, substream_seed(202, n));
    std::vector<double> actions(option.horizon);
    for (auto& a : actions) a = act(gen);
    const auto rec = account::run_episode(
        [&](const account::DecisionPoint& d) { return actions[static_cast<std::size_t>(d.t)]; }, path,
        option, p);
    double a = 0.0, b = 0.0, x = 0.0, cash = option.premium, notional = 0.0;
    const double ra = std::exp(-std::log(2.0)), rb = std::exp(-0.3);
    for (int t = 0; t < option.horizon; ++t) {
      const double s = path.prices[static_cast<std::size_t>(t)];
      const double d = actions[static_cast<std::size_t>(t)] - x;
      const double buy = std::max(d, 0.0), sell = std::max(-d, 0.0);
      const double c = (G(s, a + buy, p.alpha) - G(s, a, p.alpha)) - (G(s, b + sell, p.beta) - G(s, b, p.beta));
      cash = std::exp(p.r) * (cash - c);
      notional += std::abs(c);
      a = ra * (a + buy);
      b = rb * (b + sell);
      x += d;
    }
    const double tol_scale = std::max(1.0, notional / 1000.0);
    worst = std::max(worst, std::abs(rec.cash.back() - cash) / tol_scale);
  }
  return {worst <= 1e-9, fmt::format("max |dM_T| per 1000 turnover {:.3g} over 1000 sequences", worst)};
}

// AC3: autodiff gradient of the batch risk against central differences.
Outcome ac3() {
  market::MarketParams p;
  p.alpha = 1.02;
  p.beta = 0.98;
  p.lambda_a = market::DecayRate::per_step(std::log(2.0));
  p.lambda_b = market::DecayRate::per_step(std::log(2.0));
  const account::OptionSpec option{1000.0, 4, 60.0};
  const double v0 = account::portfolio_value(account::open_account(option.premium, p), p.s0, p);
  const training::PositionClip no_clip{0.0};
  double worst = 0.0;
  int checked = 0, params = 0;
  for (std::uint64_t seed = 1; seed <= 20 && checked < 3; ++seed) {
    auto policy = nn::init_policy({6, 2, 1}, nn::Activation::tanh, seed);
    params = static_cast<int>(policy.theta.size());
    NormalStream rng(substream_seed(seed, 1));
    for (auto& w : policy.theta) w += 0.5 * rng.normal();
    policy.theta.back() += 0.5;
    const auto paths = market::simulate_paths(p, option.horizon, 8, seed * 977);
    ad::Tape tape;
    const nn::TapePolicy tp(tape, policy);
    const auto trace = training::rollout_episode(tape, tp, paths, option, p, v0, no_clip);
    auto risk = training::semi_quadratic_risk(trace.losses);
    if (tape.kink_margin() <= 1e-3) continue;
    const auto grad = tp.flatten(tape.backward(risk));
    ++checked;
    auto rho = [&](const nn::PolicyParams& q) {
      const auto strategy = training::policy_strategy(q, option, no_clip, v0);
      std::vector<double> losses;
      for (const auto& path : paths) losses.push_back(account::run_episode(strategy, path, option, p).loss);
      return training::semi_quadratic_risk(losses);
    };
    const double h = 1e-5;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      auto up = policy, dn = policy;
      up.theta[i] += h;
      dn.theta[i] -= h;
      const double fd = (rho(up) - rho(dn)) / (2 * h);
      worst = std::max(worst, std::abs(grad[i] - fd) / std::max(std::abs(fd), 1e-2));
    }
  }
  return {checked == 3 && worst < 1e-5,
          fmt::format("{} params, T=4, batch 8, {} kink-free draws, max relative error {:.3g}", params,
                      checked, worst)};
}

// AC4: T = 1 frictionless, fixed 1e5-path sample, against a grid search.
Outcome ac4() {
  training::TrainConfig c;
  c.market.mu = 0.0;
  c.market.r = 0.0;
  c.option = {1000.0, 1, 0.0};
  c.option.premium = baselines::default_premium(c.option, c.market);
  c.batch_size = 100000;
  c.fixed_sample = true;
  c.hidden = {8, 8};
  c.lr = 1e-2;
  c.lr_decay_every = 200;
  c.iterations = 600;
  c.seed = 4;
  const auto t0 = Clock::now();
  const auto result = training::train(c);
  const double secs = seconds_since(t0);
  const auto sample = training::training_batch(c, 0);

  const double premium = c.option.premium, s0 = c.market.s0, k = c.option.strike;
  const auto features = training::normalize_state(0, s0, {0.0, 0.0}, 0.0, premium, c.option, premium);
  const double learned = nn::ffnn_forward(result.policy, features);
  double best_x = 0.0, best = INFINITY;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i * 1e-3;
    double acc = 0.0;
    for (const auto& path : sample) {
      const double s1 = path.prices[1];
      const double loss = -(premium + x * (s1 - s0) - std::max(s1 - k, 0.0));
      if (loss > 0.0) acc += loss * loss;
    }
    if (acc < best) best = acc, best_x = x;
  }
  return {std::abs(learned - best_x) <= 0.02,
          fmt::format("learned X_1 = {:.4f}, grid minimizer {:.3f} ({:.0f} s training)", learned, best_x, secs)};
}

// AC5: DRL against both baselines at (1.02, 0.98) on a common 1e5-path test set.
Outcome ac5() {
  const auto t0 = Clock::now();
  auto cfg = shipped("evaluate_a1.02_b0.98");
  cfg.evaluate.checkpoint = trained("train_a1.02_b0.98");
  cfg.evaluate.n_paths = 100000;
  const auto run = experiments::run_evaluate(cfg, g_work / "evaluate");
  const double drl = run.reports[0].rho_hat, bs = run.reports[1].rho_hat, le = run.reports[2].rho_hat;
  return {drl <= std::min(bs, le),
          fmt::format("rho_hat drl {:.2f}, black_scholes {:.2f}, leland {:.2f} ({:.0f} s incl. training)", drl,
                      bs, le, seconds_since(t0))};
}

// AC6: DRL turnover across the impact levels on the common test set.
Outcome ac6() {
  auto cfg = shipped("path_comparison");
  cfg.path_comparison.checkpoints = {trained("train_a1.00_b1.00"), trained("train_a1.01_b0.99"),
                                     trained("train_a1.02_b0.98")};
  cfg.path_comparison.test_paths = 100000;
  const auto run = experiments::run_path_comparison(cfg, g_work / "path_comparison");
  std::vector<double> turnover;
  for (const auto& row : run.turnover) {
    if (row.strategy == "drl") turnover.push_back(row.report.mean_turnover);
  }
  const bool ok = turnover.size() == 3 && turnover[0] > turnover[1] && turnover[1] > turnover[2];
  return {ok, fmt::format("mean DRL turnover {:.4f} > {:.4f} > {:.4f}", turnover.at(0), turnover.at(1),
                          turnover.at(2))};
}

// AC7: early positions on the constant path, positive drift against none.
Outcome ac7() {
  auto cfg = shipped("constant_price");
  cfg.constant_price.checkpoints = {trained("train_a1.00_b1.00"),     trained("train_a1.01_b0.99"),
                                    trained("train_a1.02_b0.98"),     trained("train_a1.00_b1.00_mu0"),
                                    trained("train_a1.01_b0.99_mu0"), trained("train_a1.02_b0.98_mu0")};
  const auto run = experiments::run_constant_price(cfg, g_work / "constant_price");
  std::vector<const experiments::WindowRow*> drl;
  for (const auto& row : run.windows) {
    if (row.strategy == "drl") drl.push_back(&row);
  }
  bool ok = drl.size() == 6;
  std::string detail;
  for (std::size_t i = 0; ok && i < 3; ++i) {
    ok = ok && drl[i]->mean_position > drl[i + 3]->mean_position;
    detail += fmt::format("{}({},{}) {:.4f} vs {:.4f}", i ? "; " : "", drl[i]->alpha, drl[i]->beta,
                          drl[i]->mean_position, drl[i + 3]->mean_position);
  }
  return {ok, "mean X over t<=3, mu>0 vs mu=0: " + detail};
}

// AC8: frictionless delta hedge, daily against monthly rebalancing.
Outcome ac8() {
  auto risk = [](int steps) {
    market::MarketParams p;
    p.dt = 1.0 / steps;
    account::OptionSpec option{1000.0, steps, 0.0};
    option.premium = baselines::default_premium(option, p);
    return training::evaluate(baselines::baseline_strategy({}, option, p), "black_scholes", 20000, 808, p,
                              option)
        .rho_hat;
  };
  const double daily = risk(252), monthly = risk(12);
  return {daily < monthly, fmt::format("rho_hat daily {:.3f} < monthly {:.3f} (20000 paths, seed 808)", daily,
                                       monthly)};
}

// AC9: Leland calibration at beta = 0.99.
Outcome ac9() {
  const double k = baselines::calibrate_k(0.99);
  const double s = baselines::leland_sigma(0.1952, k, 1.0 / 12.0);
  return {std::abs(k - 0.013815) <= 1e-5 && std::abs(s - 0.21344) <= 5e-4,
          fmt::format("k = {:.6f}, leland sigma = {:.5f}", k, s)};
}

// AC10: reported per persistence level; non-monotone is a warning only.
Outcome ac10() {
  auto cfg = shipped("pin_risk");
  cfg.pin_risk.checkpoints = {trained("pin_lambda_inf"), trained("pin_lambda_ln2"), trained("pin_lambda_0")};
  const auto run = experiments::run_pin_risk(cfg, g_work / "pin_risk");
  std::string detail = "DRL stdev dX over last 3 steps:";
  int reported = 0;
  for (const auto& row : run.tails) {
    if (row.strategy != "drl") continue;
    detail += fmt::format(" lambda={} {:.4f}", row.lambda, row.stdev_dx);
    ++reported;
  }
  if (!run.drl_nonincreasing) detail += " WARNING: not nonincreasing from lambda=inf to lambda=0";
  return {reported == 3 && fs::exists(g_work / "pin_risk" / "summary.csv"), detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Compares every CSV and checkpoint of two output directories.
int compare_outputs(const fs::path& a, const fs::path& b, int& files) {
  int differ = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".ckpt") continue;
    ++files;
    if (!fs::exists(b / entry.path().filename()) || slurp(entry.path()) != slurp(b / entry.path().filename())) {
      std::cerr << "  differs: " << entry.path().filename() << "\n";
      ++differ;
    }
  }
  return differ;
}

// AC11: every command twice with the same config and seed.
Outcome ac11() {
  using Runner = std::function<void(const fs::path&)>;
  auto short_train = [](const std::string& name) {
    auto cfg = shipped(name);
    cfg.train.iterations = 30;
    cfg.checkpoint_every = 10;
    return cfg;
  };
  auto ev = shipped("evaluate_a1.02_b0.98");
  ev.evaluate.checkpoint = trained("train_a1.02_b0.98");
  ev.evaluate.n_paths = 5000;
  auto ps = shipped("policy_surface");
  ps.policy_surface.checkpoints = {trained("train_a1.00_b1.00"), trained("train_a1.01_b0.99")};
  auto pc = shipped("path_comparison");
  pc.path_comparison.checkpoints = {trained("train_a1.00_b1.00"), trained("train_a1.01_b0.99"),
                                    trained("train_a1.02_b0.98")};
  pc.path_comparison.test_paths = 5000;
  auto cp = shipped("constant_price");
  cp.constant_price.checkpoints = {trained("train_a1.00_b1.00"),     trained("train_a1.01_b0.99"),
                                   trained("train_a1.02_b0.98"),     trained("train_a1.00_b1.00_mu0"),
                                   trained("train_a1.01_b0.99_mu0"), trained("train_a1.02_b0.98_mu0")};
  auto pr = shipped("pin_risk");
  pr.pin_risk.checkpoints = {trained("pin_lambda_inf"), trained("pin_lambda_ln2"), trained("pin_lambda_0")};

  const std::vector<std::pair<std::string, Runner>> commands = {
      {"train", [&](const fs::path& d) { experiments::run_train(short_train("train_a1.02_b0.98"), d); }},
      {"train-pin", [&](const fs::path& d) { experiments::run_train(short_train("pin_lambda_ln2"), d); }},
      {"evaluate", [&](const fs::path& d) { experiments::run_evaluate(ev, d); }},
      {"policy-surface", [&](const fs::path& d) { experiments::run_policy_surface(ps, d); }},
      {"path-comparison", [&](const fs::path& d) { experiments::run_path_comparison(pc, d); }},
      {"constant-price", [&](const fs::path& d) { experiments::run_constant_price(cp, d); }},
      {"pin-risk", [&](const fs::path& d) { experiments::run_pin_risk(pr, d); }},
  };
  int files = 0, differ = 0;
  for (const auto& [name, runner] : commands) {
    const auto a = g_work / "determinism" / name / "a", b = g_work / "determinism" / name / "b";
    runner(a);
    runner(b);
    differ += compare_outputs(a, b, files);
  }
  return {differ == 0 && files > 0,
          fmt::format("{} commands, {} files compared, {} differ", commands.size(), files, differ)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: deephedge_acceptance CONFIG_DIR WORK_DIR\n";
    return 2;
  }
  g_configs = argv[1];
  g_work = argv[2];
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 frictionless reduction", ac1},   {"AC2 self-financing identity", ac2},
      {"AC3 gradient oracle", ac3},          {"AC4 one-period brute force", ac4},
      {"AC5 risk dominance", ac5},           {"AC6 turnover dampening", ac6},
      {"AC7 drift effect", ac7},             {"AC8 delta-hedge convergence", ac8},
      {"AC9 baseline calibration", ac9},     {"AC10 pin-risk report", ac10},
      {"AC11 determinism", ac11},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} {}: {} [{:.1f} s]", o.pass ? "PASS" : "FAIL", name, o.detail, seconds_since(t0))
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
