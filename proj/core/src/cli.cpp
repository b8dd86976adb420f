#include "deephedge/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "deephedge/config.hpp"
#include "deephedge/errors.hpp"
#include "deephedge/experiments.hpp"

namespace deephedge::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Options& opts) {
  sub->add_option("--config", opts.config_path, "INI configuration file");
  sub->add_option("--seed", opts.seed, "override run.seed");
  sub->add_option("--out", opts.out, "output directory");
}

config::RunConfig resolve_config(const Options& opts) {
  config::FlatConfig flat;
  if (!opts.config_path.empty()) flat = config::read_flat_file(opts.config_path);
  if (opts.seed) flat["run.seed"] = std::to_string(*opts.seed);
  if (!opts.out.empty()) {
    flat["run.out_dir"] = opts.out;
  } else if (const char* env = std::getenv("DEEPHEDGE_OUT"); env && *env) {
    flat["run.out_dir"] = env;
  }
  return config::from_flat(flat);
}

void report(std::ostream& out, const std::string& command, const fs::path& dir,
            const experiments::RunRecord& record) {
  out << fmt::format("{}: wrote {} files to {}\n", command, record.outputs.size() + 1, dir.string());
}

int run(const std::string& command, const Options& opts, std::ostream& out) {
  const auto cfg = resolve_config(opts);
  const fs::path dir = cfg.out_dir;
  experiments::RunRecord record;
  if (command == "train") {
    const auto r = experiments::run_train(cfg, dir);
    record = r.record;
    if (!r.result.history.empty()) {
      out << fmt::format("train: final rho_hat {:.6g} after {} iterations ({} aborted)\n",
                         r.result.history.back().rho_hat, r.result.history.size(),
                         r.result.aborted_steps);
    }
  } else if (command == "evaluate") {
    const auto r = experiments::run_evaluate(cfg, dir);
    record = r.record;
    for (const auto& rep : r.reports) {
      out << fmt::format("{:<14} rho_hat {:>12.6g}  mean P&L {:>10.4g}  turnover {:.4g}\n", rep.strategy,
                         rep.rho_hat, rep.mean_profit, rep.mean_turnover);
    }
  } else if (command == "policy-surface") {
    const auto r = experiments::run_policy_surface(cfg, dir);
    record = r.record;
    out << fmt::format("policy-surface: {} rows\n", r.rows);
  } else if (command == "path-comparison") {
    const auto r = experiments::run_path_comparison(cfg, dir);
    record = r.record;
    for (const auto& row : r.turnover) {
      out << fmt::format("{:<14} alpha {:<5} beta {:<5} mean turnover {:.4f}\n", row.strategy, row.alpha,
                         row.beta, row.report.mean_turnover);
    }
  } else if (command == "constant-price") {
    const auto r = experiments::run_constant_price(cfg, dir);
    record = r.record;
    for (const auto& row : r.windows) {
      if (row.strategy != "drl") continue;
      out << fmt::format("drl mu {:<7} alpha {:<5} beta {:<5} early mean position {:.4f}\n", row.mu,
                         row.alpha, row.beta, row.mean_position);
    }
  } else {
    const auto r = experiments::run_pin_risk(cfg, dir);
    record = r.record;
    for (const auto& row : r.tails) {
      out << fmt::format("{:<14} lambda {:<20} tail stdev dX {:.4f}\n", row.strategy, row.lambda,
                         row.stdev_dx);
    }
  }
  experiments::write_manifest(dir, cfg, record);
  report(out, command, dir, record);
  return kOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep hedging under market impact"};
  app.name("deephedge");
  app.require_subcommand(1);
  Options opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "train a hedging policy"},
      {"evaluate", "risk report of a trained policy and the delta-hedge baselines"},
      {"policy-surface", "positions over a price grid and portfolio-value levels"},
      {"path-comparison", "positions along one seeded path and test-set turnover"},
      {"constant-price", "positions on a constant price path under two drifts"},
      {"pin-risk", "hourly hedging near maturity under impact persistence"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "deephedge: " << e.what() << '\n';
    return kUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opts, out);
  } catch (const MissingCheckpoint& e) {
    err << "deephedge " << command << ": " << e.what() << '\n';
    return kMissingCheckpoint;
  } catch (const ConfigError& e) {
    err << "deephedge " << command << ": config error: " << e.what() << '\n';
    return kConfig;
  } catch (const TrainingFailed& e) {
    err << "deephedge " << command << ": training failed: " << e.what() << '\n';
    return kTrainingFailed;
  } catch (const std::exception& e) {
    err << "deephedge " << command << ": " << e.what() << '\n';
    return kFailure;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace deephedge::cli
