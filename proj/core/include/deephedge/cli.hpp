#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deephedge::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kConfig = 3,
  kMissingCheckpoint = 4,
  kTrainingFailed = 5,
};

// Subcommands: train, evaluate, policy-surface, path-comparison,
// constant-price, pin-risk. Options: --config FILE, --seed N, --out DIR.
// Without --out the DEEPHEDGE_OUT environment variable, then run.out_dir, is
// used.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace deephedge::cli
