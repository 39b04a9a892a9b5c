// Command-line front end. Every subcommand writes its artifacts to disk and
// reports failures through a categorized exit code.

#ifndef ACTDST_CLI_H_
#define ACTDST_CLI_H_

#include <ostream>

namespace actdst {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitUsage = 2,
  kExitMissingFile = 3,
  kExitConfig = 4,
  kExitData = 5,
  kExitDivergence = 6,
  kExitCheckpoint = 7,
};

// Environment variable naming the directory for cached examples.
inline constexpr const char* kCacheDirEnv = "ACTDST_CACHE_DIR";

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace actdst

#endif  // ACTDST_CLI_H_
