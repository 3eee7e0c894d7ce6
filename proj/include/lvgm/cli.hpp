#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lvgm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kInfeasible = 2,
  kNotConverged = 3,
};

/**
 * Runs one `lvgm` command. `args` holds the full argument vector including
 * the program name. Subcommands: synth, calibrate, decompose, compare,
 * replay. Every command except replay writes run_manifest.json into its
 * --out directory, also on failure once the directory is known.
 */
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace lvgm::cli
