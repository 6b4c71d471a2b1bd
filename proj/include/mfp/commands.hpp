#pragma once

#include <string>
#include <vector>

namespace mfp {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,          // bad flags or invalid config/scheme files
  kExitIncompatible = 2,   // scheme cannot run on the benchmark, corrupt manifest
  kExitInternal = 3,
};

// Entry point of `mfp`; args excludes the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace mfp
