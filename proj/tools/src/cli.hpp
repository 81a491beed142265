// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace faa::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kNumerical = 3,
  kGradcheckFailed = 4,
};

/// Parses argv and runs one subcommand (train, gradcheck, ablate, analyze).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faa::cli
