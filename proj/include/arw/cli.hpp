#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "arw/config.hpp"

namespace arw::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2, kCheckFailed = 3 };

/// Entry point of the `arw` tool. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Usage text listing every subcommand and key.
std::string usage();

}  // namespace arw::cli
