#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ace {

/// Exit codes of the `ace` command line.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `ace` tool. `args[0]` is the program name.
/// Subcommands: pretrain, finetune, translate, visualize, gen-data, eval-recon.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ace
