#pragma once

#include <string>
#include <vector>

namespace offmix {

/// Entry point shared by the binary and the tests: runs one subcommand
/// (stats, prep, translit, translate, train, eval, predict, audit) and
/// returns the process exit status. Errors are printed to stderr as a
/// one-line JSON object with a module-qualified code.
int run_command(const std::vector<std::string>& args);

}  // namespace offmix
