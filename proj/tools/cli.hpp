#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zz::cli {

/// Runs `zznet <args...>`; machine-readable lines go to `out`, the human
/// summary to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zz::cli
