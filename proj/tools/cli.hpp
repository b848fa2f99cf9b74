#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grassdm::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumerical = 4 };

/// Runs one command. `args` excludes the program name. Human-readable
/// progress goes to `out`; error JSON and log lines go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace grassdm::cli
