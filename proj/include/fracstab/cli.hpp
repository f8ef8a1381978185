#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kVersion = "0.1.0";

/// Runs the command line `args` (without the program name). Data go to `out`
/// when no output directory is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracstab::cli
