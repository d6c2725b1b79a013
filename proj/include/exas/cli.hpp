#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace exas::cli {

// Exit codes of `exasctl gate`.
inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_timeout = 2;
inline constexpr int exit_error = 3;

// Runs one exasctl invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace exas::cli
