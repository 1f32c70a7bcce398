#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jschur {

/// Command-line entry point. args excludes the program name.
/// Exit codes: 0 success, 1 usage or I/O error, 2 numerical error (the error
/// name is printed on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jschur
