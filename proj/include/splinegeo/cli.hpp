#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace splinegeo {

/// Exit codes: 0 success, 1 usage or validation error, 2 capacity or divergence error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, const char* const* argv);

std::string version_string();

}  // namespace splinegeo
