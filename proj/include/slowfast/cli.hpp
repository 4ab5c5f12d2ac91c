#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace slowfast {

constexpr const char* kVersion = "0.1.0";

/// Runs one command line. Returns 0 on success, 2 when an experiment's
/// verdict is FAIL and 1 on any error.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace slowfast
