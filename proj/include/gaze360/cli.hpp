#pragma once

#include <ostream>
#include <string_view>

namespace gaze360 {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Command-line front end. Exit codes: 0 success, 1 data error (a JSON
/// object with an "error" field is written to `err`), 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gaze360
