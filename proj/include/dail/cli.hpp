#pragma once

namespace dail::cli {

// Full command-line surface; returns the process exit status
// (0 success, 1 runtime failure, 2 bad configuration/usage).
int run(int argc, const char* const* argv);

} // namespace dail::cli
