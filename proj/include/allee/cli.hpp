#pragma once

namespace allee::cli {

// Full command-line entry point. Returns the process exit code:
//   0  success
//   2  invalid arguments / configuration (including refused preconditions)
//   3  runtime failure (I/O, worker errors, failed invariant checks)
int main(int argc, const char* const* argv);

}  // namespace allee::cli
