#pragma once

#include <stdexcept>
#include <string>

namespace trdrl {

/// User/usage mistakes exit with code 1; runtime aborts with code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Entry point behind the `trdrl` binary; exposed for tests.
int run_cli(int argc, const char* const* argv);

}  // namespace trdrl
