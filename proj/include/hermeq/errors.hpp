#pragma once

#include <stdexcept>
#include <string>

namespace hermeq {

// Invalid user-facing configuration (bad flags, malformed config files,
// inconsistent dimensions requested by the caller). CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown at run time (non-finite intermediates, singular
// systems, non-convergence). CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hermeq
