#pragma once

#include <stdexcept>
#include <string>

namespace mvcca {

// Configuration problems (bad flags, malformed config files). CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with input data (missing files, ragged rows, shape mismatch). CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (singular covariance, non-convergence, divergence). CLI exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mvcca
