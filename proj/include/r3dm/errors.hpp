#pragma once

#include <stdexcept>
#include <string>

namespace r3dm {

// Exit codes used by the CLI; library code throws the matching exception.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_io = 3,
    exit_numerical = 4,
    exit_external_model = 5,
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidInputError : std::runtime_error {
    explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ExternalModelError : std::runtime_error {
    explicit ExternalModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace r3dm
