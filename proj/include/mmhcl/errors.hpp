#pragma once

#include <stdexcept>
#include <string>

namespace mmhcl {

// Zero vectors have no direction; cosine against them is undefined.
// Callers that can tolerate it (zero-padded inputs) check norms first.
struct zero_norm_error : std::runtime_error {
    explicit zero_norm_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (gradients, losses).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A cache or state object does not match the object it is used with.
struct invalid_state_error : std::runtime_error {
    explicit invalid_state_error(const std::string& msg) : std::runtime_error(msg) {}
};

// File ingestion failures: malformed rows, inconsistent dims, bad ids.
struct load_error : std::runtime_error {
    explicit load_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct checkpoint_version_error : std::runtime_error {
    checkpoint_version_error(int file_version, int expected_version)
        : std::runtime_error("checkpoint format version " + std::to_string(file_version) +
                             " not supported, this build reads version " +
                             std::to_string(expected_version)),
          file_version(file_version),
          expected_version(expected_version) {}
    int file_version;
    int expected_version;
};

// Bad run configuration; maps to CLI exit code 1.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mmhcl
