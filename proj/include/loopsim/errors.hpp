#pragma once

#include <stdexcept>
#include <string>

namespace loopsim {

/// Raised when a config or input type violates one of its invariants.
struct invalid_config : std::invalid_argument {
    explicit invalid_config(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an operation's precondition on its inputs does not hold
/// (mismatched angles, non-normalized state, zero denominator, ...).
struct precondition_error : std::invalid_argument {
    explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical fit cannot produce an acceptable result.
struct fit_failure : std::runtime_error {
    explicit fit_failure(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a file cannot be opened, read, or written.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace loopsim
