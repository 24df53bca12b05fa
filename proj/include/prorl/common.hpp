#ifndef PRORL_COMMON_HPP
#define PRORL_COMMON_HPP

#include <stdexcept>
#include <string>

namespace prorl {

// Precondition / shape violations. Callers get these for programming errors,
// not for bad user input.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Bad configuration or malformed input files. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, diverged training and similar. CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

} // namespace prorl

#endif
