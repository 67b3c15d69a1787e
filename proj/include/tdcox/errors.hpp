#pragma once

#include <stdexcept>
#include <string>

namespace tdcox {

/// Bad input: malformed data, invalid parameters, precondition violations.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Floating-point breakdown (overflow, NaN) during evaluation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw ValidationError(msg);
}

} // namespace detail
} // namespace tdcox
