#pragma once

#include <stdexcept>
#include <string>

namespace crtcea {

/// Bad inputs: unreadable files, malformed cells, schema or consistency
/// violations, invalid configuration. CLI exit code 2.
class InputError : public std::runtime_error {
  public:
    explicit InputError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Numerical failures: non-convergence, singular information matrices,
/// loss of positive definiteness during sampling. CLI exit code 3.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace crtcea
