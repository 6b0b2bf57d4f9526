#pragma once

#include <stdexcept>
#include <string>

namespace qaoi {

// Malformed specs, bad parameters, inconsistent inputs. CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Solver / evaluator / simulator failures on valid inputs. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qaoi
