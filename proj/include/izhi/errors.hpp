#pragma once

#include <stdexcept>
#include <string>

namespace izhi {

// Bad inputs or config. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical blow-up during integration. CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, long step_index)
        : std::runtime_error(msg), step(step_index) {}
    long step = -1;  // integration step where the value went non-finite
};

// File read/write failure. CLI maps this to exit code 4.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace izhi
