#pragma once

#include <stdexcept>
#include <string>

namespace hystop {

/// Error taxonomy shared by the library and the CLI exit-code mapping:
/// Config/Input/Usage problems map to exit 2, Numeric failures to exit 3.
enum class ErrorKind {
    Dimension,  // shape/extent mismatch between operands
    Config,     // invalid configuration or parameter set
    Input,      // malformed or non-finite input data
    Contract,   // API misuse (e.g. backward on a consumed tape)
    Numeric,    // non-finite values produced during computation
    Io,         // file read/write failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

} // namespace hystop
