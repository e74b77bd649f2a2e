#pragma once

#include <stdexcept>
#include <string>

namespace superatom {

// Error classes map 1:1 onto CLI exit codes; library code throws, the CLI
// translates.  invalid_input and config share exit code 2 because a bad
// physical value in a config file is a schema violation from the user's side.
enum class ErrorKind {
    invalid_input,  // precondition or type invariant violated
    config,         // config file schema violation
    numerical,      // integrator breakdown, non-convergence, resolution loss
    io,             // filesystem problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::invalid_input: return 2;
            case ErrorKind::config: return 2;
            case ErrorKind::numerical: return 3;
            case ErrorKind::io: return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& message) {
    throw Error(ErrorKind::invalid_input, message);
}

[[noreturn]] inline void throw_numerical(const std::string& message) {
    throw Error(ErrorKind::numerical, message);
}

[[noreturn]] inline void throw_config(const std::string& message) {
    throw Error(ErrorKind::config, message);
}

[[noreturn]] inline void throw_io(const std::string& message) {
    throw Error(ErrorKind::io, message);
}

}  // namespace superatom
