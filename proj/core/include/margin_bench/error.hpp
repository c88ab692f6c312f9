#pragma once

#include <stdexcept>
#include <string>

namespace margin_bench {

enum class ErrorKind {
    usage,    // bad configuration or arguments
    data,     // unreadable or malformed input
    numeric,  // diverged training, non-finite values
};

/// Exception thrown by every module. The message is prefixed with the module
/// name ("dataio: ...") so callers can surface it unchanged.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Process exit status for an error kind (1 usage, 2 data, 3 numeric).
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::numeric: return 3;
    }
    return 1;
}

}  // namespace margin_bench
