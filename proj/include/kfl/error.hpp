#pragma once

#include <stdexcept>
#include <string>

namespace kfl {

enum class ErrorKind {
    input,
    config,
    degenerate_metric,
    solvability,
    numerical,
    capability,
    step_size,
    blow_up,
    degeneracy,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace kfl
