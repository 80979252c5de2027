#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splice {

enum class ErrorKind {
    dimension,
    asymmetry,
    singular,
    domain,
    degenerate_column,
    input,
    out_of_range,
    inconsistent_params,
    degenerate_residual,
    precondition,
    no_valid_model,
    filesystem,
    config,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

} // namespace splice
