#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpd {

enum class ErrorCategory {
    ConstraintViolation,
    UnbornPlayer,
    ZeroRate,
    EmptyGroup,
    WindowOverflow,
    NegativeMass,
    NonpositiveDrift,
    ParseError,
    UnknownKey,
    Io,
};

std::string_view category_name(ErrorCategory category);

// Process exit status used by the command line tool for each category.
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

} // namespace dpd
