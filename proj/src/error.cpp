#include "dpd/error.hpp"

namespace dpd {

std::string_view category_name(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::ConstraintViolation: return "ConstraintViolation";
    case ErrorCategory::UnbornPlayer: return "UnbornPlayer";
    case ErrorCategory::ZeroRate: return "ZeroRate";
    case ErrorCategory::EmptyGroup: return "EmptyGroup";
    case ErrorCategory::WindowOverflow: return "WindowOverflow";
    case ErrorCategory::NegativeMass: return "NegativeMass";
    case ErrorCategory::NonpositiveDrift: return "NonpositiveDrift";
    case ErrorCategory::ParseError: return "ParseError";
    case ErrorCategory::UnknownKey: return "UnknownKey";
    case ErrorCategory::Io: return "Io";
    }
    return "Unknown";
}

int exit_code(ErrorCategory category) {
    // 1 is left for unexpected failures, 2 for usage errors from the flag parser.
    return 10 + static_cast<int>(category);
}

} // namespace dpd
