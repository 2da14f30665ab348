#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace funess {

enum class ErrorCode {
    OutOfRange,
    MemoryRegime,
    BadIndex,
    TimeOrder,
    ZeroMarginal,
    StepTooLarge,
    EmptyColumn,
    OutOfWindow,
    GridMismatch,
    IncommensurateSteps,
    MassLeak,
    InvalidArgument,
    InvariantViolation,
    IoFailure,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace funess
