#include "funess/params.hpp"

#include <cmath>
#include <string>

#include "funess/error.hpp"

namespace funess {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::MemoryRegime: return "MemoryRegime";
        case ErrorCode::BadIndex: return "BadIndex";
        case ErrorCode::TimeOrder: return "TimeOrder";
        case ErrorCode::ZeroMarginal: return "ZeroMarginal";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::EmptyColumn: return "EmptyColumn";
        case ErrorCode::OutOfWindow: return "OutOfWindow";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::IncommensurateSteps: return "IncommensurateSteps";
        case ErrorCode::MassLeak: return "MassLeak";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace {

void require_probability(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        fail(ErrorCode::OutOfRange, std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
    }
}

}  // namespace

FunessParams::FunessParams(const RawParams& raw)
    : raw_(raw), markov_(std::abs(raw.k + raw.r - 1.0) <= kMarkovTolerance) {}

FunessParams validate_params(const RawParams& raw) {
    require_probability(raw.k, "k");
    require_probability(raw.r, "r");
    require_probability(raw.q1, "q1");
    if (!(raw.alpha > 0.0) || !std::isfinite(raw.alpha)) {
        fail(ErrorCode::OutOfRange, "alpha must be positive and finite, got " + std::to_string(raw.alpha));
    }
    if (!std::isfinite(raw.x1) || !std::isfinite(raw.x2) || !std::isfinite(raw.t0)) {
        fail(ErrorCode::OutOfRange, "x1, x2 and t0 must be finite");
    }
    if (raw.k + raw.r < 1.0 - kMarkovTolerance) {
        fail(ErrorCode::MemoryRegime,
             "k + r must be >= 1 (det of the initial transition matrix can vanish otherwise), got " +
                 std::to_string(raw.k + raw.r));
    }
    return FunessParams(raw);
}

FunessParams FunessParams::with_q1(double q1) const {
    RawParams next = raw_;
    next.q1 = q1;
    return validate_params(next);
}

}  // namespace funess
