#pragma once

#include <cstddef>

namespace funess {

inline constexpr double kMarkovTolerance = 1e-12;
inline constexpr double kClampTolerance = 1e-14;
inline constexpr double kColumnSumTolerance = 1e-12;

/// Unvalidated parameter record, as read from a config file or a caller.
struct RawParams {
    double k = 0.75;
    double r = 0.5;
    double alpha = 2.0;
    double x1 = 1.0;
    double x2 = -1.0;
    double q1 = 0.5;
    double t0 = 0.0;
};

/// Validated parameters of the two-state first-event-memory process.
///
/// Instances only exist through validate_params(), so every holder may rely on
///   0 <= k, r, q1 <= 1,  alpha > 0,  k + r >= 1.
/// States are indexed 0 (value x1) and 1 (value x2).
class FunessParams {
public:
    double k() const noexcept { return raw_.k; }
    double r() const noexcept { return raw_.r; }
    double alpha() const noexcept { return raw_.alpha; }
    double x1() const noexcept { return raw_.x1; }
    double x2() const noexcept { return raw_.x2; }
    double value(std::size_t state) const noexcept { return state == 0 ? raw_.x1 : raw_.x2; }
    double q1() const noexcept { return raw_.q1; }
    double q2() const noexcept { return 1.0 - raw_.q1; }
    double q(std::size_t state) const noexcept { return state == 0 ? q1() : q2(); }
    double t0() const noexcept { return raw_.t0; }

    /// k + r == 1 within kMarkovTolerance.
    bool markov() const noexcept { return markov_; }
    /// x1 == x2: every variance vanishes.
    bool degenerate_statistics() const noexcept { return raw_.x1 == raw_.x2; }

    const RawParams& raw() const noexcept { return raw_; }

    /// Copy with a different initial distribution (re-validated).
    FunessParams with_q1(double q1) const;

private:
    friend FunessParams validate_params(const RawParams& raw);
    explicit FunessParams(const RawParams& raw);

    RawParams raw_;
    bool markov_;
};

/// Throws Error{OutOfRange} or Error{MemoryRegime}.
FunessParams validate_params(const RawParams& raw);

}  // namespace funess
