#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "funess/matrix.hpp"
#include "funess/params.hpp"

namespace funess {

/// One exact sample path on [t0, t0 + horizon], right-continuous.
struct Trajectory {
    std::size_t initial_state = 0;
    std::vector<double> jump_times;     ///< strictly ascending
    std::vector<std::uint8_t> states;   ///< state entered at each jump
    double t0 = 0.0;
    double horizon = 0.0;
};

struct Ensemble {
    FunessParams params;
    double horizon = 0.0;
    std::vector<Trajectory> paths;
};

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Worker count from FUNESS_THREADS, else hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; output placement is the caller's business.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

/// Draws X_t0 from q, then runs the two-state chain conditioned on it. With
/// X_t0 = x1 the holding rates are alpha(1-k) out of x1 and alpha k out of x2;
/// with X_t0 = x2 they are alpha r and alpha(1-r).
Trajectory sample_trajectory(const FunessParams& p, double horizon, std::uint64_t seed, std::uint64_t stream);

/// Trajectory i uses stream i, so the result does not depend on `threads`.
Ensemble simulate_ensemble(const FunessParams& p, double horizon, std::size_t n, std::uint64_t seed,
                           std::size_t threads = 1);

/// State in force at time t. Throws OutOfWindow outside [t0, t0 + horizon].
std::size_t read_state(const Trajectory& traj, double t);

/// Time spent in state 0 during [a, b], divided by b - a.
double occupation_fraction(const Trajectory& traj, double a, double b);

/// Empirical p(x_j, t) for j = 0 with binomial standard error.
EstimateWithError estimate_marginal(const Ensemble& ens, double t);

struct TransitionEstimate {
    ColumnStochasticMatrix matrix;
    Eigen::MatrixXd std_error;
    std::array<std::size_t, 2> column_counts{};
};

/// Empirical p(x_j, t | x_k, s), optionally restricted to one initial state.
/// Throws EmptyColumn when no path occupies x_k at s.
TransitionEstimate estimate_transition(const Ensemble& ens, double t, double s,
                                       std::optional<std::size_t> initial_state = std::nullopt);

struct CorrelationEstimate {
    EstimateWithError estimate;
    bool insufficient_burn_in = false;  ///< s - t0 < 10 / alpha
};

/// Conditional: covariance of (X_s, X_t) among paths started in x0.
/// Averaged (x0 empty): those conditional covariances weighted by the
/// empirical initial-state frequencies. Standard errors by the delta method.
CorrelationEstimate estimate_correlation(const Ensemble& ens, double t, double s,
                                         std::optional<std::size_t> x0 = std::nullopt);

struct TripleCounts {
    std::array<std::size_t, 8> n{};  ///< indexed 4 l + 2 k + j
    std::size_t total = 0;

    std::size_t operator()(std::size_t l, std::size_t k, std::size_t j) const { return n[4 * l + 2 * k + j]; }
};

TripleCounts count_triples(const Ensemble& ens, double s, double t);

struct CmiEstimate {
    EstimateWithError estimate;  ///< Miller-Madow corrected, clamped at 0
    double plugin = 0.0;          ///< uncorrected plug-in value
    TripleCounts counts;
    bool sparse_cell = false;       ///< some (X_t0, X_s) cell has fewer than 30 paths
    bool insufficient_burn_in = false;
};

/// Plug-in I(X_t ; X_t0 | X_s) in nats from triple counts.
CmiEstimate estimate_cmi(const TripleCounts& counts);
CmiEstimate estimate_cmi(const Ensemble& ens, double s, double t);

struct OccupationGroup {
    std::size_t n = 0;
    double mean = 0.0;    ///< mean time-averaged occupation of x1
    double std_error = 0.0;
};

struct ErgodicityReport {
    double burn_in = 0.0;
    double window = 0.0;
    std::array<OccupationGroup, 2> by_initial_state{};
    EstimateWithError final_occupation;  ///< ensemble fraction in x1 at the window end
};

/// Time averages over [t0 + burn_in, t0 + burn_in + window], grouped by X_t0.
/// burn_in defaults to 10 / alpha. Throws InvalidArgument if window < 20/alpha
/// or the paths are too short.
ErgodicityReport ergodicity_diagnostic(const Ensemble& ens, double window, std::optional<double> burn_in = std::nullopt);

}  // namespace funess
