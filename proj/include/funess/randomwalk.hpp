#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "funess/montecarlo.hpp"
#include "funess/params.hpp"

namespace funess {

/// Random walk S(t) = X_t0 + sum_{k <= N(t)} X_{t_k} with N a Poisson clock.
struct WalkParams {
    FunessParams base;
    double lambda = 1.0;  ///< Poisson rate; 0 gives the frozen walk S(t) = X_t0
};

/// Throws OutOfRange for lambda < 0 or non-finite.
WalkParams make_walk_params(const FunessParams& base, double lambda);

/// How the increment at a Poisson epoch is obtained.
enum class WalkReadout {
    /// X read from the continuously evolving path; increments are correlated.
    Trajectory,
    /// Each increment drawn afresh from the one-time marginal p(., t_k),
    /// independently of everything else. This is the walk whose law obeys the
    /// lattice master equation with marginal-driven gain term.
    IndependentMarginal,
};

struct WalkSample {
    std::vector<double> grid;
    std::vector<double> values;       ///< S on grid
    std::vector<double> jump_epochs;  ///< Poisson event times
    double initial_value = 0.0;       ///< X_t0
};

/// Path and clock come from separate substreams of (seed, stream); the path is
/// the one sample_trajectory(base, horizon, seed, stream) returns.
WalkSample sample_walk(const WalkParams& w, double horizon, std::span<const double> grid, std::uint64_t seed,
                       std::uint64_t stream, WalkReadout readout = WalkReadout::Trajectory);

std::vector<WalkSample> simulate_walk_ensemble(const WalkParams& w, double horizon, std::span<const double> grid,
                                               std::size_t n, std::uint64_t seed, std::size_t threads = 1,
                                               WalkReadout readout = WalkReadout::Trajectory);

struct WalkMoments {
    double mean = 0.0;
    double variance = 0.0;
    double M1 = 0.0;     ///< (1-r) x1 + (1-k) x2
    double M2 = 0.0;     ///< (1-r) x1^2 + (1-k) x2^2
    double d_eff = 0.0;  ///< (lambda/2) (M2 + (k+r-1) <X_t0^2>)
};

/// Moments from the mean and variance ODEs dS/dt = lambda <X_t>,
/// d sigma/dt = lambda <X_t^2>. The mean is exact for either readout; the
/// variance is exact for WalkReadout::IndependentMarginal only.
WalkMoments walk_moments_analytic(double t, const WalkParams& w);

/// (1/2) lambda [M2 + (k+r-1) <X_t0^2>]
double effective_diffusion(const WalkParams& w);

/// Exact Var S(t) for WalkReadout::Trajectory. Conditioned on X_t0 the path is
/// a telegraph chain and the sum is Poisson-mixed, so
///   Var S = E_l[lambda int <X^2> + lambda^2 Var(int X)] + Var_l(E[S | l]).
/// The lambda^2 term is what walk_moments_analytic omits.
double walk_variance_correlated(double t, const WalkParams& w);

/// lim (1/2) d/dt walk_variance_correlated.
double effective_diffusion_correlated(const WalkParams& w);

struct LatticeBounds {
    double z_min = 0.0;
    double z_max = 0.0;
};

/// Probability mass of S(t) on the lattice spacing * {first_index, ...}.
struct LatticeDistribution {
    double time = 0.0;
    double spacing = 1.0;
    std::int64_t first_index = 0;
    std::vector<double> mass;
    double boundary_mass = 0.0;  ///< leaked mass plus mass in the edge cells

    double value(std::size_t i) const { return spacing * static_cast<double>(first_index + static_cast<std::int64_t>(i)); }
    double total() const;
    double mean() const;
    double variance() const;
};

/// Integrates dP(z)/dt = lambda sum_j p(x_j,t) P(z - x_j) - lambda P(z) with
/// RK4 at `step`, the marginal p(x_j, t) coming from propagate_master. The
/// support starts at `bounds` (or an estimate) and doubles until the boundary
/// mass is below 1e-10.
/// Throws IncommensurateSteps when x1/x2 is not a ratio of integers up to 1000,
/// MassLeak when the support would exceed 2^22 cells, and StepTooLarge when
/// step exceeds 0.1/alpha or 0.1/lambda.
LatticeDistribution walk_distribution_oracle(double t, const WalkParams& w, double step = 1e-3,
                                             std::optional<LatticeBounds> bounds = std::nullopt);

struct WalkMomentEstimate {
    EstimateWithError mean;
    EstimateWithError variance;
};

/// Sample mean and variance of S(t). t must be a grid point of every sample
/// (GridMismatch otherwise); needs at least 1000 samples.
WalkMomentEstimate estimate_walk_moments(std::span<const WalkSample> samples, double t);

/// OLS slope of the sample variance against t over grid points in [t_lo, t_hi];
/// the standard error comes from 20 batches of the ensemble.
EstimateWithError fit_variance_slope(std::span<const WalkSample> samples, double t_lo, double t_hi);

}  // namespace funess
