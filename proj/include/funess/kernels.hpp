#pragma once

// Closed-form matrices and generator of the two-state first-event-memory process.
//
// Conditioned on X_t0 = x_l the process is a homogeneous telegraph chain with
// relaxation rate alpha whose stationary column is (k, 1-k) for l = 0 and
// (1-r, r) for l = 1. Everything else follows from those two kernels and q.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "funess/general.hpp"
#include "funess/matrix.hpp"
#include "funess/params.hpp"

namespace funess {

/// Q^(l)(t|s) with lag tau = t - s >= 0. Throws BadIndex for l > 1.
ColumnStochasticMatrix memory_kernel(std::size_t initial_state, double tau, const FunessParams& p);

/// Lambda(t|t0) with tau = t - t0.
ColumnStochasticMatrix lambda_initial(double tau, const FunessParams& p);

/// det Lambda(t|t0) = k + r - 1 + (2 - k - r) e^{-alpha tau}
double lambda_initial_det(double tau, const FunessParams& p);

/// Limit of Lambda(s|t0) as s - t0 -> infinity: [[k, 1-r], [1-k, r]].
ColumnStochasticMatrix stationary_lambda(const FunessParams& p);

/// Stationary marginal p_st = Lambda_st q.
Eigen::Vector2d stationary_marginal(const FunessParams& p);

/// Gamma(t|s) = Lambda(t|t0) Lambda(s|t0)^{-1}, evaluated from its closed-form
/// entries. Throws TimeOrder unless t0 <= s <= t.
ColumnStochasticMatrix gamma_divisor(double t, double s, const FunessParams& p);

DiagonalWeights bayes_weights(std::size_t initial_state, double s, const FunessParams& p);
DiagonalWeights bayes_weights_stationary(std::size_t initial_state, const FunessParams& p);

/// Lambda(t|s) = sum_l Q^(l)(t|s) D^(l)(s|t0). Depends on q and t0.
ColumnStochasticMatrix intermediate_lambda(double t, double s, const FunessParams& p);
/// Same assembly with the stationary weights; depends only on tau = t - s.
ColumnStochasticMatrix intermediate_lambda_stationary(double tau, const FunessParams& p);

struct GeneratorSnapshot {
    double w = 0.0;        ///< scalar rate factor w(t, t0)
    Eigen::Matrix2d L;     ///< constant part, columns sum to zero
    double W12 = 0.0;      ///< rate x2 -> x1
    double W21 = 0.0;      ///< rate x1 -> x2

    Eigen::Matrix2d generator() const { return w * L; }
};

/// Generator of the time-local master equation dp/dt = w(t,t0) L p.
GeneratorSnapshot generator(double t, const FunessParams& p);

/// Fixed-step RK4 for dp/dt = w(t,t0) L p from t0 to t_end.
/// Throws StepTooLarge for step > 0.1 / alpha.
Eigen::Vector2d propagate_master(const Eigen::Vector2d& q0, double t_end, double step, const FunessParams& p);

struct MasterCheckpoint {
    double t;
    Eigen::Vector2d p;
};

/// As propagate_master but keeps the state after every half step, so callers
/// integrating a coupled system with RK4 at `step` have the marginal at every
/// stage time. Both integrators split [t0, t_end] into ceil((t_end-t0)/step)
/// equal steps.
std::vector<MasterCheckpoint> propagate_master_half_steps(const Eigen::Vector2d& q0, double t_end, double step,
                                                          const FunessParams& p);

double joint_probability(std::span<const double> times, std::span<const std::size_t> states, const FunessParams& p);
double check_composition(const FunessParams& p, double t_early, double t_mid, double t_late);
ConsistencyReport check_consistency(const FunessParams& p, double t, double s);

}  // namespace funess
