#pragma once

#include <array>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "funess/params.hpp"

namespace funess {

struct ConditionalMoments {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t conditioning_state = 0;
};

/// Stationary mean and variance of X_t given X_t0 = x0 (t - t0 -> infinity).
ConditionalMoments stationary_conditional_moments(std::size_t x0, const FunessParams& p);

struct CorrelationMode {
    enum class Kind { Conditional, Averaged, GammaSubstituted };
    Kind kind = Kind::Averaged;
    std::size_t x0 = 0;  ///< used by Conditional and GammaSubstituted

    static CorrelationMode conditional(std::size_t x0) { return {Kind::Conditional, x0}; }
    static CorrelationMode averaged() { return {Kind::Averaged, 0}; }
    static CorrelationMode gamma_substituted(std::size_t x0) { return {Kind::GammaSubstituted, x0}; }
};

/// Stationary two-time correlation C = <X_t X_s | x0> - <X_t | x0>^2 at lag tau.
///
/// Averaged weights the conditional curves by q. GammaSubstituted is the
/// contrast curve obtained when Gamma(t|s) stands in for the memory kernel:
/// constant in tau and equal to the conditional variance.
double stationary_correlation(double tau, CorrelationMode mode, const FunessParams& p);

/// p(X_t0 = l, X_s = k, X_t = j), indexed (l, k, j).
struct ThreePointJoint {
    std::array<double, 8> p{};

    double& operator()(std::size_t l, std::size_t k, std::size_t j) { return p[4 * l + 2 * k + j]; }
    double operator()(std::size_t l, std::size_t k, std::size_t j) const { return p[4 * l + 2 * k + j]; }
    double total() const;
    /// Sum over the middle index: p(X_t0 = l, X_t = j).
    double outer_marginal(std::size_t l, std::size_t j) const;
    /// Sum over the last index: p(X_t0 = l, X_s = k).
    double leading_marginal(std::size_t l, std::size_t k) const;
};

/// Finite-time joint at t0 <= s <= t.
ThreePointJoint three_point_joint(double t, double s, const FunessParams& p);
/// Joint with the s - t0 leg replaced by its stationary limit; tau = t - s.
ThreePointJoint three_point_joint_stationary(double tau, const FunessParams& p);

/// Shannon entropy (nats) of a list of probabilities with 0 ln 0 = 0. Terms
/// are summed in ascending order in extended precision.
double entropy(std::span<const double> probabilities);

/// I(X_t ; X_t0 | X_s) computed directly from a joint table.
double conditional_mutual_information(const ThreePointJoint& joint);

enum class CmiMethod { ClosedForm, BruteForce };

struct MiReport {
    double tau = 0.0;
    double cmi = 0.0;                    ///< nats
    double h_lambda = 0.0;               ///< H(Lambda_st(t|s) | p_st)
    std::array<double, 2> h_kernels{};   ///< H(Q^(l)(t|s) | r^(l))
};

/// Stationary I(X_t ; X_t0 | X_s) at lag tau.
MiReport conditional_mutual_information(double tau, const FunessParams& p, CmiMethod method = CmiMethod::ClosedForm);

/// Averaged entropy difference between p(x,t;y,s|z,t0) and the factorized
/// p(x,t|y,s) p(y,s|z,t0), stationary. Expanding the sums gives
/// H(X_t | X_s, X_t0) - H(X_t | X_s) = -I(X_t ; X_t0 | X_s), so the returned
/// value is <= 0 and its magnitude is the conditional mutual information.
double entropy_difference(double tau, const FunessParams& p);

/// H(M | w) = -sum_{j,k} w_k M_jk ln M_jk for a column-stochastic M.
double weighted_matrix_entropy(const Eigen::MatrixXd& m, const Eigen::VectorXd& w);

}  // namespace funess
