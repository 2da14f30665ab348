#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "funess/matrix.hpp"
#include "funess/params.hpp"

namespace funess {

/// Q^(l)(t|s): transition matrix between t0 <= s <= t conditioned on X_t0 = l.
using KernelFamily = std::function<ColumnStochasticMatrix(std::size_t initial_state, double t, double s)>;

/// A d-state process whose memory is exactly its first event, described by
/// its one-point memory kernels.
class GeneralProcessSpec {
public:
    /// Throws InvalidArgument when sizes disagree, q is off the simplex, or a
    /// kernel is not the identity at zero lag (checked at s = t = t0).
    GeneralProcessSpec(std::vector<double> values, std::vector<double> q, double t0, KernelFamily kernel);

    std::size_t dim() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& q() const noexcept { return q_; }
    double t0() const noexcept { return t0_; }

    /// Checks the index and t0 <= s <= t before evaluating the family.
    ColumnStochasticMatrix kernel(std::size_t initial_state, double t, double s) const;

private:
    std::vector<double> values_;
    std::vector<double> q_;
    double t0_;
    KernelFamily kernel_;
};

/// Column j of Lambda(t|t0) is column j of Q^(j)(t|t0).
ColumnStochasticMatrix lambda_initial(const GeneralProcessSpec& spec, double t);

/// a_j^(l) = q_l Lambda(s|t0)_jl / sum_k q_k Lambda(s|t0)_jk.
/// Throws ZeroMarginal when p(x_j, s) = 0 for some j.
DiagonalWeights bayes_weights(const GeneralProcessSpec& spec, std::size_t initial_state, double s);

/// The true conditional matrix p(x_j,t | x_k,s) = sum_l Q^(l)(t|s) D^(l)(s).
ColumnStochasticMatrix intermediate_lambda(const GeneralProcessSpec& spec, double t, double s);

/// p(x_{j_m},t_m; ...; x_{j_0},t_0) for times[0] == t0 <= times[1] <= ...
double joint_probability(const GeneralProcessSpec& spec, std::span<const double> times,
                         std::span<const std::size_t> states);

/// max_l || Q^(l)(t|t'') - Q^(l)(t|t') Q^(l)(t'|t'') ||_max for t'' <= t' <= t.
double check_composition(const GeneralProcessSpec& spec, double t_early, double t_mid, double t_late);

struct ConsistencyReport {
    bool consistent = false;
    /// Largest entrywise distance between any two kernels Q^(l)(t|s).
    double max_kernel_distance = 0.0;
    /// Distance between the common kernel and intermediate_lambda; only
    /// meaningful when `consistent`.
    double intermediate_residual = 0.0;
};

ConsistencyReport check_consistency(const GeneralProcessSpec& spec, double t, double s);

/// The two-state process as a GeneralProcessSpec.
GeneralProcessSpec make_funess_spec(const FunessParams& p);

/// Fault fixture: two-state kernels with a lag-squared relaxation, column
/// stochastic and identity at zero lag but not a semigroup.
GeneralProcessSpec make_broken_kernel_spec(const FunessParams& p);

}  // namespace funess
