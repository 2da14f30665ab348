#include "funess/general.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "funess/error.hpp"
#include "funess/kernels.hpp"

namespace funess {

GeneralProcessSpec::GeneralProcessSpec(std::vector<double> values, std::vector<double> q, double t0,
                                       KernelFamily kernel)
    : values_(std::move(values)), q_(std::move(q)), t0_(t0), kernel_(std::move(kernel)) {
    if (values_.empty() || values_.size() != q_.size()) {
        fail(ErrorCode::InvalidArgument, "values and q must be non-empty and of equal size");
    }
    if (!kernel_) fail(ErrorCode::InvalidArgument, "kernel family is empty");
    double total = 0.0;
    for (double v : q_) {
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidArgument, "q entries must lie in [0, 1]");
        total += v;
    }
    if (std::abs(total - 1.0) > kColumnSumTolerance) {
        fail(ErrorCode::InvalidArgument, "q must sum to 1");
    }
    const auto d = static_cast<Eigen::Index>(dim());
    for (std::size_t l = 0; l < dim(); ++l) {
        const auto m = kernel_(l, t0_, t0_);
        if (m.dim() != dim() || max_abs_diff(m.matrix(), Eigen::MatrixXd::Identity(d, d)) > kColumnSumTolerance) {
            fail(ErrorCode::InvalidArgument, "kernel " + std::to_string(l) + " is not the identity at zero lag");
        }
    }
}

ColumnStochasticMatrix GeneralProcessSpec::kernel(std::size_t initial_state, double t, double s) const {
    if (initial_state >= dim()) {
        fail(ErrorCode::BadIndex, "initial state " + std::to_string(initial_state) + " out of range");
    }
    if (s < t0_ || t < s) fail(ErrorCode::TimeOrder, "kernel requires t0 <= s <= t");
    auto m = kernel_(initial_state, t, s);
    if (m.dim() != dim()) fail(ErrorCode::InvariantViolation, "kernel returned a matrix of the wrong size");
    return m;
}

ColumnStochasticMatrix lambda_initial(const GeneralProcessSpec& spec, double t) {
    const auto d = static_cast<Eigen::Index>(spec.dim());
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        m.col(j) = spec.kernel(static_cast<std::size_t>(j), t, spec.t0()).matrix().col(j);
    }
    return ColumnStochasticMatrix(std::move(m));
}

namespace {

Eigen::VectorXd marginal_at(const GeneralProcessSpec& spec, const ColumnStochasticMatrix& lambda_s) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(spec.dim()));
    for (std::size_t i = 0; i < spec.dim(); ++i) q(static_cast<Eigen::Index>(i)) = spec.q()[i];
    return lambda_s.matrix() * q;
}

DiagonalWeights weights_from(const GeneralProcessSpec& spec, const ColumnStochasticMatrix& lambda_s,
                             const Eigen::VectorXd& marginal, std::size_t l) {
    DiagonalWeights w;
    w.initial_state = l;
    w.weight.resize(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double denom = marginal(static_cast<Eigen::Index>(j));
        if (!(denom > 0.0)) {
            fail(ErrorCode::ZeroMarginal, "p(x_" + std::to_string(j) + ", s) = 0; conditioning undefined");
        }
        w.weight[j] = spec.q()[l] * lambda_s(j, l) / denom;
    }
    return w;
}

}  // namespace

DiagonalWeights bayes_weights(const GeneralProcessSpec& spec, std::size_t initial_state, double s) {
    if (initial_state >= spec.dim()) fail(ErrorCode::BadIndex, "initial state out of range");
    if (s < spec.t0()) fail(ErrorCode::TimeOrder, "bayes_weights requires s >= t0");
    const auto lambda_s = lambda_initial(spec, s);
    return weights_from(spec, lambda_s, marginal_at(spec, lambda_s), initial_state);
}

ColumnStochasticMatrix intermediate_lambda(const GeneralProcessSpec& spec, double t, double s) {
    if (s < spec.t0() || t < s) fail(ErrorCode::TimeOrder, "intermediate_lambda requires t0 <= s <= t");
    const auto lambda_s = lambda_initial(spec, s);
    const auto marginal = marginal_at(spec, lambda_s);
    const auto d = static_cast<Eigen::Index>(spec.dim());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t l = 0; l < spec.dim(); ++l) {
        out += spec.kernel(l, t, s).matrix() * weights_from(spec, lambda_s, marginal, l).as_matrix();
    }
    return ColumnStochasticMatrix(std::move(out));
}

double joint_probability(const GeneralProcessSpec& spec, std::span<const double> times,
                         std::span<const std::size_t> states) {
    if (times.empty() || times.size() != states.size()) {
        fail(ErrorCode::InvalidArgument, "times and states must be non-empty and of equal length");
    }
    if (times.front() != spec.t0()) fail(ErrorCode::TimeOrder, "times must start at t0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] < times[i - 1]) fail(ErrorCode::TimeOrder, "times must be ascending");
    }
    for (auto s : states) {
        if (s >= spec.dim()) fail(ErrorCode::BadIndex, "state index out of range");
    }
    // Every leg, including the first (Lambda(t1|t0)_{j1 j0} = Q^(j0)(t1|t0)_{j1 j0}),
    // is governed by the kernel of the initial state.
    const std::size_t first = states.front();
    double prob = spec.q()[first];
    for (std::size_t i = 1; i < times.size(); ++i) {
        prob *= spec.kernel(first, times[i], times[i - 1])(states[i], states[i - 1]);
    }
    return prob;
}

double check_composition(const GeneralProcessSpec& spec, double t_early, double t_mid, double t_late) {
    if (t_mid < t_early || t_late < t_mid || t_early < spec.t0()) {
        fail(ErrorCode::TimeOrder, "check_composition requires t0 <= t'' <= t' <= t");
    }
    double worst = 0.0;
    for (std::size_t l = 0; l < spec.dim(); ++l) {
        const auto direct = spec.kernel(l, t_late, t_early);
        const Eigen::MatrixXd composed = spec.kernel(l, t_late, t_mid).matrix() * spec.kernel(l, t_mid, t_early).matrix();
        worst = std::max(worst, max_abs_diff(direct.matrix(), composed));
    }
    return worst;
}

ConsistencyReport check_consistency(const GeneralProcessSpec& spec, double t, double s) {
    std::vector<ColumnStochasticMatrix> kernels;
    kernels.reserve(spec.dim());
    for (std::size_t l = 0; l < spec.dim(); ++l) kernels.push_back(spec.kernel(l, t, s));

    ConsistencyReport report;
    for (std::size_t a = 0; a < kernels.size(); ++a) {
        for (std::size_t b = a + 1; b < kernels.size(); ++b) {
            report.max_kernel_distance =
                std::max(report.max_kernel_distance, max_abs_diff(kernels[a].matrix(), kernels[b].matrix()));
        }
    }
    report.consistent = report.max_kernel_distance <= kMarkovTolerance;
    if (report.consistent) {
        report.intermediate_residual =
            max_abs_diff(kernels.front().matrix(), intermediate_lambda(spec, t, s).matrix());
    }
    return report;
}

GeneralProcessSpec make_funess_spec(const FunessParams& p) {
    return GeneralProcessSpec({p.x1(), p.x2()}, {p.q1(), p.q2()}, p.t0(),
                              [p](std::size_t l, double t, double s) { return memory_kernel(l, t - s, p); });
}

GeneralProcessSpec make_broken_kernel_spec(const FunessParams& p) {
    auto kernel = [p](std::size_t l, double t, double s) {
        const double lag = t - s;
        const double e = std::exp(-p.alpha() * lag * lag);
        const double a = (l == 0) ? p.k() : 1.0 - p.r();
        Eigen::MatrixXd m(2, 2);
        m << a + (1.0 - a) * e, a * (1.0 - e), (1.0 - a) * (1.0 - e), (1.0 - a) + a * e;
        return ColumnStochasticMatrix(std::move(m));
    };
    return GeneralProcessSpec({p.x1(), p.x2()}, {p.q1(), p.q2()}, p.t0(), std::move(kernel));
}

}  // namespace funess
