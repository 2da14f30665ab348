#include "funess/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "funess/error.hpp"
#include "funess/kernels.hpp"

namespace funess {

namespace {

void require_state(std::size_t l) {
    if (l > 1) fail(ErrorCode::BadIndex, "state index must be 0 or 1");
}

/// Sum in ascending order with a long double accumulator.
double sorted_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    long double acc = 0.0L;
    for (double t : terms) acc += t;
    return static_cast<double>(acc);
}

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

ThreePointJoint build_joint(double tau, const Eigen::MatrixXd& lambda_s, const FunessParams& p) {
    ThreePointJoint joint;
    for (std::size_t l = 0; l < 2; ++l) {
        const auto kernel = memory_kernel(l, tau, p);
        for (std::size_t k = 0; k < 2; ++k) {
            const double lead = lambda_s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * p.q(l);
            for (std::size_t j = 0; j < 2; ++j) joint(l, k, j) = kernel(j, k) * lead;
        }
    }
    return joint;
}

}  // namespace

ConditionalMoments stationary_conditional_moments(std::size_t x0, const FunessParams& p) {
    require_state(x0);
    // Stationary column of Q^(x0): (k, 1-k) or (1-r, r).
    const double first = x0 == 0 ? p.k() : 1.0 - p.r();
    const double gap = p.x1() - p.x2();
    ConditionalMoments m;
    m.conditioning_state = x0;
    m.mean = first * p.x1() + (1.0 - first) * p.x2();
    m.variance = gap * gap * first * (1.0 - first);
    return m;
}

double stationary_correlation(double tau, CorrelationMode mode, const FunessParams& p) {
    if (!(tau >= 0.0)) fail(ErrorCode::TimeOrder, "tau must be non-negative");
    const double gap2 = (p.x1() - p.x2()) * (p.x1() - p.x2());
    const double var1 = p.k() * (1.0 - p.k());
    const double var2 = p.r() * (1.0 - p.r());
    const double decay = std::exp(-p.alpha() * tau);
    switch (mode.kind) {
        case CorrelationMode::Kind::Conditional:
            require_state(mode.x0);
            return gap2 * (mode.x0 == 0 ? var1 : var2) * decay;
        case CorrelationMode::Kind::Averaged:
            return gap2 * (var1 * p.q1() + var2 * p.q2()) * decay;
        case CorrelationMode::Kind::GammaSubstituted:
            require_state(mode.x0);
            return gap2 * (mode.x0 == 0 ? var1 : var2);
    }
    return 0.0;
}

double ThreePointJoint::total() const {
    std::vector<double> terms(p.begin(), p.end());
    return sorted_sum(terms);
}

double ThreePointJoint::outer_marginal(std::size_t l, std::size_t j) const {
    return (*this)(l, 0, j) + (*this)(l, 1, j);
}

double ThreePointJoint::leading_marginal(std::size_t l, std::size_t k) const {
    return (*this)(l, k, 0) + (*this)(l, k, 1);
}

ThreePointJoint three_point_joint(double t, double s, const FunessParams& p) {
    if (s < p.t0() || t < s) fail(ErrorCode::TimeOrder, "three_point_joint requires t0 <= s <= t");
    return build_joint(t - s, lambda_initial(s - p.t0(), p).matrix(), p);
}

ThreePointJoint three_point_joint_stationary(double tau, const FunessParams& p) {
    if (!(tau >= 0.0)) fail(ErrorCode::TimeOrder, "tau must be non-negative");
    return build_joint(tau, stationary_lambda(p).matrix(), p);
}

double entropy(std::span<const double> probabilities) {
    std::vector<double> terms;
    terms.reserve(probabilities.size());
    for (double v : probabilities) terms.push_back(-xlogx(v));
    return sorted_sum(terms);
}

double conditional_mutual_information(const ThreePointJoint& joint) {
    double middle[2] = {0.0, 0.0};
    double lead[2][2] = {};
    double tail[2][2] = {};
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 2; ++j) {
                const double v = joint(l, k, j);
                middle[k] += v;
                lead[l][k] += v;
                tail[k][j] += v;
            }
    std::vector<double> terms;
    terms.reserve(8);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 2; ++j) {
                const double v = joint(l, k, j);
                if (v > 0.0) terms.push_back(v * std::log((v * middle[k]) / (lead[l][k] * tail[k][j])));
            }
    return sorted_sum(terms);
}

double weighted_matrix_entropy(const Eigen::MatrixXd& m, const Eigen::VectorXd& w) {
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index k = 0; k < m.cols(); ++k)
        for (Eigen::Index j = 0; j < m.rows(); ++j) terms.push_back(-w(k) * xlogx(m(j, k)));
    return sorted_sum(terms);
}

MiReport conditional_mutual_information(double tau, const FunessParams& p, CmiMethod method) {
    if (!(tau >= 0.0)) fail(ErrorCode::TimeOrder, "tau must be non-negative");
    MiReport report;
    report.tau = tau;
    const Eigen::VectorXd p_st = stationary_marginal(p);
    report.h_lambda = weighted_matrix_entropy(intermediate_lambda_stationary(tau, p).matrix(), p_st);
    const Eigen::MatrixXd lambda_st = stationary_lambda(p).matrix();
    for (std::size_t l = 0; l < 2; ++l) {
        const Eigen::VectorXd r_l = lambda_st.col(static_cast<Eigen::Index>(l));
        report.h_kernels[l] = weighted_matrix_entropy(memory_kernel(l, tau, p).matrix(), r_l);
    }
    if (method == CmiMethod::ClosedForm) {
        std::vector<double> terms{p.q1() * report.h_lambda, p.q2() * report.h_lambda,
                                  -p.q1() * report.h_kernels[0], -p.q2() * report.h_kernels[1]};
        report.cmi = sorted_sum(terms);
    } else {
        report.cmi = conditional_mutual_information(three_point_joint_stationary(tau, p));
    }
    return report;
}

double entropy_difference(double tau, const FunessParams& p) {
    if (!(tau >= 0.0)) fail(ErrorCode::TimeOrder, "tau must be non-negative");
    const Eigen::MatrixXd forward = intermediate_lambda_stationary(tau, p).matrix();  // p(x,t | y,s)
    const Eigen::MatrixXd lambda_st = stationary_lambda(p).matrix();                // p(y,s | z,t0)
    std::vector<double> terms;
    terms.reserve(16);
    for (std::size_t z = 0; z < 2; ++z) {
        const auto kernel = memory_kernel(z, tau, p);
        const double weight = p.q(z);
        for (Eigen::Index y = 0; y < 2; ++y) {
            const double py = lambda_st(y, static_cast<Eigen::Index>(z));
            for (Eigen::Index x = 0; x < 2; ++x) {
                const double exact = kernel(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) * py;
                const double factorized = forward(x, y) * py;
                terms.push_back(-weight * xlogx(exact));
                terms.push_back(weight * xlogx(factorized));
            }
        }
    }
    return sorted_sum(terms);
}

}  // namespace funess
