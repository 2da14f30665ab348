#include "funess/kernels.hpp"

#include <cmath>
#include <string>

#include "funess/error.hpp"

namespace funess {

namespace {

void require_state(std::size_t l) {
    if (l > 1) fail(ErrorCode::BadIndex, "state index " + std::to_string(l) + " is not in {0, 1}");
}

void require_lag(double tau) {
    if (!(tau >= 0.0)) fail(ErrorCode::TimeOrder, "time difference must be non-negative");
}

/// Telegraph matrix relaxing to the stationary column (a, 1-a).
Eigen::MatrixXd telegraph(double a, double e) {
    Eigen::MatrixXd m(2, 2);
    m << a + (1.0 - a) * e, a * (1.0 - e),
         (1.0 - a) * (1.0 - e), (1.0 - a) + a * e;
    return m;
}

/// Stationary probability of state 0 under Q^(l).
double stationary_first(std::size_t l, const FunessParams& p) { return l == 0 ? p.k() : 1.0 - p.r(); }

DiagonalWeights weights_from_lambda(std::size_t l, const Eigen::MatrixXd& lambda, const FunessParams& p) {
    const Eigen::Vector2d q(p.q1(), p.q2());
    DiagonalWeights w;
    w.initial_state = l;
    w.weight.resize(2);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double denom = lambda(j, 0) * q(0) + lambda(j, 1) * q(1);
        if (!(denom > 0.0)) {
            fail(ErrorCode::ZeroMarginal, "p(x_" + std::to_string(j) + ", s) = 0; conditioning undefined");
        }
        w.weight[static_cast<std::size_t>(j)] = q(static_cast<Eigen::Index>(l)) * lambda(j, static_cast<Eigen::Index>(l)) / denom;
    }
    return w;
}

ColumnStochasticMatrix assemble(double tau, const Eigen::MatrixXd& lambda_s, const FunessParams& p) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2, 2);
    for (std::size_t l = 0; l < 2; ++l) {
        out += memory_kernel(l, tau, p).matrix() * weights_from_lambda(l, lambda_s, p).as_matrix();
    }
    return ColumnStochasticMatrix(std::move(out));
}

Eigen::Vector2d master_rhs(double t, const Eigen::Vector2d& prob, const FunessParams& p) {
    return generator(t, p).generator() * prob;
}

template <typename OnStep>
void rk4(Eigen::Vector2d state, double t_start, std::size_t steps, double h, const FunessParams& p, OnStep&& on_step) {
    double t = t_start;
    on_step(t, state);
    for (std::size_t i = 0; i < steps; ++i) {
        const Eigen::Vector2d k1 = master_rhs(t, state, p);
        const Eigen::Vector2d k2 = master_rhs(t + 0.5 * h, state + 0.5 * h * k1, p);
        const Eigen::Vector2d k3 = master_rhs(t + 0.5 * h, state + 0.5 * h * k2, p);
        const Eigen::Vector2d k4 = master_rhs(t + h, state + h * k3, p);
        state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t_start + static_cast<double>(i + 1) * h;
        on_step(t, state);
    }
}

std::size_t step_count(const Eigen::Vector2d& q0, double t_end, double step, const FunessParams& p) {
    if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "step must be positive");
    if (step > 0.1 / p.alpha()) {
        fail(ErrorCode::StepTooLarge, "step " + std::to_string(step) + " exceeds 0.1/alpha");
    }
    if (t_end < p.t0()) fail(ErrorCode::TimeOrder, "t_end must be >= t0");
    if (q0.minCoeff() < 0.0 || std::abs(q0.sum() - 1.0) > kColumnSumTolerance) {
        fail(ErrorCode::InvalidArgument, "q0 must lie on the probability simplex");
    }
    return static_cast<std::size_t>(std::ceil((t_end - p.t0()) / step - 1e-9));
}

}  // namespace

ColumnStochasticMatrix memory_kernel(std::size_t initial_state, double tau, const FunessParams& p) {
    require_state(initial_state);
    require_lag(tau);
    return ColumnStochasticMatrix(telegraph(stationary_first(initial_state, p), std::exp(-p.alpha() * tau)));
}

ColumnStochasticMatrix lambda_initial(double tau, const FunessParams& p) {
    require_lag(tau);
    const double e = std::exp(-p.alpha() * tau);
    Eigen::MatrixXd m(2, 2);
    m.col(0) = telegraph(stationary_first(0, p), e).col(0);
    m.col(1) = telegraph(stationary_first(1, p), e).col(1);
    return ColumnStochasticMatrix(std::move(m));
}

double lambda_initial_det(double tau, const FunessParams& p) {
    require_lag(tau);
    const double kr = p.k() + p.r();
    return kr - 1.0 + (2.0 - kr) * std::exp(-p.alpha() * tau);
}

ColumnStochasticMatrix stationary_lambda(const FunessParams& p) {
    Eigen::MatrixXd m(2, 2);
    m << p.k(), 1.0 - p.r(),
         1.0 - p.k(), p.r();
    return ColumnStochasticMatrix(std::move(m));
}

Eigen::Vector2d stationary_marginal(const FunessParams& p) {
    return Eigen::Vector2d(p.k() * p.q1() + (1.0 - p.r()) * p.q2(), (1.0 - p.k()) * p.q1() + p.r() * p.q2());
}

ColumnStochasticMatrix gamma_divisor(double t, double s, const FunessParams& p) {
    if (s < p.t0() || t < s) fail(ErrorCode::TimeOrder, "gamma_divisor requires t0 <= s <= t");
    const double decay_s = std::exp(-p.alpha() * (s - p.t0()));
    const double growth = 1.0 - std::exp(-p.alpha() * (t - s));
    const double det = lambda_initial_det(s - p.t0(), p);
    const double g11 = 1.0 - (1.0 - p.k()) * decay_s * growth / det;
    const double g22 = 1.0 - (1.0 - p.r()) * decay_s * growth / det;
    Eigen::MatrixXd m(2, 2);
    m << g11, 1.0 - g22,
         1.0 - g11, g22;
    return ColumnStochasticMatrix(std::move(m));
}

DiagonalWeights bayes_weights(std::size_t initial_state, double s, const FunessParams& p) {
    require_state(initial_state);
    if (s < p.t0()) fail(ErrorCode::TimeOrder, "bayes_weights requires s >= t0");
    return weights_from_lambda(initial_state, lambda_initial(s - p.t0(), p).matrix(), p);
}

DiagonalWeights bayes_weights_stationary(std::size_t initial_state, const FunessParams& p) {
    require_state(initial_state);
    return weights_from_lambda(initial_state, stationary_lambda(p).matrix(), p);
}

ColumnStochasticMatrix intermediate_lambda(double t, double s, const FunessParams& p) {
    if (s < p.t0() || t < s) fail(ErrorCode::TimeOrder, "intermediate_lambda requires t0 <= s <= t");
    return assemble(t - s, lambda_initial(s - p.t0(), p).matrix(), p);
}

ColumnStochasticMatrix intermediate_lambda_stationary(double tau, const FunessParams& p) {
    require_lag(tau);
    return assemble(tau, stationary_lambda(p).matrix(), p);
}

GeneratorSnapshot generator(double t, const FunessParams& p) {
    if (t < p.t0()) fail(ErrorCode::TimeOrder, "generator requires t >= t0");
    GeneratorSnapshot g;
    const double tau = t - p.t0();
    g.w = p.markov() ? p.alpha() : p.alpha() * std::exp(-p.alpha() * tau) / lambda_initial_det(tau, p);
    g.L << -(1.0 - p.k()), 1.0 - p.r(),
           1.0 - p.k(), -(1.0 - p.r());
    g.W21 = (1.0 - p.k()) * g.w;
    g.W12 = (1.0 - p.r()) * g.w;
    return g;
}

Eigen::Vector2d propagate_master(const Eigen::Vector2d& q0, double t_end, double step, const FunessParams& p) {
    const std::size_t n = step_count(q0, t_end, step, p);
    if (n == 0) return q0;
    Eigen::Vector2d out = q0;
    rk4(q0, p.t0(), n, (t_end - p.t0()) / static_cast<double>(n), p,
        [&out](double, const Eigen::Vector2d& v) { out = v; });
    return out;
}

std::vector<MasterCheckpoint> propagate_master_half_steps(const Eigen::Vector2d& q0, double t_end, double step,
                                                          const FunessParams& p) {
    const std::size_t n = step_count(q0, t_end, step, p);
    std::vector<MasterCheckpoint> out;
    out.reserve(2 * n + 1);
    if (n == 0) {
        out.push_back({p.t0(), q0});
        return out;
    }
    const double h = (t_end - p.t0()) / static_cast<double>(n);
    rk4(q0, p.t0(), 2 * n, 0.5 * h, p,
        [&out](double t, const Eigen::Vector2d& v) { out.push_back({t, v}); });
    return out;
}

double joint_probability(std::span<const double> times, std::span<const std::size_t> states, const FunessParams& p) {
    return joint_probability(make_funess_spec(p), times, states);
}

double check_composition(const FunessParams& p, double t_early, double t_mid, double t_late) {
    return check_composition(make_funess_spec(p), t_early, t_mid, t_late);
}

ConsistencyReport check_consistency(const FunessParams& p, double t, double s) {
    return check_consistency(make_funess_spec(p), t, s);
}

}  // namespace funess
