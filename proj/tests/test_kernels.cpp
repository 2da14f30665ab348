#include <cmath>

#include <gtest/gtest.h>

#include "funess/kernels.hpp"
#include "funess/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace funess;
using testing_params::canonical;
using testing_params::make;

namespace {

void expect_matrix_near(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) EXPECT_NEAR(a(i, j), b(i, j), tol) << "entry " << i << "," << j;
}

Eigen::MatrixXd m2(double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

/// Random valid (params, t0 <= s <= t).
struct Draw {
    FunessParams p;
    double s, t;
};

Draw random_draw(RandomStream& rng) {
    RawParams raw;
    raw.k = rng.uniform();
    raw.r = std::min(1.0, 1.0 - raw.k + rng.uniform() * raw.k);
    raw.alpha = 0.05 + 5.0 * rng.uniform();
    raw.q1 = 0.01 + 0.98 * rng.uniform();
    raw.t0 = 6.0 * rng.uniform() - 3.0;
    const double s = raw.t0 + 4.0 * rng.uniform();
    return {validate_params(raw), s, s + 4.0 * rng.uniform()};
}

}  // namespace

// =============================================================================
// Closed-form values
// =============================================================================

TEST(MemoryKernel, IdentityAtZeroLag) {
    for (std::size_t l = 0; l < 2; ++l) expect_matrix_near(memory_kernel(l, 0.0, canonical()).matrix(), Eigen::MatrixXd::Identity(2, 2), 0.0);
}

TEST(MemoryKernel, CanonicalValues) {
    expect_matrix_near(memory_kernel(0, 1.0, canonical()).matrix(), m2(0.783834, 0.648499, 0.216166, 0.351501), 5e-7);
    expect_matrix_near(memory_kernel(1, 1.0, canonical()).matrix(), m2(0.567668, 0.432332, 0.432332, 0.567668), 5e-7);
}

TEST(MemoryKernel, MatchesMatrixExponential) {
    RandomStream rng(11, 0);
    for (int i = 0; i < 200; ++i) {
        const auto d = random_draw(rng);
        for (std::size_t l = 0; l < 2; ++l) {
            expect_matrix_near(memory_kernel(l, d.t - d.s, d.p).matrix(), oracle::kernel_expm(l, d.t - d.s, d.p), 1e-12);
        }
    }
}

TEST(MemoryKernel, BadIndex) {
    EXPECT_FUNESS_ERROR(memory_kernel(2, 1.0, canonical()), ErrorCode::BadIndex);
    EXPECT_FUNESS_ERROR(memory_kernel(0, -1.0, canonical()), ErrorCode::TimeOrder);
}

TEST(LambdaInitial, CanonicalValuesAndDeterminant) {
    const auto lam = lambda_initial(1.0, canonical());
    expect_matrix_near(lam.matrix(), m2(0.783834, 0.432332, 0.216166, 0.567668), 5e-7);
    EXPECT_NEAR(lambda_initial_det(1.0, canonical()), 0.351501, 5e-7);
    EXPECT_NEAR(lam.matrix().determinant(), lambda_initial_det(1.0, canonical()), 1e-14);
}

TEST(LambdaInitial, ColumnIdentity) {
    RandomStream rng(12, 0);
    for (int i = 0; i < 200; ++i) {
        const auto d = random_draw(rng);
        const double tau = d.t - d.p.t0();
        const auto lam = lambda_initial(tau, d.p);
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_EQ(lam.column(j), memory_kernel(j, tau, d.p).column(j));
        }
        expect_matrix_near(lam.matrix(), oracle::lambda_expm(tau, d.p), 1e-12);
    }
}

TEST(LambdaInitial, MarkovCaseAllKernelsAgree) {
    const auto p = make(0.3, 0.7);
    ASSERT_TRUE(p.markov());
    for (double tau : {0.0, 0.1, 1.0, 5.0}) {
        const auto lam = lambda_initial(tau, p).matrix();
        expect_matrix_near(lam, memory_kernel(0, tau, p).matrix(), 1e-15);
        expect_matrix_near(lam, memory_kernel(1, tau, p).matrix(), 1e-15);
    }
}

TEST(StationaryLambda, ClosedForm) {
    expect_matrix_near(stationary_lambda(canonical()).matrix(), m2(0.75, 0.5, 0.25, 0.5), 0.0);
    const auto pst = stationary_marginal(canonical());
    EXPECT_NEAR(pst(0), 0.65, 1e-15);
    EXPECT_NEAR(pst(1), 0.35, 1e-15);
    expect_matrix_near(lambda_initial(200.0, canonical()).matrix(), stationary_lambda(canonical()).matrix(), 1e-15);
}

// =============================================================================
// Gamma divisor and P-divisibility
// =============================================================================

TEST(GammaDivisor, CanonicalEntries) {
    const auto g = gamma_divisor(1.0, 0.5, canonical()).matrix();
    EXPECT_NEAR(g(0, 0), 0.889456, 5e-7);
    EXPECT_NEAR(g(1, 1), 0.778912, 5e-7);
    EXPECT_NEAR(lambda_initial_det(0.5, canonical()), 0.525910, 5e-7);
}

TEST(GammaDivisor, IdentityAtEqualTimes) {
    expect_matrix_near(gamma_divisor(0.7, 0.7, canonical()).matrix(), Eigen::MatrixXd::Identity(2, 2), 1e-15);
}

TEST(GammaDivisor, TimeOrder) {
    EXPECT_FUNESS_ERROR(gamma_divisor(0.5, 1.0, canonical()), ErrorCode::TimeOrder);
    EXPECT_FUNESS_ERROR(gamma_divisor(1.0, -0.5, canonical()), ErrorCode::TimeOrder);
}

TEST(GammaDivisor, EqualsInverseProductRandomized) {
    RandomStream rng(13, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto d = random_draw(rng);
        const auto g = gamma_divisor(d.t, d.s, d.p);
        const auto lt = lambda_initial(d.t - d.p.t0(), d.p);
        const auto ls = lambda_initial(d.s - d.p.t0(), d.p);
        EXPECT_LE(max_abs_diff(lt.matrix(), (g * ls).matrix()), 1e-12);
        EXPECT_GE(g.matrix().minCoeff(), 0.0);
        EXPECT_LE(g.matrix().maxCoeff(), 1.0);
        // Independent route: explicit inverse of the exponential assembly.
        const Eigen::Matrix2d inv = oracle::lambda_expm(d.t - d.p.t0(), d.p) * oracle::lambda_expm(d.s - d.p.t0(), d.p).inverse();
        expect_matrix_near(g.matrix(), inv, 1e-9);
    }
}

TEST(GammaDivisor, MarkovReducesToKernel) {
    const auto p = make(0.5, 0.5);
    expect_matrix_near(gamma_divisor(1.3, 0.4, p).matrix(), memory_kernel(0, 0.9, p).matrix(), 1e-14);
}

// =============================================================================
// Bayes weights and the intermediate matrix
// =============================================================================

TEST(BayesWeights, IndicatorAtOrigin) {
    const auto w = bayes_weights(0, 0.0, canonical());
    EXPECT_DOUBLE_EQ(w.weight[0], 1.0);
    EXPECT_DOUBLE_EQ(w.weight[1], 0.0);
}

TEST(BayesWeights, StationaryCanonical) {
    const auto w = bayes_weights_stationary(0, canonical());
    EXPECT_NEAR(w.weight[0], 0.45 / 0.65, 1e-15);
    EXPECT_NEAR(w.weight[1], 0.15 / 0.35, 1e-15);
    EXPECT_NEAR(w.weight[0], 0.692308, 5e-7);
    EXPECT_NEAR(w.weight[1], 0.428571, 5e-7);
}

TEST(BayesWeights, SumToOneRandomized) {
    RandomStream rng(14, 0);
    for (int i = 0; i < 500; ++i) {
        const auto d = random_draw(rng);
        const auto a = bayes_weights(0, d.s, d.p);
        const auto b = bayes_weights(1, d.s, d.p);
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a.weight[j] + b.weight[j], 1.0, 1e-12);
    }
}

TEST(BayesWeights, ZeroMarginal) {
    // k = 1 with q = (1, 0): x2 is never visited.
    const auto p = make(1.0, 0.5, 2.0, 1.0);
    EXPECT_FUNESS_ERROR(bayes_weights(0, 1.0, p), ErrorCode::ZeroMarginal);
}

TEST(IntermediateLambda, CanonicalValues) {
    const auto lam = intermediate_lambda(1.0, 0.5, canonical()).matrix();
    expect_matrix_near(lam, m2(0.810338, 0.356734, 0.189662, 0.643266), 1e-6);
}

TEST(IntermediateLambda, MatchesBruteForceConditional) {
    RandomStream rng(15, 0);
    for (int i = 0; i < 300; ++i) {
        const auto d = random_draw(rng);
        const auto joint = oracle::three_point(d.s - d.p.t0(), d.t - d.s, d.p);
        const auto lam = intermediate_lambda(d.t, d.s, d.p).matrix();
        for (std::size_t k = 0; k < 2; ++k) {
            double pk = 0.0;
            std::array<double, 2> pjk{};
            for (std::size_t l = 0; l < 2; ++l)
                for (std::size_t j = 0; j < 2; ++j) {
                    pjk[j] += joint[4 * l + 2 * k + j];
                    pk += joint[4 * l + 2 * k + j];
                }
            for (std::size_t j = 0; j < 2; ++j)
                EXPECT_NEAR(lam(static_cast<long>(j), static_cast<long>(k)), pjk[j] / pk, 1e-11);
        }
    }
}

TEST(IntermediateLambda, NonDivisibilityWitness) {
    const auto p = canonical();
    const auto product = intermediate_lambda(1.0, 0.5, p) * lambda_initial(0.5, p);
    const auto direct = lambda_initial(1.0, p);
    EXPECT_NEAR(product.matrix()(0, 0), 0.738655, 1e-6);
    EXPECT_NEAR(direct.matrix()(0, 0), 0.783834, 1e-6);
    EXPECT_NEAR(direct.matrix()(0, 0) - product.matrix()(0, 0), 0.0452, 1e-4);
    EXPECT_GT(max_abs_diff(direct.matrix(), product.matrix()), 1e-3);
}

TEST(IntermediateLambda, MarkovCollapse) {
    const auto p = make(0.6, 0.4, 1.5, 0.3);
    for (double s : {0.2, 1.0}) {
        const double t = s + 0.8;
        const auto lam = intermediate_lambda(t, s, p).matrix();
        EXPECT_LE(max_abs_diff(lam, gamma_divisor(t, s, p).matrix()), 1e-12);
        EXPECT_LE(max_abs_diff(lam, memory_kernel(0, 0.8, p).matrix()), 1e-12);
        EXPECT_LE(max_abs_diff(lam, memory_kernel(1, 0.8, p).matrix()), 1e-12);
    }
}

TEST(IntermediateLambda, DependsOnInitialDistribution) {
    const auto a = intermediate_lambda(1.0, 0.5, canonical().with_q1(0.2)).matrix();
    const auto b = intermediate_lambda(1.0, 0.5, canonical().with_q1(0.8)).matrix();
    EXPECT_GT(max_abs_diff(a, b), 1e-3);
}

TEST(IntermediateLambda, StationaryLimit) {
    const auto p = canonical();
    expect_matrix_near(intermediate_lambda(100.5, 100.0, p).matrix(), intermediate_lambda_stationary(0.5, p).matrix(), 1e-13);
}

TEST(ColumnStochasticity, RandomizedAllMatrices) {
    RandomStream rng(16, 0);
    auto check = [](const ColumnStochasticMatrix& m) {
        for (std::size_t c = 0; c < 2; ++c) {
            EXPECT_NEAR(m.column(c).sum(), 1.0, 1e-12);
            EXPECT_GE(m.column(c).minCoeff(), 0.0);
        }
    };
    for (int i = 0; i < 500; ++i) {
        const auto d = random_draw(rng);
        check(memory_kernel(0, d.t - d.s, d.p));
        check(memory_kernel(1, d.t - d.s, d.p));
        check(lambda_initial(d.t - d.p.t0(), d.p));
        check(gamma_divisor(d.t, d.s, d.p));
        check(intermediate_lambda(d.t, d.s, d.p));
    }
}

// =============================================================================
// Generator and master equation
// =============================================================================

TEST(Generator, CanonicalRate) {
    const auto g = generator(1.0, canonical());
    EXPECT_NEAR(g.w, 2.0 * std::exp(-2.0) / 0.351501, 5e-6);
    EXPECT_NEAR(g.w, 0.770041, 1e-6);
    EXPECT_NEAR(g.W21, 0.25 * g.w, 1e-15);
    EXPECT_NEAR(g.W12, 0.5 * g.w, 1e-15);
    EXPECT_NEAR(g.generator().colwise().sum().cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Generator, MarkovRateIsAlphaExactly) {
    const auto p = make(0.3, 0.7, 2.5);
    for (double t : {0.0, 0.3, 2.0, 40.0}) EXPECT_EQ(generator(t, p).w, 2.5);
}

TEST(Generator, DecaysForNonMarkov) {
    EXPECT_LT(generator(30.0, canonical()).w, 1e-20);
}

TEST(Generator, DerivativeOfClosedForm) {
    // dLambda/dt = w L Lambda, checked by central differences.
    const auto p = canonical();
    for (double t : {0.2, 0.7, 1.5}) {
        const double h = 1e-5;
        const Eigen::MatrixXd deriv = (lambda_initial(t + h, p).matrix() - lambda_initial(t - h, p).matrix()) / (2 * h);
        const Eigen::MatrixXd rhs = generator(t, p).generator() * lambda_initial(t, p).matrix();
        expect_matrix_near(deriv, rhs, 1e-8);
    }
}

TEST(PropagateMaster, CanonicalMarginal) {
    const auto p = canonical();
    const Eigen::Vector2d q0(0.6, 0.4);
    const Eigen::Vector2d out = propagate_master(q0, 1.0, 1e-3, p);
    EXPECT_NEAR(out(0), 0.643233, 1e-6);
    const Eigen::VectorXd exact = lambda_initial(1.0, p) * Eigen::VectorXd(q0);
    EXPECT_NEAR(out(0), exact(0), 1e-8);
    EXPECT_NEAR(out(1), exact(1), 1e-8);
}

TEST(PropagateMaster, NoTimeNoChange) {
    const Eigen::Vector2d q0(0.3, 0.7);
    EXPECT_EQ(propagate_master(q0, 0.0, 1e-3, canonical()), q0);
}

TEST(PropagateMaster, MarkovTelegraphRelaxation) {
    const auto p = make(0.6, 0.4, 2.0);
    const Eigen::Vector2d q0(0.1, 0.9);
    const double t = 1.3;
    const Eigen::Vector2d out = propagate_master(q0, t, 1e-3 / 2.0, p);
    const Eigen::Vector2d qst(0.6, 0.4);
    const Eigen::Vector2d exact = qst + std::exp(-2.0 * t) * (q0 - qst);
    EXPECT_NEAR((out - exact).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST(PropagateMaster, RandomizedAgainstClosedForm) {
    RandomStream rng(17, 0);
    for (int i = 0; i < 30; ++i) {
        const auto d = random_draw(rng);
        const Eigen::Vector2d q0(d.p.q1(), d.p.q2());
        const Eigen::Vector2d out = propagate_master(q0, d.t, 1e-3 / d.p.alpha(), d.p);
        const Eigen::VectorXd exact = lambda_initial(d.t - d.p.t0(), d.p) * Eigen::VectorXd(q0);
        EXPECT_NEAR(out(0), exact(0), 1e-8);
    }
}

TEST(PropagateMaster, StepTooLarge) {
    const Eigen::Vector2d q0(0.5, 0.5);
    EXPECT_FUNESS_ERROR(propagate_master(q0, 1.0, 0.051, canonical()), ErrorCode::StepTooLarge);
}

TEST(PropagateMaster, HalfStepCheckpoints) {
    const auto p = canonical();
    const Eigen::Vector2d q0(0.6, 0.4);
    const auto cps = propagate_master_half_steps(q0, 1.0, 0.01, p);
    ASSERT_EQ(cps.size(), 201u);
    EXPECT_DOUBLE_EQ(cps.front().t, 0.0);
    EXPECT_NEAR(cps.back().t, 1.0, 1e-12);
    for (const auto& cp : cps) {
        const Eigen::VectorXd exact = lambda_initial(cp.t, p) * Eigen::VectorXd(q0);
        EXPECT_NEAR(cp.p(0), exact(0), 1e-9);
    }
}

// =============================================================================
// Joints, composition, consistency
// =============================================================================

TEST(JointProbability, CanonicalTriple) {
    const std::array<double, 3> times{0.0, 0.5, 1.0};
    const std::array<std::size_t, 3> states{0, 0, 0};
    EXPECT_NEAR(joint_probability(times, states, canonical()), 0.6 * 0.841970 * 0.841970, 1e-6);
    EXPECT_NEAR(joint_probability(times, states, canonical()), 0.425348, 1e-6);
}

TEST(JointProbability, OrderZeroAndOne) {
    const auto p = canonical();
    const std::array<double, 1> t0{0.0};
    for (std::size_t j = 0; j < 2; ++j) {
        const std::array<std::size_t, 1> s{j};
        EXPECT_DOUBLE_EQ(joint_probability(t0, s, p), p.q(j));
        double sum = 0.0;
        for (std::size_t j1 = 0; j1 < 2; ++j1) {
            const std::array<double, 2> times{0.0, 0.9};
            const std::array<std::size_t, 2> states{j, j1};
            sum += joint_probability(times, states, p);
        }
        EXPECT_NEAR(sum, p.q(j), 1e-15);
    }
}

TEST(JointProbability, KolmogorovMarginalisation) {
    RandomStream rng(18, 0);
    for (int i = 0; i < 100; ++i) {
        const auto d = random_draw(rng);
        const double u = d.t + 2.0 * rng.uniform();
        const std::array<double, 4> times{d.p.t0(), d.s, d.t, u};
        const std::array<double, 3> reduced{d.p.t0(), d.s, u};
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t c = 0; c < 2; ++c) {
                    double sum = 0.0;
                    for (std::size_t m = 0; m < 2; ++m) {
                        const std::array<std::size_t, 4> st{a, b, m, c};
                        sum += joint_probability(times, st, d.p);
                    }
                    const std::array<std::size_t, 3> st3{a, b, c};
                    EXPECT_NEAR(sum, joint_probability(reduced, st3, d.p), 1e-12);
                }
    }
}

TEST(JointProbability, Errors) {
    const std::array<double, 3> bad_times{0.0, 1.0, 0.5};
    const std::array<std::size_t, 3> states{0, 0, 0};
    EXPECT_FUNESS_ERROR(joint_probability(bad_times, states, canonical()), ErrorCode::TimeOrder);
    const std::array<double, 2> times{0.0, 1.0};
    const std::array<std::size_t, 2> bad_states{0, 2};
    EXPECT_FUNESS_ERROR(joint_probability(times, bad_states, canonical()), ErrorCode::BadIndex);
}

TEST(Composition, SemigroupRandomized) {
    RandomStream rng(19, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto d = random_draw(rng);
        const double mid = d.s + (d.t - d.s) * rng.uniform();
        EXPECT_LE(check_composition(d.p, d.s, mid, d.t), 1e-12);
    }
    EXPECT_EQ(check_composition(canonical(), 0.4, 0.4, 0.4), 0.0);
}

TEST(Composition, BrokenFixtureDetected) {
    const auto spec = make_broken_kernel_spec(canonical());
    EXPECT_GT(check_composition(spec, 0.0, 0.5, 1.0), 1e-3);
}

TEST(Consistency, MarkovAndNonMarkov) {
    const auto markov = check_consistency(make(0.3, 0.7), 1.0, 0.0);
    EXPECT_TRUE(markov.consistent);
    EXPECT_LE(markov.max_kernel_distance, 1e-15);
    EXPECT_LE(markov.intermediate_residual, 1e-12);

    const auto nm = check_consistency(canonical(), 1.0, 0.0);
    EXPECT_FALSE(nm.consistent);
    EXPECT_NEAR(nm.max_kernel_distance, 0.783834 - 0.567668, 1e-6);

    EXPECT_TRUE(check_consistency(canonical(), 0.5, 0.5).consistent);
}
