#include <cmath>

#include <gtest/gtest.h>

#include "funess/kernels.hpp"
#include "funess/rng.hpp"
#include "funess/statistics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace funess;
using testing_params::canonical;
using testing_params::make;

namespace {

FunessParams random_params(RandomStream& rng) {
    RawParams raw;
    raw.k = rng.uniform();
    raw.r = std::min(1.0, 1.0 - raw.k + rng.uniform() * raw.k);
    raw.alpha = 0.1 + 4.0 * rng.uniform();
    raw.q1 = rng.uniform();
    raw.x1 = 4.0 * rng.uniform() - 2.0;
    raw.x2 = 4.0 * rng.uniform() - 2.0;
    return validate_params(raw);
}

}  // namespace

// =============================================================================
// Conditional moments and correlation
// =============================================================================

TEST(ConditionalMoments, Canonical) {
    const auto m = stationary_conditional_moments(0, canonical());
    EXPECT_NEAR(m.mean, 0.5, 1e-15);
    EXPECT_NEAR(m.variance, 0.75, 1e-15);
    const auto m2 = stationary_conditional_moments(1, canonical());
    EXPECT_NEAR(m2.mean, 0.0, 1e-15);
    EXPECT_NEAR(m2.variance, 1.0, 1e-15);
    EXPECT_FUNESS_ERROR(stationary_conditional_moments(2, canonical()), ErrorCode::BadIndex);
}

TEST(ConditionalMoments, MarkovIndependentOfInitialState) {
    const auto p = make(0.3, 0.7, 2.0, 0.5, 2.0, -1.0);
    const auto a = stationary_conditional_moments(0, p);
    const auto b = stationary_conditional_moments(1, p);
    EXPECT_NEAR(a.mean, 0.3 * 2.0 + 0.7 * -1.0, 1e-15);
    EXPECT_NEAR(a.mean, b.mean, 1e-15);
    EXPECT_NEAR(a.variance, 0.3 * 0.7 * 9.0, 1e-14);
    EXPECT_NEAR(a.variance, b.variance, 1e-14);
}

TEST(ConditionalMoments, EqualWeightsShareVariance) {
    const auto p = make(0.75, 0.75);
    EXPECT_NEAR(stationary_conditional_moments(0, p).variance, stationary_conditional_moments(1, p).variance, 1e-15);
    EXPECT_NE(stationary_conditional_moments(0, p).mean, stationary_conditional_moments(1, p).mean);
}

TEST(ConditionalMoments, DegenerateValues) {
    const auto p = make(0.75, 0.5, 2.0, 0.5, 3.0, 3.0);
    EXPECT_EQ(stationary_conditional_moments(0, p).variance, 0.0);
    EXPECT_EQ(stationary_correlation(0.2, CorrelationMode::averaged(), p), 0.0);
}

TEST(Correlation, CanonicalAveraged) {
    const auto p = canonical();
    EXPECT_NEAR(stationary_correlation(0.0, CorrelationMode::averaged(), p), 0.85, 1e-15);
    EXPECT_NEAR(stationary_correlation(1.0, CorrelationMode::averaged(), p), 0.85 * std::exp(-2.0), 1e-15);
    EXPECT_NEAR(stationary_correlation(1.0, CorrelationMode::averaged(), p), 0.115035, 5e-7);
    // 0.85 e^{-1} = 0.3126975; the value 0.312701 quoted alongside it is off by 3.5e-6.
    EXPECT_NEAR(stationary_correlation(0.5, CorrelationMode::averaged(), p), 0.3126975, 5e-8);
}

TEST(Correlation, BlindAtEqualWeights) {
    for (double q1 : {0.2, 0.5, 0.8}) {
        EXPECT_NEAR(stationary_correlation(0.0, CorrelationMode::averaged(), make(0.75, 0.75, 2.0, q1)), 0.75, 2e-16);
    }
}

TEST(Correlation, DecayRateIsAlpha) {
    RandomStream rng(21, 0);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_params(rng);
        const double tau = 3.0 * rng.uniform(), delta = rng.uniform();
        const double c0 = stationary_correlation(tau, CorrelationMode::averaged(), p);
        if (c0 <= 1e-200) continue;
        const double c1 = stationary_correlation(tau + delta, CorrelationMode::averaged(), p);
        EXPECT_NEAR(c1 / c0, std::exp(-p.alpha() * delta), 1e-12);
    }
}

TEST(Correlation, ConditionalMatchesJointSums) {
    RandomStream rng(22, 0);
    for (int i = 0; i < 100; ++i) {
        const auto p = random_params(rng);
        const double tau = 3.0 * rng.uniform();
        for (std::size_t l = 0; l < 2; ++l) {
            EXPECT_NEAR(stationary_correlation(tau, CorrelationMode::conditional(l), p),
                        oracle::conditional_correlation(l, tau, p), 1e-10);
        }
    }
}

TEST(Correlation, AveragedIsQWeighted) {
    const auto p = canonical();
    const double tau = 0.37;
    EXPECT_NEAR(stationary_correlation(tau, CorrelationMode::averaged(), p),
                0.6 * stationary_correlation(tau, CorrelationMode::conditional(0), p) +
                    0.4 * stationary_correlation(tau, CorrelationMode::conditional(1), p),
                1e-15);
}

TEST(Correlation, QSensitivity) {
    const auto p = canonical();
    const double slope = stationary_correlation(0.0, CorrelationMode::averaged(), p.with_q1(1.0)) -
                         stationary_correlation(0.0, CorrelationMode::averaged(), p.with_q1(0.0));
    EXPECT_NEAR(slope, 4.0 * (0.1875 - 0.25), 1e-15);
}

TEST(Correlation, MarkovModesCoincide) {
    const auto p = make(0.3, 0.7, 2.0, 0.4);
    for (double tau : {0.0, 0.4, 1.5}) {
        const double expected = 0.3 * 0.7 * 4.0 * std::exp(-2.0 * tau);
        EXPECT_NEAR(stationary_correlation(tau, CorrelationMode::averaged(), p), expected, 1e-15);
        EXPECT_NEAR(stationary_correlation(tau, CorrelationMode::conditional(0), p), expected, 1e-15);
        EXPECT_NEAR(stationary_correlation(tau, CorrelationMode::conditional(1), p), expected, 1e-15);
    }
}

TEST(Correlation, GammaSubstitutedIsConstant) {
    const auto p = canonical();
    for (double tau : {0.0, 1.0, 10.0}) {
        EXPECT_NEAR(stationary_correlation(tau, CorrelationMode::gamma_substituted(0), p), 0.75, 1e-15);
    }
}

// =============================================================================
// Three-point joint
// =============================================================================

TEST(ThreePointJoint, ZeroLagIsDiagonal) {
    const auto j = three_point_joint_stationary(0.0, canonical());
    for (std::size_t l = 0; l < 2; ++l) {
        EXPECT_EQ(j(l, 0, 1), 0.0);
        EXPECT_EQ(j(l, 1, 0), 0.0);
    }
    EXPECT_NEAR(j.total(), 1.0, 1e-15);
}

TEST(ThreePointJoint, StationaryLeadingMarginal) {
    const auto j = three_point_joint_stationary(0.8, canonical());
    EXPECT_NEAR(j.leading_marginal(0, 0), 0.45, 1e-15);
    EXPECT_NEAR(j.leading_marginal(0, 1), 0.15, 1e-15);
    EXPECT_NEAR(j.leading_marginal(1, 0), 0.2, 1e-15);
    EXPECT_NEAR(j.leading_marginal(1, 1), 0.2, 1e-15);
}

TEST(ThreePointJoint, LongLagFactorises) {
    const auto p = canonical();
    const auto j = three_point_joint_stationary(40.0, p);
    const std::array<std::array<double, 2>, 2> st{{{0.75, 0.25}, {0.5, 0.5}}};
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t jj = 0; jj < 2; ++jj) EXPECT_NEAR(j(l, k, jj), p.q(l) * st[l][k] * st[l][jj], 1e-15);
}

TEST(ThreePointJoint, FiniteMatchesOracleAndJointProbability) {
    const auto p = canonical();
    const auto j = three_point_joint(1.0, 0.5, p);
    const auto ref = oracle::three_point(0.5, 0.5, p);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(j.p[i], ref[i], 1e-13);
    EXPECT_NEAR(j(0, 0, 0), 0.425348, 1e-6);
    // Middle index summed out gives the two-time joint.
    const std::array<double, 2> times{0.0, 1.0};
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t jj = 0; jj < 2; ++jj) {
            const std::array<std::size_t, 2> st{l, jj};
            EXPECT_NEAR(j.outer_marginal(l, jj), joint_probability(times, st, p), 1e-14);
        }
    EXPECT_FUNESS_ERROR(three_point_joint(0.5, 1.0, p), ErrorCode::TimeOrder);
}

// =============================================================================
// Conditional mutual information and entropy difference
// =============================================================================

TEST(Entropy, Basics) {
    const std::array<double, 2> fair{0.5, 0.5};
    EXPECT_NEAR(entropy(fair), std::log(2.0), 1e-15);
    const std::array<double, 3> with_zero{1.0, 0.0, 0.0};
    EXPECT_EQ(entropy(with_zero), 0.0);
}

TEST(Cmi, CanonicalValues) {
    const auto p = canonical();
    EXPECT_EQ(conditional_mutual_information(0.0, p).cmi, 0.0);
    EXPECT_NEAR(conditional_mutual_information(1.0, p).cmi, 0.02348, 1e-4);
    EXPECT_NEAR(conditional_mutual_information(1.0, p).cmi, 0.0234715, 1e-6);
    EXPECT_NEAR(conditional_mutual_information(50.0, p).cmi, 0.03063, 1e-4);
    EXPECT_NEAR(conditional_mutual_information(0.5, p).cmi, 0.0145385, 1e-6);
    EXPECT_NEAR(conditional_mutual_information(2.0, p).cmi, 0.0295361, 1e-6);
}

TEST(Cmi, ClosedFormMatchesOracleJoint) {
    RandomStream rng(23, 0);
    for (int i = 0; i < 300; ++i) {
        const auto p = random_params(rng);
        const double tau = 10.0 / p.alpha() * rng.uniform();
        const double closed = conditional_mutual_information(tau, p, CmiMethod::ClosedForm).cmi;
        const double brute = conditional_mutual_information(tau, p, CmiMethod::BruteForce).cmi;
        EXPECT_NEAR(closed, brute, 1e-10);
        EXPECT_NEAR(closed, oracle::cmi(oracle::three_point(-1.0, tau, p)), 1e-10);
        EXPECT_GE(closed, -1e-12);
        EXPECT_LE(closed, std::log(2.0));
    }
}

TEST(Cmi, ZeroAtZeroLag) {
    RandomStream rng(24, 0);
    for (int i = 0; i < 50; ++i) EXPECT_LE(std::abs(conditional_mutual_information(0.0, random_params(rng)).cmi), 1e-12);
}

TEST(Cmi, MarkovNullity) {
    for (double k : {0.2, 0.5, 0.9}) {
        const auto p = make(k, 1.0 - k, 2.0, 0.3);
        for (double tau : {0.0, 0.1, 1.0, 5.0, 100.0}) EXPECT_LE(conditional_mutual_information(tau, p).cmi, 1e-12);
    }
}

TEST(Cmi, EqualWeightsStillSeparateByQ) {
    const double a = conditional_mutual_information(1.0, make(0.75, 0.75, 2.0, 0.2)).cmi;
    const double b = conditional_mutual_information(1.0, make(0.75, 0.75, 2.0, 0.5)).cmi;
    EXPECT_GT(a, 1e-4);
    EXPECT_GT(std::abs(a - b), 1e-4);
    // Relabelling the states maps q1 to 1 - q1 when k = r.
    EXPECT_NEAR(a, conditional_mutual_information(1.0, make(0.75, 0.75, 2.0, 0.8)).cmi, 1e-14);
}

TEST(Cmi, ReportComponents) {
    const auto p = canonical();
    const auto rep = conditional_mutual_information(1.0, p);
    const double recon = p.q1() * (rep.h_lambda - rep.h_kernels[0]) + p.q2() * (rep.h_lambda - rep.h_kernels[1]);
    EXPECT_NEAR(rep.cmi, recon, 1e-15);
    EXPECT_DOUBLE_EQ(rep.tau, 1.0);
}

TEST(Cmi, JointTableRoute) {
    const auto p = canonical();
    EXPECT_NEAR(conditional_mutual_information(three_point_joint_stationary(1.0, p)),
                conditional_mutual_information(1.0, p).cmi, 1e-12);
}

TEST(EntropyDifference, MagnitudeEqualsCmi) {
    RandomStream rng(25, 0);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_params(rng);
        const double tau = 5.0 * rng.uniform();
        const double ed = entropy_difference(tau, p);
        const double cmi = conditional_mutual_information(tau, p).cmi;
        EXPECT_NEAR(std::abs(ed), cmi, 1e-10);
        EXPECT_LE(ed, 1e-12);
    }
    EXPECT_NEAR(std::abs(entropy_difference(1.0, canonical())), 0.02348, 1e-4);
    EXPECT_LE(std::abs(entropy_difference(0.0, canonical())), 1e-15);
    EXPECT_LE(std::abs(entropy_difference(0.7, make(0.4, 0.6))), 1e-12);
}

TEST(WeightedMatrixEntropy, MatchesDefinition) {
    Eigen::MatrixXd m(2, 2);
    m << 0.9, 0.2, 0.1, 0.8;
    Eigen::VectorXd w(2);
    w << 0.3, 0.7;
    const double expected = -(0.3 * (0.9 * std::log(0.9) + 0.1 * std::log(0.1)) + 0.7 * (0.2 * std::log(0.2) + 0.8 * std::log(0.8)));
    EXPECT_NEAR(weighted_matrix_entropy(m, w), expected, 1e-15);
}
