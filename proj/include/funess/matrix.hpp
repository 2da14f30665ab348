#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace funess {

/// d x d matrix with non-negative entries whose columns sum to one.
///
/// Entry (j, k) is the probability of moving to state j from state k, so
/// probability vectors propagate by left multiplication.
class ColumnStochasticMatrix {
public:
    /// Validates and stores `m`. Entries in [-1e-14, 0) are clamped to zero;
    /// anything more negative, or a column sum off by more than 1e-12, throws
    /// Error{InvariantViolation}.
    explicit ColumnStochasticMatrix(Eigen::MatrixXd m);

    static ColumnStochasticMatrix identity(std::size_t d);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    double operator()(std::size_t to, std::size_t from) const { return m_(to, from); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    Eigen::VectorXd column(std::size_t from) const { return m_.col(static_cast<Eigen::Index>(from)); }

    /// Composition: (*this) after `earlier`.
    ColumnStochasticMatrix operator*(const ColumnStochasticMatrix& earlier) const;
    Eigen::VectorXd operator*(const Eigen::VectorXd& p) const { return m_ * p; }

private:
    Eigen::MatrixXd m_;
};

/// max_{j,k} |a_jk - b_jk|
double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Diagonal of D^(l): weight[j] = P(X_t0 = l | X_s = j).
struct DiagonalWeights {
    std::size_t initial_state = 0;
    std::vector<double> weight;

    Eigen::MatrixXd as_matrix() const;
};

}  // namespace funess
