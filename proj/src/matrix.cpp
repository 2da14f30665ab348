#include "funess/matrix.hpp"

#include <cmath>
#include <sstream>

#include "funess/error.hpp"
#include "funess/params.hpp"

namespace funess {

ColumnStochasticMatrix::ColumnStochasticMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
        fail(ErrorCode::InvariantViolation, "stochastic matrix must be square and non-empty");
    }
    for (Eigen::Index c = 0; c < m_.cols(); ++c) {
        double sum = 0.0;
        for (Eigen::Index r = 0; r < m_.rows(); ++r) {
            double& v = m_(r, c);
            if (!std::isfinite(v)) {
                fail(ErrorCode::InvariantViolation, "non-finite matrix entry");
            }
            if (v < 0.0) {
                if (v < -kClampTolerance) {
                    std::ostringstream os;
                    os << "entry (" << r << "," << c << ") = " << v << " is negative";
                    fail(ErrorCode::InvariantViolation, os.str());
                }
                v = 0.0;
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kColumnSumTolerance) {
            std::ostringstream os;
            os << "column " << c << " sums to " << sum;
            fail(ErrorCode::InvariantViolation, os.str());
        }
    }
}

ColumnStochasticMatrix ColumnStochasticMatrix::identity(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return ColumnStochasticMatrix(Eigen::MatrixXd::Identity(n, n));
}

ColumnStochasticMatrix ColumnStochasticMatrix::operator*(const ColumnStochasticMatrix& earlier) const {
    if (earlier.dim() != dim()) {
        fail(ErrorCode::InvalidArgument, "dimension mismatch in composition");
    }
    return ColumnStochasticMatrix(m_ * earlier.m_);
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::InvalidArgument, "dimension mismatch in max_abs_diff");
    }
    return (a - b).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd DiagonalWeights::as_matrix() const {
    Eigen::VectorXd d(static_cast<Eigen::Index>(weight.size()));
    for (std::size_t i = 0; i < weight.size(); ++i) d(static_cast<Eigen::Index>(i)) = weight[i];
    return d.asDiagonal();
}

}  // namespace funess
