#ifndef TVDYN_COMMON_HPP
#define TVDYN_COMMON_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tvdyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown for malformed inputs: dimension mismatches, non-positive sizes,
/// invalid hyperparameters, unreadable files.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a matrix that must be positive definite fails to factorize.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, Index block)
        : std::runtime_error(what + " (block " + std::to_string(block) + ")"), block_(block) {}

    Index block() const noexcept { return block_; }

private:
    Index block_;
};

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

/// Log-determinant of a symmetric positive definite matrix; throws on failure.
inline double logdet_spd(const Matrix& m, Index block = 0) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite", block);
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// Inverse of a symmetric positive definite matrix, symmetrized.
inline Matrix inverse_spd(const Matrix& m, Index block = 0) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite", block);
    return symmetrized(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

}  // namespace tvdyn

#endif  // TVDYN_COMMON_HPP
