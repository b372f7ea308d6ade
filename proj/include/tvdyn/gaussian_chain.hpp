#ifndef TVDYN_GAUSSIAN_CHAIN_HPP
#define TVDYN_GAUSSIAN_CHAIN_HPP

// Posterior moments of a first-order Gaussian Markov chain from its
// block-tridiagonal precision. Linear in chain length, cubic in block size.

#include "common.hpp"

#include <span>
#include <vector>

namespace tvdyn {

/// Precision of a chain x_0..x_N. offdiag[n-1] is the (n, n-1) block;
/// the (n-1, n) block is its transpose.
struct BlockTridiagonalPrecision {
    std::vector<Matrix> diag;
    std::vector<Matrix> offdiag;

    Index dim() const { return diag.empty() ? 0 : diag.front().rows(); }
    Index length() const { return static_cast<Index>(diag.size()); }

    /// Dense assembly; only meant for small problems and tests.
    Matrix dense() const {
        const Index d = dim();
        const Index len = length();
        Matrix full = Matrix::Zero(d * len, d * len);
        for (Index n = 0; n < len; ++n) full.block(n * d, n * d, d, d) = diag[n];
        for (Index n = 1; n < len; ++n) {
            full.block(n * d, (n - 1) * d, d, d) = offdiag[n - 1];
            full.block((n - 1) * d, n * d, d, d) = offdiag[n - 1].transpose();
        }
        return full;
    }
};

struct GaussianChainPosterior {
    std::vector<Vector> means;       // <x_n>
    std::vector<Matrix> covs;        // Cov(x_n)
    std::vector<Matrix> cross_covs;  // Cov(x_n, x_{n-1}), index n-1
    double log_det_precision = 0.0;  // log det of the joint precision

    Index dim() const { return means.empty() ? 0 : means.front().size(); }
    Index length() const { return static_cast<Index>(means.size()); }

    /// <x_n x_n^T>
    Matrix second_moment(Index n) const { return covs[n] + means[n] * means[n].transpose(); }

    /// <x_n x_{n-1}^T>, n >= 1
    Matrix cross_moment(Index n) const { return cross_covs[n - 1] + means[n] * means[n - 1].transpose(); }

    /// Entropy of the joint Gaussian over all (N+1)*d variables.
    double entropy() const {
        const double k = static_cast<double>(dim() * length());
        return 0.5 * k * (1.0 + std::log(2.0 * M_PI)) - 0.5 * log_det_precision;
    }

    /// Chain of independent blocks with the given means and covariances.
    static GaussianChainPosterior independent(std::vector<Vector> means, std::vector<Matrix> covs) {
        GaussianChainPosterior post;
        const Index d = means.empty() ? 0 : means.front().size();
        post.log_det_precision = 0.0;
        for (const auto& c : covs) post.log_det_precision -= logdet_spd(c);
        post.cross_covs.assign(means.empty() ? 0 : means.size() - 1, Matrix::Zero(d, d));
        post.means = std::move(means);
        post.covs = std::move(covs);
        return post;
    }

    /// Maps every x_n to R x_n.
    void transform(const Matrix& r) {
        for (auto& m : means) m = r * m;
        for (auto& c : covs) c = symmetrized(r * c * r.transpose());
        for (auto& c : cross_covs) c = r * c * r.transpose();
        const double logabsdet = std::log(std::abs(r.determinant()));
        log_det_precision -= 2.0 * static_cast<double>(length()) * logabsdet;
    }
};

/// Solves for the marginal and lag-one moments of the chain with precision
/// `prec` and linear term `rhs` (mean = prec^{-1} rhs).
///
/// Forward sweep computes the block-Cholesky Schur complements
///   S_0 = D_0,  S_n = D_n - L_n S_{n-1}^{-1} L_n^T
/// and the backward sweep the mean and the diagonal and sub-diagonal blocks
/// of the inverse. Throws NumericalError naming the first Schur complement
/// that fails to factorize.
inline GaussianChainPosterior solve_chain(const BlockTridiagonalPrecision& prec, std::span<const Vector> rhs) {
    const Index len = prec.length();
    require(len >= 1, "solve_chain: empty chain");
    require(static_cast<Index>(rhs.size()) == len, "solve_chain: rhs length does not match precision");
    require(static_cast<Index>(prec.offdiag.size()) == len - 1, "solve_chain: expected N off-diagonal blocks");
    const Index d = prec.dim();
    for (Index n = 0; n < len; ++n) {
        require(prec.diag[n].rows() == d && prec.diag[n].cols() == d, "solve_chain: diagonal block size mismatch");
        require(rhs[n].size() == d, "solve_chain: rhs block size mismatch");
    }

    std::vector<Eigen::LLT<Matrix>> schur(len);
    std::vector<Vector> z(len);
    // gain[n] = S_n^{-1} L_{n+1}^T
    std::vector<Matrix> gain(len > 0 ? len - 1 : 0);
    double logdet = 0.0;

    Matrix s = symmetrized(prec.diag[0]);
    z[0] = rhs[0];
    for (Index n = 0; n < len; ++n) {
        if (n > 0) {
            const Matrix& lower = prec.offdiag[n - 1];
            gain[n - 1] = schur[n - 1].solve(lower.transpose());
            s = symmetrized(prec.diag[n] - lower * gain[n - 1]);
            z[n] = rhs[n] - gain[n - 1].transpose() * z[n - 1];
        }
        schur[n].compute(s);
        if (schur[n].info() != Eigen::Success)
            throw NumericalError("solve_chain: precision is not positive definite", n);
        const Vector diag_l = schur[n].matrixL().toDenseMatrix().diagonal();
        if ((diag_l.array() <= 0.0).any() || !diag_l.allFinite())
            throw NumericalError("solve_chain: precision is not positive definite", n);
        logdet += 2.0 * diag_l.array().log().sum();
    }

    GaussianChainPosterior post;
    post.means.resize(len);
    post.covs.resize(len);
    post.cross_covs.resize(len - 1);
    post.log_det_precision = logdet;

    const Matrix eye = Matrix::Identity(d, d);
    post.means[len - 1] = schur[len - 1].solve(z[len - 1]);
    post.covs[len - 1] = symmetrized(schur[len - 1].solve(eye));
    for (Index n = len - 2; n >= 0; --n) {
        const Matrix& lower = prec.offdiag[n];  // block (n+1, n)
        post.means[n] = schur[n].solve(z[n] - lower.transpose() * post.means[n + 1]);
        // Cov(x_{n+1}, x_n) = -Sigma_{n+1} L_{n+1} S_n^{-1}
        post.cross_covs[n] = -post.covs[n + 1] * gain[n].transpose();
        post.covs[n] = symmetrized(schur[n].solve(eye) + gain[n] * post.covs[n + 1] * gain[n].transpose());
    }
    return post;
}

}  // namespace tvdyn

#endif  // TVDYN_GAUSSIAN_CHAIN_HPP
