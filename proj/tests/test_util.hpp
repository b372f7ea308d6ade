#ifndef TVDYN_TEST_UTIL_HPP
#define TVDYN_TEST_UTIL_HPP

#include <tvdyn/gaussian_chain.hpp>
#include <tvdyn/model.hpp>

#include <random>

namespace tvdyn::test {

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
    return random_matrix(rng, n, 1, scale).col(0);
}

inline Matrix random_spd(std::mt19937_64& rng, Index d, double ridge = 1.0) {
    const Matrix a = random_matrix(rng, d, d);
    return a * a.transpose() + ridge * Matrix::Identity(d, d);
}

/// Block-diagonally dominant, hence positive definite, chain precision.
inline BlockTridiagonalPrecision random_chain_precision(std::mt19937_64& rng, Index len, Index d) {
    BlockTridiagonalPrecision p;
    for (Index n = 1; n < len; ++n) p.offdiag.push_back(random_matrix(rng, d, d, 0.7));
    for (Index n = 0; n < len; ++n) {
        double bound = 0.0;
        if (n > 0) bound += p.offdiag[n - 1].lpNorm<Eigen::Infinity>() * d;
        if (n + 1 < len) bound += p.offdiag[n].lpNorm<Eigen::Infinity>() * d;
        p.diag.push_back(random_spd(rng, d, 0.5 + bound));
    }
    return p;
}

inline double max_rel_err(const Matrix& got, const Matrix& want) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

/// Deterministic Gaussian rows with zero covariance.
inline GaussianRows point_rows(const std::vector<Vector>& means) {
    GaussianRows r;
    r.means = means;
    for (const auto& m : means) r.covs.push_back(Matrix::Zero(m.size(), m.size()));
    return r;
}

/// Chain posterior with zero covariances and the given means.
inline GaussianChainPosterior point_chain(const std::vector<Vector>& means) {
    GaussianChainPosterior c;
    c.means = means;
    const Index d = means.front().size();
    c.covs.assign(means.size(), Matrix::Zero(d, d));
    c.cross_covs.assign(means.size() - 1, Matrix::Zero(d, d));
    return c;
}

/// Data from a small time-varying-dynamics model: B_1 a damped rotation,
/// further bases small, weights following a slow random walk.
inline ObservationSet simulate_tvd(std::mt19937_64& rng, Index M, Index N, Index D, Index K, double missing = 0.2,
                                   double noise = 0.1) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution drop(missing);
    std::vector<Matrix> basis;
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, D, D));
    basis.push_back(0.95 * Matrix(qr.householderQ()));
    for (Index k = 1; k < K; ++k) basis.push_back(random_matrix(rng, D, D, 0.3 / std::sqrt(double(D))));
    const Matrix c = random_matrix(rng, M, D);
    Vector s = Vector::Zero(K);
    s[0] = 1.0;
    Vector x = random_vector(rng, D);
    Matrix y(M, N);
    Mask mask(M, N);
    for (Index n = 0; n < N; ++n) {
        for (Index k = 1; k < K; ++k) s[k] = 0.98 * s[k] + 0.2 * z(rng);
        Matrix w = Matrix::Zero(D, D);
        for (Index k = 0; k < K; ++k) w += s[k] * basis[k];
        x = w * x + 0.3 * random_vector(rng, D);
        if (x.norm() > 10.0) x *= 10.0 / x.norm();
        for (Index m = 0; m < M; ++m) {
            y(m, n) = c.row(m).dot(x) + noise * z(rng);
            mask(m, n) = !drop(rng);
        }
    }
    return ObservationSet(y, mask);
}

}  // namespace tvdyn::test

#endif
