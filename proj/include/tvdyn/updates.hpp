#ifndef TVDYN_UPDATES_HPP
#define TVDYN_UPDATES_HPP

// Closed-form VB coordinate updates. Each function takes exactly the factors
// its update reads, so the classical and switching baselines share the
// observation-side updates (X, C, tau, gamma) with the time-varying model.

#include "model.hpp"

#include <span>
#include <vector>

namespace tvdyn {

/// y^2 - 2 y <c>^T <x> + tr(<c c^T> <x x^T>) summed over the observed
/// entries of row m.
inline double residual_statistic(const ObservationSet& data, Index m, const GaussianChainPosterior& x,
                                 const GaussianRows& c) {
    const Matrix cc = c.second_moment(m);
    double stat = 0.0;
    for (Index n : data.row_set(m)) {
        const double y = data.value(m, n);
        const Index t = n + 1;
        stat += y * y - 2.0 * y * c.means[m].dot(x.means[t]) + cc.cwiseProduct(x.second_moment(t)).sum();
    }
    return stat;
}

inline void update_tau(GammaArray& tau, const ObservationSet& data, const GaussianChainPosterior& x,
                       const GaussianRows& c, const Hyperparameters& h, bool isotropic) {
    const Index M = data.rows();
    tau = GammaArray(M, h.a_tau, h.b_tau);
    if (isotropic) {
        double count = 0.0, stat = 0.0;
        for (Index m = 0; m < M; ++m) {
            count += static_cast<double>(data.row_count(m));
            stat += residual_statistic(data, m, x, c);
        }
        tau.shape.setConstant(h.a_tau + 0.5 * count);
        tau.rate.setConstant(h.b_tau + 0.5 * stat);
        return;
    }
    for (Index m = 0; m < M; ++m) {
        tau.shape[m] = h.a_tau + 0.5 * static_cast<double>(data.row_count(m));
        tau.rate[m] = h.b_tau + 0.5 * residual_statistic(data, m, x, c);
    }
}

inline void update_C(GaussianRows& c, const ObservationSet& data, const GaussianChainPosterior& x,
                     const GammaArray& tau, const GammaArray& gamma) {
    const Index M = data.rows(), D = x.dim();
    const Vector gamma_mean = gamma.mean();
    const Vector tau_mean = tau.mean();
    std::vector<Matrix> xx(x.length());
    for (Index t = 0; t < x.length(); ++t) xx[t] = x.second_moment(t);
    c = GaussianRows(M, D);
    for (Index m = 0; m < M; ++m) {
        Matrix prec = gamma_mean.asDiagonal();
        Vector lin = Vector::Zero(D);
        for (Index n : data.row_set(m)) {
            prec += tau_mean[m] * xx[n + 1];
            lin += tau_mean[m] * data.value(m, n) * x.means[n + 1];
        }
        c.covs[m] = inverse_spd(prec, m);
        c.means[m] = c.covs[m] * lin;
    }
}

inline void update_gamma(GammaArray& gamma, const GaussianRows& c, const Hyperparameters& h) {
    const Index D = c.dim();
    gamma = GammaArray(D, h.a_gamma + 0.5 * static_cast<double>(c.count()), h.b_gamma);
    gamma.rate += 0.5 * c.second_moment_sum().diagonal();
}

/// Kronecker product a (x) b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// q(B) given q(X), the weight moments for n = 1..N and q(beta). The
/// precision diag<beta> + sum_n <x_{n-1} x_{n-1}^T> (x) <s_n s_n^T> is the
/// same for every slice; slice c gets the linear term
/// sum_n vec(<s_n> <x_{cn} x_{n-1}^T>).
inline void update_B(GaussianRows& b, const GammaArray& beta, const GaussianChainPosterior& x,
                     std::span<const WeightMoments> weights, Index K) {
    const Index D = x.dim(), N = x.length() - 1;
    require(static_cast<Index>(weights.size()) == N, "update_B: need weight moments for n = 1..N");
    require(beta.size() == K * D, "update_B: beta has wrong size");
    Matrix prec = beta.mean().asDiagonal();
    Matrix lin = Matrix::Zero(K * D, D);  // column c is the linear term of slice c
    for (Index n = 1; n <= N; ++n) {
        const auto& w = weights[n - 1];
        prec += kron(x.second_moment(n - 1), w.second);
        const Matrix cross = x.cross_moment(n);
        for (Index c = 0; c < D; ++c)
            for (Index j = 0; j < D; ++j) lin.block(j * K, c, K, 1) += cross(c, j) * w.mean;
    }
    const Matrix cov = inverse_spd(prec);
    b = GaussianRows(D, K * D);
    for (Index c = 0; c < D; ++c) {
        b.covs[c] = cov;
        b.means[c] = cov * lin.col(c);
    }
}

inline void update_beta(GammaArray& beta, const GaussianRows& b, const Hyperparameters& h) {
    const Index D = b.count();
    beta = GammaArray(b.dim(), h.a_beta + 0.5 * static_cast<double>(D), h.b_beta);
    beta.rate += 0.5 * b.second_moment_sum().diagonal();
}

inline void update_A(GaussianRows& a, const GammaArray& alpha, const GaussianChainPosterior& s) {
    const Index K = s.dim(), N = s.length() - 1;
    Matrix prec = alpha.mean().asDiagonal();
    Matrix cross_sum = Matrix::Zero(K, K);
    for (Index n = 1; n <= N; ++n) {
        prec += s.second_moment(n - 1);
        cross_sum += s.cross_moment(n);
    }
    const Matrix cov = inverse_spd(prec);
    a = GaussianRows(K, K);
    for (Index k = 0; k < K; ++k) {
        a.covs[k] = cov;
        a.means[k] = cov * cross_sum.row(k).transpose();
    }
}

inline void update_alpha(GammaArray& alpha, const GaussianRows& a, const Hyperparameters& h) {
    const Index K = a.dim();
    alpha = GammaArray(K, h.a_alpha + 0.5 * static_cast<double>(a.count()), h.b_alpha);
    alpha.rate += 0.5 * a.second_moment_sum().diagonal();
}

/// Psi_n = sum_{m observed at n} <tau_m> <c_m c_m^T> for every column.
inline std::vector<Matrix> observation_precisions(const ObservationSet& data, const GaussianRows& c,
                                                  const GammaArray& tau) {
    const Vector tau_mean = tau.mean();
    std::vector<Matrix> cc(c.count());
    for (Index m = 0; m < c.count(); ++m) cc[m] = c.second_moment(m);
    std::vector<Matrix> psi(data.cols(), Matrix::Zero(c.dim(), c.dim()));
    for (Index n = 0; n < data.cols(); ++n)
        for (Index m : data.col_set(n)) psi[n] += tau_mean[m] * cc[m];
    return psi;
}

/// Block-tridiagonal precision and linear term of q(X) for the given
/// transition moments (n = 1..N).
inline std::pair<BlockTridiagonalPrecision, std::vector<Vector>> x_chain_system(
    const ObservationSet& data, const GaussianRows& c, const GammaArray& tau,
    std::span<const DynamicsMoments> dyn, const Vector& mu0, const Matrix& lambda0) {
    const Index D = c.dim(), N = data.cols();
    require(static_cast<Index>(dyn.size()) == N, "update_X: need dynamics moments for n = 1..N");
    require(c.count() == data.rows(), "update_X: C rows do not match data");
    const auto psi = observation_precisions(data, c, tau);
    const Vector tau_mean = tau.mean();
    const Matrix eye = Matrix::Identity(D, D);

    BlockTridiagonalPrecision prec;
    prec.diag.resize(N + 1);
    prec.offdiag.resize(N);
    std::vector<Vector> rhs(N + 1, Vector::Zero(D));
    prec.diag[0] = lambda0;
    rhs[0] = lambda0 * mu0;
    for (Index n = 1; n <= N; ++n) {
        prec.diag[n] = eye + psi[n - 1];
        prec.diag[n - 1] += dyn[n - 1].second;
        prec.offdiag[n - 1] = -dyn[n - 1].mean;
        for (Index m : data.col_set(n - 1)) rhs[n] += data.value(m, n - 1) * tau_mean[m] * c.means[m];
    }
    return {std::move(prec), std::move(rhs)};
}

inline void update_X(GaussianChainPosterior& x, const ObservationSet& data, const GaussianRows& c,
                     const GammaArray& tau, std::span<const DynamicsMoments> dyn, const Vector& mu0,
                     const Matrix& lambda0) {
    auto [prec, rhs] = x_chain_system(data, c, tau, dyn, mu0, lambda0);
    x = solve_chain(prec, rhs);
}

/// Block-tridiagonal precision and linear term of q(S).
inline std::pair<BlockTridiagonalPrecision, std::vector<Vector>> s_chain_system(
    const GaussianChainPosterior& x, const BasisMoments& bm, const GaussianRows& a, const Vector& mu0,
    const Matrix& v0) {
    const Index K = bm.K(), N = x.length() - 1;
    const Matrix a_mean = a.mean_matrix();
    const Matrix ata = a.second_moment_sum();  // <A^T A> = sum_k <a_k a_k^T>
    const Matrix eye = Matrix::Identity(K, K);

    BlockTridiagonalPrecision prec;
    prec.diag.resize(N + 1);
    prec.offdiag.resize(N);
    std::vector<Vector> rhs(N + 1, Vector::Zero(K));
    prec.diag[0] = v0;
    rhs[0] = v0 * mu0;
    for (Index n = 1; n <= N; ++n) {
        prec.diag[n] = eye + weight_quadratic(x.second_moment(n - 1), bm);
        prec.diag[n - 1] += ata;
        prec.offdiag[n - 1] = -a_mean;
        // sum_d <B_{:d:}> <x_{dn} x_{n-1}>
        const Matrix cross = x.cross_moment(n);
        for (Index k = 0; k < K; ++k) rhs[n][k] = bm.mean[k].cwiseProduct(cross).sum();
    }
    return {std::move(prec), std::move(rhs)};
}

inline void update_S(GaussianChainPosterior& s, const GaussianChainPosterior& x, const BasisMoments& bm,
                     const GaussianRows& a, const Vector& mu0, const Matrix& v0) {
    auto [prec, rhs] = s_chain_system(x, bm, a, mu0, v0);
    s = solve_chain(prec, rhs);
}

}  // namespace tvdyn

#endif  // TVDYN_UPDATES_HPP
