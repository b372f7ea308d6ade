#ifndef TVDYN_ROTATION_HPP
#define TVDYN_ROTATION_HPP

// Parameter-expanded rotation of a latent chain.
//
// A chain z_n is mapped to R z_n. Its loading factor (rows of C for X, slices
// of B for S) is mapped by R^{-T}, which leaves every likelihood expectation
// unchanged and keeps the row factorization, and the ARD precisions of the
// loading factor are taken at their optimum. The chain's own dynamics
// (B for X, A for S) is re-fitted in closed form for the rotated chain with
// its ARD precisions held fixed. What remains of the bound as a function of R
// depends only on a few sums over time, so every evaluation is independent of
// the chain length:
//
//   f(R) = (N+1 - n_comp) log|det R|
//          - 1/2 tr(P0 R Z0 R^T) + m0^T P0 R z0 - 1/2 tr(R Zsum R^T)
//          - a_ard sum_g sum_d log(b_ard + 1/2 [R^{-T} U_g R^{-1}]_dd)
//          + 1/2 tr(H^T P^{-1} H) - (n_targets / 2) log det P
//
// with Rk = R (x) I_K, P = diag(lambda) + Rk G Rk^T and H = Rk Hlin R^T.
// Up to a constant, f(R) equals the bound after the rotation has been applied
// and the dynamics and loading hyperparameters re-fitted.

#include "common.hpp"
#include "updates.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

namespace tvdyn {

/// Terms of the rotated chain itself (entropy and initial-state prior).
struct ChainRotationStats {
    double length = 0.0;      // N + 1
    Matrix first_second;      // <z_0 z_0^T>
    Vector first_mean;        // <z_0>
    Matrix prior_prec;        // initial-state prior precision
    Vector prior_mean;        // initial-state prior mean
    Matrix tail_second_sum;   // sum_{n>=1} <z_n z_n^T>
};

/// Loading factor transformed by R^{-T} with Gamma ARD precisions re-fitted.
struct CompensationStats {
    double count = 0.0;         // number of compensated vectors, times their block count
    std::vector<Matrix> grams;  // second-moment sums, one per ARD group
    double ard_shape = 1.0;     // posterior shape of the ARD precisions
    double ard_prior_rate = 1.0;
};

/// Dynamics re-fitted as a Gaussian regression with fixed ARD precisions.
struct DynamicsRegressionStats {
    Index inner = 1;          // K for the basis tensor, 1 for A
    Matrix gram;              // G, (d*inner) square
    Matrix linear;            // Hlin, (d*inner) x d
    Vector prior_prec;        // diagonal prior precision, d*inner
    double targets = 0.0;     // number of regression outputs sharing P
};

inline ChainRotationStats chain_rotation_stats(const GaussianChainPosterior& z, const Vector& mu0,
                                               const Matrix& prec0) {
    ChainRotationStats st;
    st.length = static_cast<double>(z.length());
    st.first_second = z.second_moment(0);
    st.first_mean = z.means[0];
    st.prior_prec = prec0;
    st.prior_mean = mu0;
    st.tail_second_sum = Matrix::Zero(z.dim(), z.dim());
    for (Index n = 1; n < z.length(); ++n) st.tail_second_sum += z.second_moment(n);
    return st;
}

/// Regression statistics of the basis tensor given the chain x and weights.
inline DynamicsRegressionStats basis_regression_stats(const GaussianChainPosterior& x,
                                                      std::span<const WeightMoments> weights,
                                                      const GammaArray& beta, Index K) {
    const Index D = x.dim(), N = x.length() - 1;
    DynamicsRegressionStats st;
    st.inner = K;
    st.gram = Matrix::Zero(K * D, K * D);
    st.linear = Matrix::Zero(K * D, D);
    for (Index n = 1; n <= N; ++n) {
        const auto& w = weights[n - 1];
        st.gram += kron(x.second_moment(n - 1), w.second);
        const Matrix cross = x.cross_moment(n);
        for (Index c = 0; c < D; ++c)
            for (Index j = 0; j < D; ++j) st.linear.block(j * K, c, K, 1) += cross(c, j) * w.mean;
    }
    st.prior_prec = beta.mean();
    st.targets = static_cast<double>(D);
    return st;
}

/// Regression statistics of A given the weight chain s.
inline DynamicsRegressionStats transition_regression_stats(const GaussianChainPosterior& s, const GammaArray& alpha) {
    const Index K = s.dim(), N = s.length() - 1;
    DynamicsRegressionStats st;
    st.inner = 1;
    st.gram = Matrix::Zero(K, K);
    Matrix cross_sum = Matrix::Zero(K, K);
    for (Index n = 1; n <= N; ++n) {
        st.gram += s.second_moment(n - 1);
        cross_sum += s.cross_moment(n);
    }
    st.linear = cross_sum.transpose();
    st.prior_prec = alpha.mean();
    st.targets = static_cast<double>(K);
    return st;
}

class RotationObjective {
public:
    RotationObjective(ChainRotationStats chain, CompensationStats comp, DynamicsRegressionStats dyn)
        : chain_(std::move(chain)), comp_(std::move(comp)), dyn_(std::move(dyn)) {}

    Index dim() const { return chain_.first_mean.size(); }

    /// f(R); fills `grad` with df/dR when given. Returns -inf where
    /// |det R| < 1e-8 or P fails to factorize.
    double evaluate(const Matrix& r, Matrix* grad = nullptr) const {
        constexpr double kNegInf = -std::numeric_limits<double>::infinity();
        const Index d = dim();
        Eigen::PartialPivLU<Matrix> lu(r);
        const double det = lu.determinant();
        if (!std::isfinite(det) || std::abs(det) < 1e-8) return kNegInf;
        const double logabsdet = std::log(std::abs(det));
        const Matrix rinv = lu.inverse();
        const Matrix rinv_t = rinv.transpose();

        double f = (chain_.length - comp_.count) * logabsdet;
        const Matrix& p0 = chain_.prior_prec;
        f += -0.5 * (p0 * r * chain_.first_second * r.transpose()).trace() +
             chain_.prior_mean.dot(p0 * r * chain_.first_mean) -
             0.5 * (r * chain_.tail_second_sum * r.transpose()).trace();

        Matrix g;
        if (grad) {
            g = (chain_.length - comp_.count) * rinv_t - p0 * r * chain_.first_second +
                p0 * chain_.prior_mean * chain_.first_mean.transpose() - r * chain_.tail_second_sum;
        }

        for (const Matrix& u : comp_.grams) {
            const Matrix v = rinv_t * u * rinv;
            Vector w(d);
            for (Index i = 0; i < d; ++i) {
                const double rate = comp_.ard_prior_rate + 0.5 * v(i, i);
                if (!(rate > 0.0)) return kNegInf;
                f -= comp_.ard_shape * std::log(rate);
                w[i] = comp_.ard_shape / (2.0 * rate);
            }
            if (grad) g += 2.0 * v * w.asDiagonal() * rinv_t;
        }

        const Index K = dyn_.inner;
        const Matrix rk = kron(r, Matrix::Identity(K, K));
        Matrix prec = rk * dyn_.gram * rk.transpose();
        prec.diagonal() += dyn_.prior_prec;
        prec = symmetrized(prec);
        Eigen::LLT<Matrix> llt(prec);
        if (llt.info() != Eigen::Success) return kNegInf;
        const Matrix h = rk * dyn_.linear * r.transpose();
        const Matrix fsol = llt.solve(h);  // P^{-1} H
        const double logdet_p = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        f += 0.5 * h.cwiseProduct(fsol).sum() - 0.5 * dyn_.targets * logdet_p;

        if (grad) {
            const Matrix pinv = llt.solve(Matrix::Identity(prec.rows(), prec.cols()));
            const Matrix y = 0.5 * fsol * fsol.transpose() + 0.5 * dyn_.targets * pinv;
            const Matrix grad_rk = -2.0 * y * rk * dyn_.gram + fsol * r * dyn_.linear.transpose();
            g += fsol.transpose() * rk * dyn_.linear;
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b) g(a, b) += grad_rk.block(a * K, b * K, K, K).trace();
            *grad = g;
        }
        return f;
    }

private:
    ChainRotationStats chain_;
    CompensationStats comp_;
    DynamicsRegressionStats dyn_;
};

struct RotationOptions {
    int max_iterations = 100;
    double grad_tol = 1e-8;
    double rel_tol = 1e-13;
    /// Optimize-and-apply rounds per step. The dynamics ARD precisions are
    /// fixed inside one round and refreshed between rounds.
    int max_rounds = 3;
    /// A round gaining less than this times |ELBO| ends the step.
    double round_tol = 1e-9;
};

struct RotationResult {
    Matrix rotation;
    double gain = 0.0;  // f(R) - f(I)
    int iterations = 0;
    bool ok = true;
};

/// Maximizes f over invertible R by BFGS on the d*d entries with a
/// backtracking Armijo line search, starting from the identity.
inline RotationResult optimize_rotation(const RotationObjective& obj, const RotationOptions& opt = {}) {
    const Index d = obj.dim();
    const Index p = d * d;
    RotationResult res;
    res.rotation = Matrix::Identity(d, d);

    Matrix grad_m;
    const double f0 = obj.evaluate(res.rotation, &grad_m);
    if (!std::isfinite(f0)) {
        res.ok = false;
        return res;
    }
    double f = f0;
    // minimize phi = -f
    Vector x = Eigen::Map<const Vector>(res.rotation.data(), p);
    Vector g = -Eigen::Map<const Vector>(grad_m.data(), p);
    Matrix hinv = Matrix::Identity(p, p);
    const double gnorm0 = g.norm();
    if (gnorm0 > 0.0) hinv *= std::min(1.0, 0.1 / gnorm0);

    auto eval = [&](const Vector& v, Vector& gout) {
        Matrix r = Eigen::Map<const Matrix>(v.data(), d, d);
        Matrix gm;
        const double val = obj.evaluate(r, &gm);
        if (std::isfinite(val)) gout = -Eigen::Map<const Vector>(gm.data(), p);
        return val;
    };

    for (int it = 0; it < opt.max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol * (1.0 + std::abs(f))) break;
        Vector dir = -hinv * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            hinv *= std::min(1.0, 0.1 / std::max(g.norm(), 1e-300));
            dir = -hinv * g;
            slope = g.dot(dir);
        }
        double step = 1.0;
        Vector x_new, g_new;
        double f_new = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = eval(x_new, g_new);
            if (std::isfinite(f_new) && -f_new <= -f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        res.iterations = it + 1;
        const Vector sv = x_new - x;
        const Vector yv = g_new - g;
        const double sy = sv.dot(yv);
        const double improvement = f_new - f;
        x = x_new;
        g = g_new;
        f = f_new;
        if (sy > 1e-12 * sv.norm() * yv.norm()) {
            if (it == 0) hinv = Matrix::Identity(p, p) * (sy / yv.squaredNorm());
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(p, p);
            hinv = (eye - rho * sv * yv.transpose()) * hinv * (eye - rho * yv * sv.transpose()) +
                   rho * sv * sv.transpose();
        }
        if (improvement <= opt.rel_tol * (1.0 + std::abs(f))) break;
    }
    res.rotation = Eigen::Map<const Matrix>(x.data(), d, d);
    res.gain = f - f0;
    if (!res.rotation.allFinite()) {
        res.rotation = Matrix::Identity(d, d);
        res.gain = 0.0;
        res.ok = false;
    }
    return res;
}

inline bool is_identity(const Matrix& r) { return r == Matrix::Identity(r.rows(), r.cols()); }

inline void log_warning(const std::string& msg) { std::clog << "warning: " << msg << '\n'; }

}  // namespace tvdyn

#endif  // TVDYN_ROTATION_HPP
