#include "test_util.hpp"

#include <tvdyn/updates.hpp>

#include <gtest/gtest.h>

using namespace tvdyn;
using namespace tvdyn::test;

namespace {

GammaArray fixed_gamma(Index n, double mean) {
    // Huge shape: mean is exact, log-mean is log(mean) to ~1e-12.
    return GammaArray(n, 1e12, 1e12 / mean);
}

GaussianRows random_rows(std::mt19937_64& rng, Index count, Index dim, double var_scale) {
    GaussianRows r(count, dim);
    for (Index i = 0; i < count; ++i) {
        r.means[i] = random_vector(rng, dim);
        r.covs[i] = var_scale * random_spd(rng, dim, 0.1);
    }
    return r;
}

GaussianChainPosterior random_chain(std::mt19937_64& rng, Index len, Index d) {
    const auto prec = random_chain_precision(rng, len, d);
    std::vector<Vector> rhs;
    for (Index n = 0; n < len; ++n) rhs.push_back(random_vector(rng, d));
    return solve_chain(prec, rhs);
}

Mask random_mask(std::mt19937_64& rng, Index M, Index N, double p_observed) {
    std::bernoulli_distribution bern(p_observed);
    Mask mask(M, N);
    for (Index m = 0; m < M; ++m)
        for (Index n = 0; n < N; ++n) mask(m, n) = bern(rng);
    return mask;
}

std::vector<DynamicsMoments> random_dynamics(std::mt19937_64& rng, Index N, Index D) {
    std::vector<DynamicsMoments> dyn;
    for (Index n = 0; n < N; ++n) {
        const Matrix w = random_matrix(rng, D, D, 0.5);
        dyn.push_back({w, w.transpose() * w + 0.1 * random_spd(rng, D, 0.1)});
    }
    return dyn;
}

}  // namespace

// ---- tau ----

TEST(UpdateTau, FullyMissingRowKeepsPrior) {
    std::mt19937_64 rng(1);
    Mask mask = Mask::Constant(2, 4, true);
    mask.row(1).setConstant(false);
    const ObservationSet data(random_matrix(rng, 2, 4), mask);
    const auto x = random_chain(rng, 5, 2);
    const auto c = random_rows(rng, 2, 2, 0.1);
    const Hyperparameters h;
    GammaArray tau;
    update_tau(tau, data, x, c, h, false);
    EXPECT_EQ(tau.shape[1], h.a_tau);
    EXPECT_EQ(tau.rate[1], h.b_tau);
}

TEST(UpdateTau, ShapeFromObservationCount) {
    std::mt19937_64 rng(2);
    const ObservationSet data(random_matrix(rng, 1, 10));
    GammaArray tau;
    update_tau(tau, data, random_chain(rng, 11, 2), random_rows(rng, 1, 2, 0.1), Hyperparameters{}, false);
    EXPECT_DOUBLE_EQ(tau.shape[0], 5.000001);
}

TEST(UpdateTau, DeterministicResiduals) {
    std::mt19937_64 rng(3);
    const Index M = 3, N = 6, D = 2;
    const Matrix y = random_matrix(rng, M, N);
    const Mask mask = random_mask(rng, M, N, 0.7);
    std::vector<Vector> xm, cm;
    for (Index n = 0; n <= N; ++n) xm.push_back(random_vector(rng, D));
    for (Index m = 0; m < M; ++m) cm.push_back(random_vector(rng, D));
    const ObservationSet data(y, mask);
    const Hyperparameters h;
    GammaArray tau, iso;
    update_tau(tau, data, point_chain(xm), point_rows(cm), h, false);
    update_tau(iso, data, point_chain(xm), point_rows(cm), h, true);
    double total = 0.0, count = 0.0;
    for (Index m = 0; m < M; ++m) {
        double sq = 0.0;
        for (Index n = 0; n < N; ++n)
            if (mask(m, n)) {
                const double r = y(m, n) - cm[m].dot(xm[n + 1]);
                sq += r * r;
                count += 1.0;
            }
        total += sq;
        EXPECT_NEAR(tau.rate[m], h.b_tau + 0.5 * sq, 1e-12);
    }
    EXPECT_NEAR(iso.rate[0], h.b_tau + 0.5 * total, 1e-12);
    EXPECT_DOUBLE_EQ(iso.shape[2], h.a_tau + 0.5 * count);
}

// ---- C, gamma ----

TEST(UpdateC, FullyMissingRowIsPrior) {
    std::mt19937_64 rng(4);
    Mask mask = Mask::Constant(2, 5, true);
    mask.row(0).setConstant(false);
    const ObservationSet data(random_matrix(rng, 2, 5), mask);
    GammaArray gamma(3, 2.0, 4.0);
    gamma.shape[1] = 6.0;
    GaussianRows c;
    update_C(c, data, random_chain(rng, 6, 3), fixed_gamma(2, 3.0), gamma);
    EXPECT_EQ(c.means[0], Vector::Zero(3));
    const Vector expected_var = gamma.mean().cwiseInverse();
    EXPECT_LT((c.covs[0] - Matrix(expected_var.asDiagonal())).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(UpdateGamma, ShapeFromRowCount) {
    std::mt19937_64 rng(5);
    GammaArray gamma;
    const Hyperparameters h;
    update_gamma(gamma, random_rows(rng, 3, 2, 0.1), h);
    EXPECT_DOUBLE_EQ(gamma.shape[0], h.a_gamma + 1.5);
}

TEST(UpdateC, ScalarRegressionOracle) {
    const double y = 1.7, xv = 0.8, tau = 2.5, g = 0.3;
    Matrix values(1, 1);
    values << y;
    const ObservationSet data(values);
    GaussianRows c;
    update_C(c, data, point_chain({Vector::Constant(1, 0.0), Vector::Constant(1, xv)}), fixed_gamma(1, tau),
             fixed_gamma(1, g));
    // Bayesian linear regression y = c x + e, c ~ N(0, 1/g), e ~ N(0, 1/tau).
    const double post_prec = g + tau * xv * xv;
    EXPECT_NEAR(c.covs[0](0, 0), 1.0 / post_prec, 1e-9);
    EXPECT_NEAR(c.means[0][0], tau * xv * y / post_prec, 1e-9);
}

TEST(Updates, MaskedCellsNeverEnterStatistics) {
    std::mt19937_64 rng(6);
    const Index M = 3, N = 4, D = 2;
    Mask mask(M, N);
    mask << true, false, true, true, false, false, true, false, true, true, false, true;
    Matrix y = random_matrix(rng, M, N);
    const auto x = random_chain(rng, N + 1, D);
    const auto c = random_rows(rng, M, D, 0.2);
    const GammaArray tau = fixed_gamma(M, 1.5);
    const GammaArray gamma(D, 2.0, 1.0);
    const auto dyn = random_dynamics(rng, N, D);
    const Hyperparameters h;

    // Explicit loop over every cell.
    for (Index m = 0; m < M; ++m) {
        Matrix prec = gamma.mean().asDiagonal();
        Vector lin = Vector::Zero(D);
        double rate = h.b_tau, shape = h.a_tau;
        for (Index n = 0; n < N; ++n) {
            if (!mask(m, n)) continue;
            const Matrix xx = x.covs[n + 1] + x.means[n + 1] * x.means[n + 1].transpose();
            prec += tau.mean()[m] * xx;
            lin += tau.mean()[m] * y(m, n) * x.means[n + 1];
            const Matrix cc = c.covs[m] + c.means[m] * c.means[m].transpose();
            rate += 0.5 * (y(m, n) * y(m, n) - 2.0 * y(m, n) * c.means[m].dot(x.means[n + 1]) + (cc * xx).trace());
            shape += 0.5;
        }
        GaussianRows cq;
        update_C(cq, ObservationSet(y, mask), x, tau, gamma);
        EXPECT_LT(max_rel_err(cq.covs[m], prec.inverse()), 1e-12);
        EXPECT_LT(max_rel_err(cq.means[m], prec.inverse() * lin), 1e-12);
        GammaArray tq;
        update_tau(tq, ObservationSet(y, mask), x, c, h, false);
        EXPECT_NEAR(tq.rate[m], rate, 1e-12 * std::abs(rate));
        EXPECT_DOUBLE_EQ(tq.shape[m], shape);
    }

    // Garbage in masked cells changes nothing.
    Matrix y2 = y;
    for (Index m = 0; m < M; ++m)
        for (Index n = 0; n < N; ++n)
            if (!mask(m, n)) y2(m, n) = 1e6 * (m + 1) + n;
    GaussianRows c1, c2;
    update_C(c1, ObservationSet(y, mask), x, tau, gamma);
    update_C(c2, ObservationSet(y2, mask), x, tau, gamma);
    for (Index m = 0; m < M; ++m) EXPECT_EQ(c1.means[m], c2.means[m]);
    GaussianChainPosterior x1, x2;
    update_X(x1, ObservationSet(y, mask), c, tau, dyn, Vector::Zero(D), Matrix::Identity(D, D));
    update_X(x2, ObservationSet(y2, mask), c, tau, dyn, Vector::Zero(D), Matrix::Identity(D, D));
    for (Index n = 0; n <= N; ++n) EXPECT_EQ(x1.means[n], x2.means[n]);
}

// ---- B, beta ----

TEST(UpdateB, ConstantWeightsReduceToRegression) {
    std::mt19937_64 rng(7);
    const Index D = 3, N = 12;
    const auto x = random_chain(rng, N + 1, D);
    GammaArray beta(D, 2.0, 3.0);
    beta.rate[1] = 0.5;
    const std::vector<WeightMoments> ones(N, {Vector::Ones(1), Matrix::Ones(1, 1)});
    GaussianRows b;
    update_B(b, beta, x, ones, 1);

    Matrix prec = beta.mean().asDiagonal();
    Matrix cross = Matrix::Zero(D, D);  // sum_n <x_n x_{n-1}^T>
    for (Index n = 1; n <= N; ++n) {
        prec += x.covs[n - 1] + x.means[n - 1] * x.means[n - 1].transpose();
        cross += x.cross_covs[n - 1] + x.means[n] * x.means[n - 1].transpose();
    }
    const Matrix cov = prec.inverse();
    for (Index c = 0; c < D; ++c) {
        EXPECT_LT(max_rel_err(b.covs[c], cov), 1e-12);
        EXPECT_LT(max_rel_err(b.means[c], cov * cross.row(c).transpose()), 1e-12);
    }
}

TEST(UpdateB, EmptyChainIsPrior) {
    const GammaArray beta(4, 2.0, 8.0);
    GaussianRows b;
    update_B(b, beta, point_chain({Vector::Ones(2)}), std::vector<WeightMoments>{}, 2);
    for (Index c = 0; c < 2; ++c) {
        EXPECT_EQ(b.means[c], Vector::Zero(4));
        EXPECT_LT((b.covs[c] - 4.0 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(UpdateB, RidgeNormalEquations) {
    std::mt19937_64 rng(8);
    const Index N = 50;
    std::vector<Vector> xm;
    std::vector<WeightMoments> w;
    for (Index n = 0; n <= N; ++n) xm.push_back(random_vector(rng, 1));
    for (Index n = 0; n < N; ++n) {
        const Vector s = random_vector(rng, 2);
        w.push_back({s, s * s.transpose()});
    }
    const GammaArray beta(2, 1.0, 2.0);  // mean 0.5
    GaussianRows b;
    update_B(b, beta, point_chain(xm), w, 2);

    // x_n = (b1 s1n + b2 s2n) x_{n-1}; features phi_n = s_n x_{n-1}.
    Eigen::Matrix2d ata = 0.5 * Eigen::Matrix2d::Identity();
    Eigen::Vector2d aty = Eigen::Vector2d::Zero();
    for (Index n = 1; n <= N; ++n) {
        const Eigen::Vector2d phi = w[n - 1].mean * xm[n - 1][0];
        ata += phi * phi.transpose();
        aty += phi * xm[n][0];
    }
    const Eigen::Vector2d sol = ata.ldlt().solve(aty);
    EXPECT_LT((b.means[0] - sol).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(max_rel_err(b.covs[0], ata.inverse()), 1e-10);
}

TEST(UpdateBeta, SharedAcrossSlices) {
    std::mt19937_64 rng(9);
    const Hyperparameters h;
    GammaArray beta;
    const auto b = random_rows(rng, 3, 6, 0.1);  // D = 3, K = 2
    update_beta(beta, b, h);
    EXPECT_DOUBLE_EQ(beta.shape[4], h.a_beta + 1.5);
    double sum = 0.0;
    for (Index c = 0; c < 3; ++c) sum += b.covs[c](4, 4) + b.means[c][4] * b.means[c][4];
    EXPECT_NEAR(beta.rate[4], h.b_beta + 0.5 * sum, 1e-12);
}

// ---- A, alpha ----

TEST(UpdateA, EmptyChainIsPrior) {
    GammaArray alpha(2, 3.0, 1.5);
    GaussianRows a;
    update_A(a, alpha, point_chain({Vector::Ones(2)}));
    for (Index k = 0; k < 2; ++k) {
        EXPECT_EQ(a.means[k], Vector::Zero(2));
        EXPECT_LT((a.covs[k] - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(UpdateAlpha, ShapeFromK) {
    std::mt19937_64 rng(10);
    const Hyperparameters h;
    GammaArray alpha;
    update_alpha(alpha, random_rows(rng, 2, 2, 0.1), h);
    EXPECT_DOUBLE_EQ(alpha.shape[1], h.a_alpha + 1.0);
}

TEST(UpdateA, RecoversDecay) {
    std::vector<Vector> sm{Vector::Constant(1, 10.0)};
    for (int n = 1; n <= 500; ++n) sm.push_back(0.9 * sm.back());
    GaussianRows a;
    update_A(a, GammaArray(1, 1.0, 1.0), point_chain(sm));
    EXPECT_NEAR(a.means[0][0], 0.9, 1e-2);
}

// ---- X ----

TEST(UpdateX, NoDataZeroDynamics) {
    const Index D = 2, N = 4;
    const ObservationSet data(Matrix::Zero(1, N), Mask::Constant(1, N, false));
    const std::vector<DynamicsMoments> dyn(N, {Matrix::Zero(D, D), Matrix::Zero(D, D)});
    GaussianChainPosterior x;
    update_X(x, data, point_rows({Vector::Ones(D)}), fixed_gamma(1, 1.0), dyn, Vector::Zero(D),
             Matrix::Identity(D, D));
    for (Index n = 0; n <= N; ++n) EXPECT_LT(x.means[n].cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((x.covs[0] - Matrix::Identity(D, D)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(UpdateX, DenseOracle) {
    std::mt19937_64 rng(11);
    const Index D = 2, N = 5, M = 3;
    const Mask mask = random_mask(rng, M, N, 0.6);
    const Matrix y = random_matrix(rng, M, N);
    const ObservationSet data(y, mask);
    const auto c = random_rows(rng, M, D, 0.2);
    GammaArray tau = fixed_gamma(M, 1.0);
    tau.rate[1] = tau.shape[1] / 3.0;
    const auto dyn = random_dynamics(rng, N, D);
    const Vector mu0 = random_vector(rng, D);
    const Matrix lambda0 = random_spd(rng, D, 0.5);

    // Dense assembly, one factor at a time.
    const Index len = N + 1;
    Matrix J = Matrix::Zero(D * len, D * len);
    Vector h = Vector::Zero(D * len);
    J.block(0, 0, D, D) += lambda0;
    h.head(D) += lambda0 * mu0;
    for (Index n = 1; n <= N; ++n) {
        // E_W (x_n - W x_{n-1})^T (x_n - W x_{n-1})
        Matrix q(2 * D, 2 * D);
        q << dyn[n - 1].second, -dyn[n - 1].mean.transpose(), -dyn[n - 1].mean, Matrix::Identity(D, D);
        J.block((n - 1) * D, (n - 1) * D, 2 * D, 2 * D) += q;
        for (Index m = 0; m < M; ++m) {
            if (!mask(m, n - 1)) continue;
            const double t = tau.mean()[m];
            J.block(n * D, n * D, D, D) += t * c.second_moment(m);
            h.segment(n * D, D) += t * y(m, n - 1) * c.means[m];
        }
    }
    const Matrix cov = J.inverse();
    const Vector mean = cov * h;

    GaussianChainPosterior x;
    update_X(x, data, c, tau, dyn, mu0, lambda0);
    for (Index n = 0; n <= N; ++n) {
        EXPECT_LT(max_rel_err(x.means[n], mean.segment(n * D, D)), 1e-10);
        EXPECT_LT(max_rel_err(x.covs[n], cov.block(n * D, n * D, D, D)), 1e-10);
        if (n > 0) {
            EXPECT_LT(max_rel_err(x.cross_covs[n - 1], cov.block(n * D, (n - 1) * D, D, D)), 1e-10);
        }
    }
}

TEST(UpdateX, ScalarKalmanSmootherOracle) {
    const double w = 0.95, cval = 1.3, tau = 4.0, mu0 = 0.5, lambda0 = 2.0;
    const Index N = 30;
    std::mt19937_64 rng(12);
    Matrix y = random_matrix(rng, 1, N);
    Mask mask = Mask::Constant(1, N, true);
    for (Index n = 10; n < 15; ++n) mask(0, n) = false;
    mask(0, 22) = false;
    const std::vector<DynamicsMoments> dyn(N, {Matrix::Constant(1, 1, w), Matrix::Constant(1, 1, w * w)});
    GaussianChainPosterior x;
    update_X(x, ObservationSet(y, mask), point_rows({Vector::Constant(1, cval)}), fixed_gamma(1, tau), dyn,
             Vector::Constant(1, mu0), Matrix::Constant(1, 1, lambda0));

    // Kalman filter.
    std::vector<double> mf(N + 1), pf(N + 1), mp(N + 1), pp(N + 1);
    mf[0] = mu0;
    pf[0] = 1.0 / lambda0;
    for (Index n = 1; n <= N; ++n) {
        mp[n] = w * mf[n - 1];
        pp[n] = w * w * pf[n - 1] + 1.0;
        if (mask(0, n - 1)) {
            const double gain = pp[n] * cval / (cval * cval * pp[n] + 1.0 / tau);
            mf[n] = mp[n] + gain * (y(0, n - 1) - cval * mp[n]);
            pf[n] = (1.0 - gain * cval) * pp[n];
        } else {
            mf[n] = mp[n];
            pf[n] = pp[n];
        }
    }
    // RTS smoother.
    std::vector<double> ms(N + 1), ps(N + 1), lag(N);
    ms[N] = mf[N];
    ps[N] = pf[N];
    for (Index n = N - 1; n >= 0; --n) {
        const double j = pf[n] * w / pp[n + 1];
        ms[n] = mf[n] + j * (ms[n + 1] - mp[n + 1]);
        ps[n] = pf[n] + j * j * (ps[n + 1] - pp[n + 1]);
        lag[n] = j * ps[n + 1];
    }
    for (Index n = 0; n <= N; ++n) {
        EXPECT_NEAR(x.means[n][0], ms[n], 1e-10);
        EXPECT_NEAR(x.covs[n](0, 0), ps[n], 1e-10);
        if (n > 0) {
            EXPECT_NEAR(x.cross_covs[n - 1](0, 0), lag[n - 1], 1e-10);
        }
    }
}

TEST(UpdateX, SecondMomentsArePsd) {
    std::mt19937_64 rng(13);
    const Index D = 3, N = 20, M = 4;
    const ObservationSet data(random_matrix(rng, M, N), random_mask(rng, M, N, 0.5));
    GaussianChainPosterior x;
    update_X(x, data, random_rows(rng, M, D, 0.3), fixed_gamma(M, 2.0), random_dynamics(rng, N, D),
             Vector::Zero(D), 1e-6 * Matrix::Identity(D, D));
    for (Index n = 0; n <= N; ++n) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(x.covs[n]);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

// ---- S ----

TEST(UpdateS, ZeroBasisGivesPriorChain) {
    const Index K = 2, D = 2, N = 8;
    std::mt19937_64 rng(14);
    const auto x = random_chain(rng, N + 1, D);
    const auto bm = basis_moments(point_rows(std::vector<Vector>(D, Vector::Zero(K * D))), K);
    const Matrix a_true = (Matrix(2, 2) << 0.9, 0.2, -0.1, 0.8).finished();
    const auto a = point_rows({a_true.row(0).transpose(), a_true.row(1).transpose()});
    const Vector mu0 = (Vector(2) << 1.0, -2.0).finished();
    const Matrix v0 = random_spd(rng, K, 1.0);
    GaussianChainPosterior s;
    update_S(s, x, bm, a, mu0, v0);

    // Prior marginals by forward propagation.
    Vector m = mu0;
    Matrix p = v0.inverse();
    for (Index n = 0; n <= N; ++n) {
        if (n > 0) {
            m = a_true * m;
            p = a_true * p * a_true.transpose() + Matrix::Identity(K, K);
        }
        EXPECT_LT(max_rel_err(s.means[n], m), 1e-10);
        EXPECT_LT(max_rel_err(s.covs[n], p), 1e-10);
    }
}

TEST(UpdateS, DenseOracle) {
    std::mt19937_64 rng(15);
    const Index K = 2, D = 2, N = 5;
    const auto x = random_chain(rng, N + 1, D);
    const auto qb = random_rows(rng, D, K * D, 0.1);
    const auto qa = random_rows(rng, K, K, 0.05);
    const Vector mu0 = random_vector(rng, K);
    const Matrix v0 = random_spd(rng, K, 0.5);

    const Index len = N + 1;
    Matrix J = Matrix::Zero(K * len, K * len);
    Vector h = Vector::Zero(K * len);
    J.block(0, 0, K, K) += v0;
    h.head(K) += v0 * mu0;
    Matrix ata = Matrix::Zero(K, K), amean(K, K);
    for (Index k = 0; k < K; ++k) {
        ata += qa.covs[k] + qa.means[k] * qa.means[k].transpose();
        amean.row(k) = qa.means[k].transpose();
    }
    for (Index n = 1; n <= N; ++n) {
        Matrix q(2 * K, 2 * K);
        q << ata, -amean.transpose(), -amean, Matrix::Identity(K, K);
        J.block((n - 1) * K, (n - 1) * K, 2 * K, 2 * K) += q;
        // sum_c E[(sum_k s_k (B_k x_{n-1})_c - x_{cn})^2] expanded entry by entry.
        const Matrix xx = x.second_moment(n - 1);
        const Matrix xcross = x.cross_moment(n);  // <x_n x_{n-1}^T>
        for (Index k = 0; k < K; ++k) {
            for (Index l = 0; l < K; ++l) {
                double theta = 0.0;
                for (Index c = 0; c < D; ++c) {
                    const Matrix bb = qb.second_moment(c);
                    for (Index i = 0; i < D; ++i)
                        for (Index j = 0; j < D; ++j) theta += xx(i, j) * bb(i * K + k, j * K + l);
                }
                J(n * K + k, n * K + l) += theta;
            }
            double lin = 0.0;
            for (Index c = 0; c < D; ++c)
                for (Index j = 0; j < D; ++j) lin += qb.means[c][j * K + k] * xcross(c, j);
            h[n * K + k] += lin;
        }
    }
    const Matrix cov = J.inverse();
    const Vector mean = cov * h;

    GaussianChainPosterior s;
    update_S(s, x, basis_moments(qb, K), qa, mu0, v0);
    for (Index n = 0; n <= N; ++n) {
        EXPECT_LT(max_rel_err(s.means[n], mean.segment(n * K, K)), 1e-10);
        EXPECT_LT(max_rel_err(s.covs[n], cov.block(n * K, n * K, K, K)), 1e-10);
        if (n > 0) {
            EXPECT_LT(max_rel_err(s.cross_covs[n - 1], cov.block(n * K, (n - 1) * K, K, K)), 1e-10);
        }
    }
}

TEST(UpdateS, ScalarWeightFollowsDoublingChain) {
    const Index D = 2, N = 10;
    std::vector<Vector> xm{(Vector(2) << 1.0, 0.5).finished()};
    for (Index n = 1; n <= N; ++n) xm.push_back(2.0 * xm.back());
    const auto bm = basis_moments(point_rows(basis_slices({Matrix::Identity(D, D)})), 1);
    GaussianChainPosterior s;
    update_S(s, point_chain(xm), bm, point_rows({Vector::Ones(1)}), Vector::Zero(1), 1e-6 * Matrix::Ones(1, 1));
    for (Index n = 1; n <= N; ++n) EXPECT_NEAR(s.means[n][0], 2.0, 0.05);
}
