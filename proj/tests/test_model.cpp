#include "test_util.hpp"

#include <tvdyn/model.hpp>

#include <gtest/gtest.h>

using namespace tvdyn;
using namespace tvdyn::test;

namespace {

ObservationSet small_data(Index M, Index N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return ObservationSet(random_matrix(rng, M, N));
}

}  // namespace

TEST(ObservationSet, IndexSets) {
    Matrix v = Matrix::Zero(2, 3);
    Mask mask(2, 3);
    mask << true, false, true, false, false, false;
    v(1, 1) = std::nan("");
    const ObservationSet obs(v, mask);
    EXPECT_EQ(obs.row_count(0), 2);
    EXPECT_EQ(obs.row_count(1), 0);
    EXPECT_EQ(obs.col_set(1).size(), 0u);
    EXPECT_EQ(obs.col_set(2), std::vector<Index>{0});
}

TEST(ObservationSet, RejectsNonFiniteObservedValue) {
    Matrix v = Matrix::Zero(1, 2);
    v(0, 1) = std::nan("");
    EXPECT_THROW(ObservationSet(v, Mask::Constant(1, 2, true)), InvalidArgument);
}

TEST(InitPosteriors, RejectsBadDimensions) {
    auto cfg = ModelConfig::make(2, 2);
    cfg.K = 0;
    EXPECT_THROW(init_posteriors(cfg, small_data(2, 5, 1), 1), InvalidArgument);
    EXPECT_THROW(ModelConfig::make(0, 1), InvalidArgument);
}

TEST(InitPosteriors, SingleBasisIsConstantDynamics) {
    const auto cfg = ModelConfig::make(3, 1);
    const auto q = init_posteriors(cfg, small_data(4, 10, 2), 7);
    EXPECT_TRUE(q.pinned_weights);
    for (Index n = 0; n <= 10; ++n) {
        EXPECT_EQ(q.s.means[n][0], 1.0);
        EXPECT_EQ(q.s.covs[n](0, 0), 0.0);
    }
    const auto bm = basis_moments(q.b, 1);
    EXPECT_TRUE(bm.mean[0].isIdentity(0.0));
}

TEST(InitPosteriors, InitialDynamicsNearIdentity) {
    const auto cfg = ModelConfig::make(5, 4);
    const auto q = init_posteriors(cfg, small_data(3, 20, 3), 99);
    EXPECT_FALSE(q.pinned_weights);
    const auto bm = basis_moments(q.b, 4);
    const auto w = compute_W_moments({q.s.means[1], q.s.second_moment(1)}, bm);
    EXPECT_LT((w.mean - Matrix::Identity(5, 5)).norm(), 0.5);
    for (Index n = 0; n <= 20; ++n) EXPECT_EQ(q.s.means[n][0], 1.0);
    // Gamma factors start at the prior.
    EXPECT_EQ(q.tau.shape[0], cfg.hyper.a_tau);
    EXPECT_EQ(q.beta.rate[7], cfg.hyper.b_beta);
}

TEST(InitPosteriors, DeterministicUnderSeed) {
    const auto cfg = ModelConfig::make(3, 3);
    const auto data = small_data(4, 12, 4);
    const auto a = init_posteriors(cfg, data, 42);
    const auto b = init_posteriors(cfg, data, 42);
    for (Index n = 0; n <= 12; ++n) {
        EXPECT_EQ(a.x.means[n], b.x.means[n]);
        EXPECT_EQ(a.s.means[n], b.s.means[n]);
    }
    for (Index c = 0; c < 3; ++c) EXPECT_EQ(a.b.means[c], b.b.means[c]);
    for (Index m = 0; m < 4; ++m) EXPECT_EQ(a.c.means[m], b.c.means[m]);
    const auto other = init_posteriors(cfg, data, 43);
    EXPECT_NE(a.x.means[3], other.x.means[3]);
}

TEST(WMoments, SingleDeterministicBasis) {
    std::mt19937_64 rng(1);
    const Matrix b1 = random_matrix(rng, 3, 3);
    const auto qb = point_rows(basis_slices({b1}));
    const auto bm = basis_moments(qb, 1);
    const auto w = compute_W_moments({Vector::Ones(1), Matrix::Ones(1, 1)}, bm);
    EXPECT_LT((w.mean - b1).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((w.second - b1.transpose() * b1).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(WMoments, ZeroWeights) {
    const auto cfg = ModelConfig::make(3, 2);
    const auto q = init_posteriors(cfg, small_data(2, 4, 5), 1);
    const auto w = compute_W_moments({Vector::Zero(2), Matrix::Zero(2, 2)}, basis_moments(q.b, 2));
    EXPECT_EQ(w.mean.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(w.second.cwiseAbs().maxCoeff(), 0.0);
}

TEST(WMoments, MatchesMonteCarlo) {
    const Index K = 2, D = 2;
    std::mt19937_64 rng(77);
    const Vector s_mean = random_vector(rng, K);
    const Matrix s_cov = 0.3 * random_spd(rng, K, 0.2);
    GaussianRows qb(D, K * D);
    for (Index c = 0; c < D; ++c) {
        qb.means[c] = random_vector(rng, K * D);
        qb.covs[c] = 0.2 * random_spd(rng, K * D, 0.1);
    }
    const auto formula =
        compute_W_moments({s_mean, s_cov + s_mean * s_mean.transpose()}, basis_moments(qb, K));

    // Oracle: joint samples of (s, B).
    const Eigen::LLT<Matrix> ls(s_cov);
    std::vector<Matrix> lb;
    for (Index c = 0; c < D; ++c) lb.push_back(Eigen::LLT<Matrix>(qb.covs[c]).matrixL());
    const int samples = 1'000'000;
    Matrix sum = Matrix::Zero(D, D), sum_sq = Matrix::Zero(D, D);
    std::normal_distribution<double> z(0.0, 1.0);
    Vector e_s(K), e_b(K * D);
    for (int i = 0; i < samples; ++i) {
        for (Index k = 0; k < K; ++k) e_s[k] = z(rng);
        const Vector s = s_mean + ls.matrixL() * e_s;
        Matrix w = Matrix::Zero(D, D);
        for (Index c = 0; c < D; ++c) {
            for (Index k = 0; k < K * D; ++k) e_b[k] = z(rng);
            const Vector slice = qb.means[c] + lb[c] * e_b;
            for (Index k = 0; k < K; ++k)
                for (Index j = 0; j < D; ++j) w(c, j) += s[k] * slice[basis_index(k, j, K)];
        }
        const Matrix wtw = w.transpose() * w;
        sum += wtw;
        sum_sq += wtw.cwiseProduct(wtw);
    }
    const Matrix mc = sum / samples;
    const Matrix se = ((sum_sq / samples - mc.cwiseProduct(mc)) / samples).cwiseSqrt();
    for (Index i = 0; i < D; ++i)
        for (Index j = 0; j < D; ++j) EXPECT_LE(std::abs(formula.second(i, j) - mc(i, j)), 3.0 * se(i, j));
}

TEST(WMoments, CovarianceOfWIsPsdProperty) {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 30; ++trial) {
        const Index K = 1 + static_cast<Index>(rng() % 4), D = 1 + static_cast<Index>(rng() % 4);
        GaussianRows qb(D, K * D);
        for (Index c = 0; c < D; ++c) {
            qb.means[c] = random_vector(rng, K * D);
            qb.covs[c] = 0.1 * random_spd(rng, K * D, 0.01);
        }
        const Vector m = random_vector(rng, K);
        const Matrix cov = 0.5 * random_spd(rng, K, 0.01);
        const auto w = compute_W_moments({m, cov + m * m.transpose()}, basis_moments(qb, K));
        const Matrix centered = w.second - w.mean.transpose() * w.mean;
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(centered));
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    }
}

TEST(WMoments, SliceRoundTripProperty) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Index K = 1 + static_cast<Index>(rng() % 4), D = 1 + static_cast<Index>(rng() % 5);
        std::vector<Matrix> basis;
        for (Index k = 0; k < K; ++k) basis.push_back(random_matrix(rng, D, D));
        const auto bm = basis_moments(point_rows(basis_slices(basis)), K);
        for (Index k = 0; k < K; ++k) EXPECT_EQ(bm.mean[k], basis[k]);
        for (Index k = 0; k < K; ++k)
            for (Index l = 0; l < K; ++l)
                EXPECT_LT((bm.cross(k, l) - basis[k].transpose() * basis[l]).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(WMoments, RejectsMismatchedWeights) {
    const auto qb = point_rows(basis_slices({Matrix::Identity(2, 2), Matrix::Identity(2, 2)}));
    EXPECT_THROW(compute_W_moments({Vector::Ones(3), Matrix::Ones(3, 3)}, basis_moments(qb, 2)), InvalidArgument);
}
