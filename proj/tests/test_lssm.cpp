#include "test_util.hpp"

#include <tvdyn/lssm.hpp>

#include <gtest/gtest.h>

using namespace tvdyn;
using namespace tvdyn::test;

namespace {

/// Data from a constant-dynamics model.
ObservationSet simulate_lssm(std::mt19937_64& rng, Index M, Index N, Index D, double missing = 0.2) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution drop(missing);
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, D, D));
    const Matrix w = 0.97 * Matrix(qr.householderQ());
    const Matrix c = random_matrix(rng, M, D);
    Vector x = random_vector(rng, D);
    Matrix y(M, N);
    Mask mask(M, N);
    for (Index n = 0; n < N; ++n) {
        x = w * x + 0.3 * random_vector(rng, D);
        for (Index m = 0; m < M; ++m) {
            y(m, n) = c.row(m).dot(x) + 0.1 * z(rng);
            mask(m, n) = !drop(rng);
        }
    }
    return ObservationSet(y, mask);
}

double rms_diff(const Matrix& a, const Matrix& b) { return std::sqrt((a - b).squaredNorm() / a.size()); }

}  // namespace

TEST(Lssm, WUpdateAgreesWithSingleBasisUpdate) {
    std::mt19937_64 rng(1);
    const auto x = solve_chain(random_chain_precision(rng, 15, 3), std::vector<Vector>(15, Vector::Ones(3)));
    GammaArray beta(3, 2.0, 1.0);
    beta.rate[2] = 5.0;
    GaussianRows w, b;
    update_W(w, beta, x);
    update_B(b, beta, x, std::vector<WeightMoments>(14, {Vector::Ones(1), Matrix::Ones(1, 1)}), 1);
    for (Index d = 0; d < 3; ++d) {
        EXPECT_LT(max_rel_err(w.means[d], b.means[d]), 1e-12);
        EXPECT_LT(max_rel_err(w.covs[d], b.covs[d]), 1e-12);
    }
}

TEST(Lssm, ElboMonotone) {
    std::mt19937_64 rng(2);
    const auto data = simulate_lssm(rng, 5, 50, 3);
    auto cfg = ModelConfig::make(3, 1, 2);
    cfg.schedule.max_sweeps = 40;
    cfg.schedule.check_each_update = true;
    EXPECT_NO_THROW(fit_lssm(data, cfg));
}

TEST(Lssm, SingleBasisTimeVaryingFitMatchesClassicalFit) {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        std::mt19937_64 rng(seed);
        const auto data = simulate_lssm(rng, 6, 80, 3);
        auto cfg = ModelConfig::make(3, 1, seed);
        cfg.schedule.max_sweeps = 100;
        const auto tvd = fit(data, cfg);
        const auto lssm = fit_lssm(data, cfg);
        EXPECT_EQ(tvd.sweeps, lssm.sweeps);
        EXPECT_NEAR(tvd.elbo, lssm.elbo, 1e-8 * std::abs(lssm.elbo));
        EXPECT_LT(rms_diff(reconstruct(tvd.posteriors).mean, reconstruct(lssm.posteriors).mean), 1e-6);
        const Matrix w_tvd = basis_moments(tvd.posteriors.b, 1).mean[0];
        EXPECT_LT((w_tvd - lssm.posteriors.w.mean_matrix()).norm(), 0.1);
    }
}
