#ifndef TVDYN_MODEL_HPP
#define TVDYN_MODEL_HPP

#include "common.hpp"
#include "gamma.hpp"
#include "gaussian_chain.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tvdyn {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// M x N data with a missing-value mask. Column n holds y_{n+1}, which is
/// emitted by chain state x_{n+1}.
class ObservationSet {
public:
    ObservationSet() = default;

    ObservationSet(Matrix values, Mask observed) : values_(std::move(values)), observed_(std::move(observed)) {
        require(values_.rows() == observed_.rows() && values_.cols() == observed_.cols(),
                "ObservationSet: mask shape does not match values");
        for (Index m = 0; m < rows(); ++m)
            for (Index n = 0; n < cols(); ++n)
                require(!observed_(m, n) || std::isfinite(values_(m, n)),
                        "ObservationSet: observed value is not finite");
        index();
    }

    /// Fully observed data.
    explicit ObservationSet(Matrix values)
        : ObservationSet(values, Mask::Constant(values.rows(), values.cols(), true)) {}

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    const Mask& observed() const { return observed_; }
    bool observed(Index m, Index n) const { return observed_(m, n); }
    double value(Index m, Index n) const { return values_(m, n); }

    /// Observed time indices of row m.
    const std::vector<Index>& row_set(Index m) const { return row_sets_[m]; }
    /// Observed rows at column n.
    const std::vector<Index>& col_set(Index n) const { return col_sets_[n]; }
    Index row_count(Index m) const { return static_cast<Index>(row_sets_[m].size()); }
    Index total_observed() const { return observed_.count(); }

private:
    void index() {
        row_sets_.assign(rows(), {});
        col_sets_.assign(cols(), {});
        for (Index m = 0; m < rows(); ++m)
            for (Index n = 0; n < cols(); ++n)
                if (observed_(m, n)) {
                    row_sets_[m].push_back(n);
                    col_sets_[n].push_back(m);
                }
    }

    Matrix values_;
    Mask observed_;
    std::vector<std::vector<Index>> row_sets_;
    std::vector<std::vector<Index>> col_sets_;
};

struct Hyperparameters {
    double a_alpha = 1e-6, b_alpha = 1e-6;
    double a_beta = 1e-6, b_beta = 1e-6;
    double a_gamma = 1e-6, b_gamma = 1e-6;
    double a_tau = 1e-6, b_tau = 1e-6;
};

struct Schedule {
    int warmup_sweeps = 5;
    int max_sweeps = 200;
    double elbo_rel_tol = 1e-6;
    bool rotate = true;
    /// Evaluate the bound after every coordinate update and abort on decrease.
    bool check_each_update = false;
    /// Allowed relative decrease before a step counts as non-monotone.
    double monotone_rel_tol = 1e-8;
};

struct ModelConfig {
    Index D = 1;
    Index K = 1;
    Hyperparameters hyper;
    Vector mu0_x;
    Matrix lambda0;
    Vector mu0_s;
    Matrix v0;
    bool isotropic_noise = true;
    Schedule schedule;
    std::uint64_t seed = 0;

    /// Broad priors: zero initial means, 1e-6 * I initial precisions.
    static ModelConfig make(Index D, Index K, std::uint64_t seed = 0) {
        require(D >= 1, "ModelConfig: D must be positive");
        require(K >= 1, "ModelConfig: K must be positive");
        ModelConfig cfg;
        cfg.D = D;
        cfg.K = K;
        cfg.mu0_x = Vector::Zero(D);
        cfg.lambda0 = 1e-6 * Matrix::Identity(D, D);
        cfg.mu0_s = Vector::Zero(K);
        cfg.v0 = 1e-6 * Matrix::Identity(K, K);
        cfg.seed = seed;
        return cfg;
    }

    void validate() const {
        require(D >= 1, "ModelConfig: D must be positive");
        require(K >= 1, "ModelConfig: K must be positive");
        const auto& h = hyper;
        for (double v : {h.a_alpha, h.b_alpha, h.a_beta, h.b_beta, h.a_gamma, h.b_gamma, h.a_tau, h.b_tau})
            require(v > 0.0 && std::isfinite(v), "ModelConfig: hyperparameters must be positive");
        require(mu0_x.size() == D && lambda0.rows() == D && lambda0.cols() == D,
                "ModelConfig: initial-state prior of X has wrong size");
        require(mu0_s.size() == K && v0.rows() == K && v0.cols() == K,
                "ModelConfig: initial-state prior of S has wrong size");
        require((lambda0 - lambda0.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "ModelConfig: lambda0 not symmetric");
        require((v0 - v0.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "ModelConfig: v0 not symmetric");
        require(Eigen::LLT<Matrix>(lambda0).info() == Eigen::Success, "ModelConfig: lambda0 not positive definite");
        require(Eigen::LLT<Matrix>(v0).info() == Eigen::Success, "ModelConfig: v0 not positive definite");
        require(schedule.warmup_sweeps >= 0 && schedule.max_sweeps >= 0, "ModelConfig: negative sweep count");
        require(schedule.elbo_rel_tol >= 0.0, "ModelConfig: negative tolerance");
    }
};

/// Independent Gaussian vectors (rows of C, rows of A, slices of B).
struct GaussianRows {
    std::vector<Vector> means;
    std::vector<Matrix> covs;

    GaussianRows() = default;
    GaussianRows(Index count, Index dim) : means(count, Vector::Zero(dim)), covs(count, Matrix::Identity(dim, dim)) {}

    Index count() const { return static_cast<Index>(means.size()); }
    Index dim() const { return means.empty() ? 0 : means.front().size(); }
    Matrix second_moment(Index i) const { return covs[i] + means[i] * means[i].transpose(); }

    /// Means stacked as rows.
    Matrix mean_matrix() const {
        Matrix out(count(), dim());
        for (Index i = 0; i < count(); ++i) out.row(i) = means[i].transpose();
        return out;
    }

    /// Sum of second moments over all rows.
    Matrix second_moment_sum() const {
        Matrix out = Matrix::Zero(dim(), dim());
        for (Index i = 0; i < count(); ++i) out += second_moment(i);
        return out;
    }

    /// Maps every vector v to T v.
    void transform(const Matrix& t) {
        for (auto& m : means) m = t * m;
        for (auto& c : covs) c = symmetrized(t * c * t.transpose());
    }

    double entropy() const {
        double h = 0.0;
        for (const auto& c : covs)
            h += 0.5 * static_cast<double>(c.rows()) * (1.0 + std::log(2.0 * M_PI)) + 0.5 * logdet_spd(c);
        return h;
    }
};

// The basis tensor B is K x D x D with entries b_{k c j} = [B_k]_{c j}.
// q(B) factorizes over the row index c: slice c is the K x D matrix B_{:c:}
// (row c of every B_k), vectorized column-major so that entry (k, j) sits at
// j * K + k. The ARD precision beta_{k j} of column j of B_k uses the same
// flat index, and is shared by all D slices.
inline Index basis_index(Index k, Index j, Index K) { return j * K + k; }

struct FactorPosteriors {
    GaussianChainPosterior x;  // D-dim, x_0..x_N
    GaussianChainPosterior s;  // K-dim, s_0..s_N
    GaussianRows c;            // M rows, D-dim
    GaussianRows b;            // D slices, KD-dim
    GaussianRows a;            // K rows, K-dim
    GammaArray tau;            // M
    GammaArray gamma;          // D
    GammaArray beta;           // K*D, flat index basis_index(k, j)
    GammaArray alpha;          // K
    /// Mixing weights held at s_n = 1 (K = 1); q(S), q(A), q(alpha) are then
    /// not part of the model.
    bool pinned_weights = false;

    Index D() const { return x.dim(); }
    Index K() const { return s.dim(); }
    Index N() const { return x.length() - 1; }
    Index M() const { return c.count(); }
};

/// Mean and second moment of a weight vector s_n.
struct WeightMoments {
    Vector mean;
    Matrix second;
};

/// <W_n> and <W_n^T W_n>.
struct DynamicsMoments {
    Matrix mean;
    Matrix second;
};

/// Sufficient statistics of q(B) used by every W-moment computation.
struct BasisMoments {
    std::vector<Matrix> mean;  // <B_k>
    Matrix gram;               // sum_c <vec(B_{:c:}) vec(B_{:c:})^T>, KD x KD

    Index K() const { return static_cast<Index>(mean.size()); }
    Index D() const { return mean.empty() ? 0 : mean.front().rows(); }

    /// <B_k^T B_l>
    Matrix cross(Index k, Index l) const {
        const Index D_ = D(), K_ = K();
        Matrix out(D_, D_);
        for (Index i = 0; i < D_; ++i)
            for (Index j = 0; j < D_; ++j) out(i, j) = gram(basis_index(k, i, K_), basis_index(l, j, K_));
        return out;
    }
};

inline BasisMoments basis_moments(const GaussianRows& qb, Index K) {
    const Index D = qb.count();
    require(qb.dim() == K * D, "basis_moments: slice dimension must be K*D");
    BasisMoments bm;
    bm.mean.assign(K, Matrix::Zero(D, D));
    for (Index c = 0; c < D; ++c)
        for (Index k = 0; k < K; ++k)
            for (Index j = 0; j < D; ++j) bm.mean[k](c, j) = qb.means[c][basis_index(k, j, K)];
    bm.gram = qb.second_moment_sum();
    return bm;
}

/// Flattens basis matrices B_1..B_K into the D slice vectors of q(B).
inline std::vector<Vector> basis_slices(const std::vector<Matrix>& basis) {
    const Index K = static_cast<Index>(basis.size());
    require(K >= 1, "basis_slices: empty basis");
    const Index D = basis.front().rows();
    std::vector<Vector> slices(D, Vector::Zero(K * D));
    for (Index k = 0; k < K; ++k)
        for (Index c = 0; c < D; ++c)
            for (Index j = 0; j < D; ++j) slices[c][basis_index(k, j, K)] = basis[k](c, j);
    return slices;
}

/// <W> = sum_k <s_k> <B_k>,  <W^T W> = sum_kl <s s^T>_kl <B_k^T B_l>.
inline DynamicsMoments compute_W_moments(const WeightMoments& w, const BasisMoments& bm) {
    const Index K = bm.K(), D = bm.D();
    require(w.mean.size() == K && w.second.rows() == K && w.second.cols() == K,
            "compute_W_moments: weight moments do not match K");
    DynamicsMoments out;
    out.mean = Matrix::Zero(D, D);
    for (Index k = 0; k < K; ++k) out.mean += w.mean[k] * bm.mean[k];
    out.second.resize(D, D);
    for (Index i = 0; i < D; ++i)
        for (Index j = 0; j < D; ++j)
            out.second(i, j) = w.second.cwiseProduct(bm.gram.block(i * K, j * K, K, K)).sum();
    out.second = symmetrized(out.second);
    return out;
}

/// Theta = sum_ij <x x^T>_ij <B_{::i} B_{::j}^T>, the K x K quadratic form a
/// weight vector picks up from one transition.
inline Matrix weight_quadratic(const Matrix& xx_prev, const BasisMoments& bm) {
    const Index K = bm.K(), D = bm.D();
    Matrix out = Matrix::Zero(K, K);
    for (Index i = 0; i < D; ++i)
        for (Index j = 0; j < D; ++j) out += xx_prev(i, j) * bm.gram.block(i * K, j * K, K, K);
    return symmetrized(out);
}

/// Weight moments for n = 1..N taken from a mixing-weight chain.
inline std::vector<WeightMoments> chain_weight_moments(const GaussianChainPosterior& s) {
    std::vector<WeightMoments> out;
    out.reserve(s.length() > 0 ? s.length() - 1 : 0);
    for (Index n = 1; n < s.length(); ++n) out.push_back({s.means[n], s.second_moment(n)});
    return out;
}

inline std::vector<DynamicsMoments> dynamics_moments(std::span<const WeightMoments> weights, const BasisMoments& bm) {
    std::vector<DynamicsMoments> out;
    out.reserve(weights.size());
    for (const auto& w : weights) out.push_back(compute_W_moments(w, bm));
    return out;
}

namespace detail {

inline Vector standard_normal(std::mt19937_64& rng, Index n, double scale) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = scale * dist(rng);
    return v;
}

constexpr double kInitialWeightVariance = 1e-2;
constexpr double kInitialBasisVariance = 1e-2;
constexpr double kInitialSecondaryScale = 0.1;

/// X and C initialization shared by every model variant so that identical
/// seeds give identical draws.
inline void init_observation_part(Index D, Index M, Index N, std::mt19937_64& rng, GaussianChainPosterior& x,
                                  GaussianRows& c) {
    std::vector<Vector> xm(N + 1);
    std::vector<Matrix> xc(N + 1, Matrix::Identity(D, D));
    for (auto& v : xm) v = standard_normal(rng, D, 1.0);
    x = GaussianChainPosterior::independent(std::move(xm), std::move(xc));
    c = GaussianRows(M, D);
    for (auto& v : c.means) v = standard_normal(rng, D, 1.0);
}

}  // namespace detail

/// Random initialization near a constant-dynamics model: s_1 = 1 and B_1 = I;
/// the remaining weights and bases are drawn at scale 0.1. With K = 1 the
/// weights are pinned to exactly 1.
inline FactorPosteriors init_posteriors(const ModelConfig& config, const ObservationSet& data, std::uint64_t seed) {
    config.validate();
    const Index D = config.D, K = config.K, M = data.rows(), N = data.cols();
    const auto& h = config.hyper;
    std::mt19937_64 rng(seed);

    FactorPosteriors q;
    detail::init_observation_part(D, M, N, rng, q.x, q.c);

    q.pinned_weights = (K == 1);
    std::vector<Vector> sm(N + 1);
    std::vector<Matrix> sc(N + 1);
    for (Index n = 0; n <= N; ++n) {
        sm[n] = Vector::Zero(K);
        sm[n][0] = 1.0;
        if (K > 1) sm[n].tail(K - 1) = detail::standard_normal(rng, K - 1, detail::kInitialSecondaryScale);
        sc[n] = (q.pinned_weights ? 0.0 : detail::kInitialWeightVariance) * Matrix::Identity(K, K);
    }
    if (q.pinned_weights) {
        q.s.means = std::move(sm);
        q.s.covs = std::move(sc);
        q.s.cross_covs.assign(N, Matrix::Zero(K, K));
        q.s.log_det_precision = 0.0;
    } else {
        q.s = GaussianChainPosterior::independent(std::move(sm), std::move(sc));
    }

    q.b = GaussianRows(D, K * D);
    for (Index c = 0; c < D; ++c) {
        Vector& mu = q.b.means[c];
        mu.setZero();
        mu[basis_index(0, c, K)] = 1.0;
        q.b.covs[c] = detail::kInitialBasisVariance * Matrix::Identity(K * D, K * D);
    }
    if (K > 1)
        for (Index c = 0; c < D; ++c)
            for (Index j = 0; j < D; ++j)
                for (Index k = 1; k < K; ++k)
                    q.b.means[c][basis_index(k, j, K)] = detail::kInitialSecondaryScale *
                                                         std::normal_distribution<double>(0.0, 1.0)(rng);

    q.a = GaussianRows(K, K);
    for (Index k = 0; k < K; ++k) {
        q.a.means[k] = Vector::Unit(K, k);
        q.a.covs[k] = detail::kInitialWeightVariance * Matrix::Identity(K, K);
    }

    q.tau = GammaArray(M, h.a_tau, h.b_tau);
    q.gamma = GammaArray(D, h.a_gamma, h.b_gamma);
    q.beta = GammaArray(K * D, h.a_beta, h.b_beta);
    q.alpha = GammaArray(K, h.a_alpha, h.b_alpha);
    return q;
}

}  // namespace tvdyn

#endif  // TVDYN_MODEL_HPP
