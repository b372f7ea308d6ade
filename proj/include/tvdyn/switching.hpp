#ifndef TVDYN_SWITCHING_HPP
#define TVDYN_SWITCHING_HPP

// Switching-dynamics baseline: W_n = B_{z_n} with a discrete Markov chain
// z_1..z_N. q(z) comes from a log-domain forward-backward pass; the
// transition matrix and initial distribution have Dirichlet posteriors.

#include "engine.hpp"

#include <boost/math/special_functions/digamma.hpp>

namespace tvdyn {

/// Posterior over z_1..z_N. Row n - 1 of state_probs is q(z_n).
struct HmmPosterior {
    Matrix state_probs;             // N x K
    std::vector<Matrix> pairwise;   // N - 1 blocks, [i, j] = q(z_{n} = i, z_{n+1} = j)
    Matrix transition;              // K x K Dirichlet concentrations, one row per source state
    Vector initial;                 // K Dirichlet concentrations
    double log_normalizer = 0.0;    // log of the forward-backward normalizer

    Index K() const { return state_probs.cols(); }
    Index N() const { return state_probs.rows(); }
};

/// E[log pi] of each Dirichlet row.
inline Matrix dirichlet_log_mean(const Matrix& conc) {
    Matrix out(conc.rows(), conc.cols());
    for (Index i = 0; i < conc.rows(); ++i) {
        const double total = boost::math::digamma(conc.row(i).sum());
        for (Index j = 0; j < conc.cols(); ++j) out(i, j) = boost::math::digamma(conc(i, j)) - total;
    }
    return out;
}

/// KL(Dir(q) || Dir(p)) for one concentration vector.
inline double dirichlet_kl(const Vector& q, const Vector& p) {
    const double q0 = q.sum();
    double kl = std::lgamma(q0) - std::lgamma(p.sum());
    const double dq0 = boost::math::digamma(q0);
    for (Index i = 0; i < q.size(); ++i)
        kl += std::lgamma(p[i]) - std::lgamma(q[i]) + (q[i] - p[i]) * (boost::math::digamma(q[i]) - dq0);
    return kl;
}

namespace detail {

inline double log_sum_exp(const Vector& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

/// Exact marginals of a chain with log-potentials
///   log_init[k] + sum_n log_emission(n, z_n) + sum_n log_trans(z_n, z_{n+1}).
/// Fills state_probs, pairwise and log_normalizer.
inline void forward_backward(const Vector& log_init, const Matrix& log_trans, const Matrix& log_emission,
                             HmmPosterior& out) {
    const Index N = log_emission.rows(), K = log_emission.cols();
    require(log_init.size() == K && log_trans.rows() == K && log_trans.cols() == K,
            "forward_backward: potential sizes do not match");
    Matrix la(N, K), lb(N, K);
    if (N == 0) {
        out.state_probs.resize(0, K);
        out.pairwise.clear();
        out.log_normalizer = 0.0;
        return;
    }
    la.row(0) = (log_init + log_emission.row(0).transpose()).transpose();
    Vector tmp(K);
    for (Index n = 1; n < N; ++n)
        for (Index j = 0; j < K; ++j) {
            for (Index i = 0; i < K; ++i) tmp[i] = la(n - 1, i) + log_trans(i, j);
            la(n, j) = detail::log_sum_exp(tmp) + log_emission(n, j);
        }
    lb.row(N - 1).setZero();
    for (Index n = N - 2; n >= 0; --n)
        for (Index i = 0; i < K; ++i) {
            for (Index j = 0; j < K; ++j) tmp[j] = log_trans(i, j) + log_emission(n + 1, j) + lb(n + 1, j);
            lb(n, i) = detail::log_sum_exp(tmp);
        }
    const double logz = detail::log_sum_exp(la.row(N - 1).transpose());
    out.log_normalizer = logz;
    out.state_probs.resize(N, K);
    for (Index n = 0; n < N; ++n) {
        for (Index k = 0; k < K; ++k) out.state_probs(n, k) = std::exp(la(n, k) + lb(n, k) - logz);
        out.state_probs.row(n) /= out.state_probs.row(n).sum();
    }
    out.pairwise.assign(N - 1, Matrix::Zero(K, K));
    for (Index n = 0; n + 1 < N; ++n) {
        Matrix& p = out.pairwise[n];
        for (Index i = 0; i < K; ++i)
            for (Index j = 0; j < K; ++j)
                p(i, j) = std::exp(la(n, i) + log_trans(i, j) + log_emission(n + 1, j) + lb(n + 1, j) - logz);
        p /= p.sum();
    }
}

/// E[log N(x_n | B_k x_{n-1}, I)] for every n = 1..N and k.
inline Matrix switching_emissions(const GaussianChainPosterior& x, const BasisMoments& bm) {
    const Index N = x.length() - 1, K = bm.K(), D = x.dim();
    std::vector<Matrix> btb(K);
    for (Index k = 0; k < K; ++k) btb[k] = bm.cross(k, k);
    Matrix out(N, K);
    for (Index n = 1; n <= N; ++n) {
        const Matrix xx_prev = x.second_moment(n - 1);
        const double xx = x.second_moment(n).trace();
        const Matrix cross = x.cross_moment(n);
        for (Index k = 0; k < K; ++k)
            out(n - 1, k) = -0.5 * static_cast<double>(D) * kLog2Pi -
                            0.5 * (xx - 2.0 * bm.mean[k].cwiseProduct(cross).sum() + btb[k].cwiseProduct(xx_prev).sum());
    }
    return out;
}

/// Alpha-beta recursion under the current Dirichlet posteriors.
inline void update_Z(HmmPosterior& z, const GaussianChainPosterior& x, const BasisMoments& bm) {
    const Vector log_init = dirichlet_log_mean(z.initial.transpose()).row(0).transpose();
    forward_backward(log_init, dirichlet_log_mean(z.transition), switching_emissions(x, bm), z);
}

/// Dirichlet concentrations = prior + expected counts.
inline void update_transition(HmmPosterior& z, double prior) {
    const Index K = z.K();
    z.transition = Matrix::Constant(K, K, prior);
    for (const auto& p : z.pairwise) z.transition += p;
    z.initial = Vector::Constant(K, prior);
    if (z.N() > 0) z.initial += z.state_probs.row(0).transpose();
}

/// Weight moments with one-hot weights: mean pi_n, second moment diag(pi_n).
inline std::vector<WeightMoments> switching_weights(const HmmPosterior& z) {
    std::vector<WeightMoments> out;
    out.reserve(z.N());
    for (Index n = 0; n < z.N(); ++n) {
        const Vector p = z.state_probs.row(n).transpose();
        out.push_back({p, p.asDiagonal()});
    }
    return out;
}

/// <W_n> = sum_k q(z_n = k) <B_k>, <W_n^T W_n> = sum_k q(z_n = k) <B_k^T B_k>.
inline std::vector<DynamicsMoments> averaged_W_moments(const HmmPosterior& z, const BasisMoments& bm) {
    const Index K = bm.K(), D = bm.D();
    std::vector<Matrix> btb(K);
    for (Index k = 0; k < K; ++k) btb[k] = bm.cross(k, k);
    std::vector<DynamicsMoments> out(z.N(), {Matrix::Zero(D, D), Matrix::Zero(D, D)});
    for (Index n = 0; n < z.N(); ++n)
        for (Index k = 0; k < K; ++k) {
            out[n].mean += z.state_probs(n, k) * bm.mean[k];
            out[n].second += z.state_probs(n, k) * btb[k];
        }
    return out;
}

struct SwitchingPosteriors {
    GaussianChainPosterior x;
    GaussianRows c;
    GaussianRows b;  // same slice layout as the time-varying model
    HmmPosterior z;
    GammaArray tau;
    GammaArray gamma;
    GammaArray beta;

    Index D() const { return x.dim(); }
    Index K() const { return z.K(); }
    Index N() const { return x.length() - 1; }
    Index M() const { return c.count(); }
};

/// Dirichlet prior concentration for transitions and the initial state.
inline constexpr double kDirichletPrior = 1.0;

/// E[log p(z)] + H[q(z)] - KL of the Dirichlet factors.
inline double hmm_term(const HmmPosterior& z, double prior) {
    const Index K = z.K(), N = z.N();
    if (N == 0) return 0.0;
    const Matrix lt = dirichlet_log_mean(z.transition);
    const Vector li = dirichlet_log_mean(z.initial.transpose()).row(0).transpose();
    auto xlogx = [](double p) { return p > 0.0 ? p * std::log(p) : 0.0; };
    double e = z.state_probs.row(0).dot(li.transpose());
    for (const auto& p : z.pairwise) e += p.cwiseProduct(lt).sum();
    // Chain entropy: sum of pairwise entropies minus interior marginal entropies.
    double h = 0.0;
    if (N == 1) {
        for (Index k = 0; k < K; ++k) h -= xlogx(z.state_probs(0, k));
    } else {
        for (const auto& p : z.pairwise)
            for (Index i = 0; i < K; ++i)
                for (Index j = 0; j < K; ++j) h -= xlogx(p(i, j));
        for (Index n = 1; n + 1 < N; ++n)
            for (Index k = 0; k < K; ++k) h += xlogx(z.state_probs(n, k));
    }
    double kl = dirichlet_kl(z.initial, Vector::Constant(K, prior));
    for (Index i = 0; i < K; ++i) kl += dirichlet_kl(z.transition.row(i).transpose(), Vector::Constant(K, prior));
    return e + h - kl;
}

inline double switching_elbo(const SwitchingPosteriors& q, const ObservationSet& data, const ModelConfig& cfg) {
    const auto& h = cfg.hyper;
    const auto bm = basis_moments(q.b, q.K());
    return likelihood_term(data, q.x, q.c, q.tau) +
           chain_term(q.x, cfg.mu0_x, cfg.lambda0, averaged_W_moments(q.z, bm)) + hmm_term(q.z, kDirichletPrior) +
           ard_rows_term(q.c, q.gamma.mean(), q.gamma.log_mean()) +
           ard_rows_term(q.b, q.beta.mean(), q.beta.log_mean()) + tau_term(q.tau, h, cfg.isotropic_noise) -
           gamma_kl(q.gamma, h.a_gamma, h.b_gamma) - gamma_kl(q.beta, h.a_beta, h.b_beta);
}

/// X and C as in every other variant; B_1 = I and B_k = I + 0.1 noise for
/// k > 1 so that the states start distinguishable; uniform state
/// probabilities; Dirichlet factors at the prior.
inline SwitchingPosteriors init_switching(const ModelConfig& cfg, const ObservationSet& data, std::uint64_t seed) {
    cfg.validate();
    const Index D = cfg.D, K = cfg.K, M = data.rows(), N = data.cols();
    const auto& h = cfg.hyper;
    std::mt19937_64 rng(seed);
    SwitchingPosteriors q;
    detail::init_observation_part(D, M, N, rng, q.x, q.c);
    std::vector<Matrix> basis;
    for (Index k = 0; k < K; ++k) {
        Matrix bk = Matrix::Identity(D, D);
        if (k > 0)
            for (Index i = 0; i < D; ++i)
                for (Index j = 0; j < D; ++j)
                    bk(i, j) += detail::kInitialSecondaryScale * std::normal_distribution<double>(0.0, 1.0)(rng);
        basis.push_back(bk);
    }
    q.b = GaussianRows(D, K * D);
    q.b.means = basis_slices(basis);
    for (auto& cov : q.b.covs) cov = detail::kInitialBasisVariance * Matrix::Identity(K * D, K * D);
    q.z.state_probs = Matrix::Constant(N, K, 1.0 / static_cast<double>(K));
    q.z.pairwise.assign(N > 0 ? N - 1 : 0, Matrix::Constant(K, K, 1.0 / static_cast<double>(K * K)));
    q.z.transition = Matrix::Constant(K, K, kDirichletPrior);
    q.z.initial = Vector::Constant(K, kDirichletPrior);
    q.tau = GammaArray(M, h.a_tau, h.b_tau);
    q.gamma = GammaArray(D, h.a_gamma, h.b_gamma);
    q.beta = GammaArray(K * D, h.a_beta, h.b_beta);
    return q;
}

inline RotationStep optimize_rotation_switching(SwitchingPosteriors& q, const ObservationSet& data,
                                                const ModelConfig& cfg, const RotationOptions& opt = {},
                                                std::optional<double> elbo_before = {}) {
    return detail::rotation_step(
        q, q.D(),
        [&](const SwitchingPosteriors& s) {
            return rotation_objective_X(s.x, s.c, s.beta, switching_weights(s.z), s.K(), cfg);
        },
        [&](SwitchingPosteriors& s, const Matrix& r) {
            apply_rotation_X(s.x, s.c, s.gamma, s.b, s.beta, switching_weights(s.z), s.K(), r, cfg.hyper);
        },
        [&](const SwitchingPosteriors& s) { return switching_elbo(s, data, cfg); }, opt, elbo_before, "X");
}

using SwitchingFitResult = FitOutcome<SwitchingPosteriors>;

/// Warmup updates X, Z, C, B, tau; full sweeps update X, Z, C, B, the
/// Dirichlet factors, tau, gamma, beta and rotate X.
inline SwitchingFitResult fit_switching_from(SwitchingPosteriors q, const ObservationSet& data,
                                             const ModelConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    const auto& h = cfg.hyper;
    const auto& sch = cfg.schedule;
    SwitchingFitResult out;
    auto elbo = [&] { return switching_elbo(q, data, cfg); };
    run_schedule(
        sch, elbo(),
        [&](int, bool warm, double prev) {
            SweepMonitor mon(elbo, sch.check_each_update, sch.monotone_rel_tol, prev);
            mon.run("X", [&] {
                update_X(q.x, data, q.c, q.tau, averaged_W_moments(q.z, basis_moments(q.b, q.K())), cfg.mu0_x,
                         cfg.lambda0);
            });
            // Z also runs during warmup: with uniform state probabilities every
            // B_k would receive the same update and the states would never separate.
            mon.run("Z", [&] { update_Z(q.z, q.x, basis_moments(q.b, q.K())); });
            mon.run("C", [&] { update_C(q.c, data, q.x, q.tau, q.gamma); });
            mon.run("B", [&] { update_B(q.b, q.beta, q.x, switching_weights(q.z), q.K()); });
            if (!warm) mon.run("transition", [&] { update_transition(q.z, kDirichletPrior); });
            mon.run("tau", [&] { update_tau(q.tau, data, q.x, q.c, h, cfg.isotropic_noise); });
            if (!warm) {
                mon.run("gamma", [&] { update_gamma(q.gamma, q.c, h); });
                mon.run("beta", [&] { update_beta(q.beta, q.b, h); });
            }
            double value = sch.check_each_update ? mon.last() : elbo();
            if (!warm && sch.rotate) {
                RotationStep rx;
                mon.run("rotate X", [&] { rx = optimize_rotation_switching(q, data, cfg, {}, value); });
                value = rx.elbo_after;
                mon.report().rotation_x = rx.applied;
            }
            SweepReport rep = mon.report();
            rep.elbo = value;
            return rep;
        },
        out, log);
    out.posteriors = std::move(q);
    return out;
}

inline SwitchingFitResult fit_switching(const ObservationSet& data, const ModelConfig& cfg,
                                        std::ostream* log = nullptr) {
    return fit_switching_from(init_switching(cfg, data, cfg.seed), data, cfg, log);
}

inline Reconstruction reconstruct(const SwitchingPosteriors& q, bool predictive = false) {
    return reconstruct(q.x, q.c, q.tau, predictive);
}

}  // namespace tvdyn

#endif  // TVDYN_SWITCHING_HPP
