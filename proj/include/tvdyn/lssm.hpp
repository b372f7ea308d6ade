#ifndef TVDYN_LSSM_HPP
#define TVDYN_LSSM_HPP

// Classical linear state-space model with one constant dynamics matrix W.
// Written against its own W factor so it can serve as an independent
// reference for the time-varying model with K = 1.

#include "engine.hpp"

namespace tvdyn {

struct LssmPosteriors {
    GaussianChainPosterior x;
    GaussianRows c;
    GaussianRows w;  // D rows of W
    GammaArray tau;
    GammaArray gamma;
    GammaArray beta;  // one precision per column of W

    Index D() const { return x.dim(); }
    Index N() const { return x.length() - 1; }
    Index M() const { return c.count(); }
};

inline LssmPosteriors init_lssm(const ModelConfig& cfg, const ObservationSet& data, std::uint64_t seed) {
    cfg.validate();
    const Index D = cfg.D, M = data.rows(), N = data.cols();
    const auto& h = cfg.hyper;
    std::mt19937_64 rng(seed);
    LssmPosteriors q;
    detail::init_observation_part(D, M, N, rng, q.x, q.c);
    q.w = GaussianRows(D, D);
    for (Index d = 0; d < D; ++d) {
        q.w.means[d] = Vector::Unit(D, d);
        q.w.covs[d] = detail::kInitialBasisVariance * Matrix::Identity(D, D);
    }
    q.tau = GammaArray(M, h.a_tau, h.b_tau);
    q.gamma = GammaArray(D, h.a_gamma, h.b_gamma);
    q.beta = GammaArray(D, h.a_beta, h.b_beta);
    return q;
}

/// Row d of W regresses x_{dn} on x_{n-1}:
/// Sigma = (diag<beta> + sum_n <x_{n-1} x_{n-1}^T>)^{-1}, mu_d = Sigma sum_n <x_{n-1} x_{dn}>.
inline void update_W(GaussianRows& w, const GammaArray& beta, const GaussianChainPosterior& x) {
    const Index D = x.dim();
    Matrix prec = beta.mean().asDiagonal();
    Matrix lin = Matrix::Zero(D, D);  // column d: sum_n <x_{n-1} x_{dn}>
    for (Index n = 1; n < x.length(); ++n) {
        prec += x.second_moment(n - 1);
        lin += x.cross_moment(n).transpose();
    }
    const Matrix cov = inverse_spd(prec);
    w = GaussianRows(D, D);
    for (Index d = 0; d < D; ++d) {
        w.covs[d] = cov;
        w.means[d] = cov * lin.col(d);
    }
}

inline void update_W_precision(GammaArray& beta, const GaussianRows& w, const Hyperparameters& h) {
    beta = GammaArray(w.dim(), h.a_beta + 0.5 * static_cast<double>(w.count()), h.b_beta);
    for (Index d = 0; d < w.count(); ++d) beta.rate += 0.5 * (w.covs[d].diagonal() + w.means[d].cwiseAbs2());
}

/// <W> and <W^T W> = sum_d <w_d w_d^T>.
inline DynamicsMoments lssm_W_moments(const GaussianRows& w) {
    DynamicsMoments m;
    m.mean = w.mean_matrix();
    m.second = Matrix::Zero(w.dim(), w.dim());
    for (Index d = 0; d < w.count(); ++d) m.second += w.covs[d] + w.means[d] * w.means[d].transpose();
    return m;
}

inline double lssm_elbo(const LssmPosteriors& q, const ObservationSet& data, const ModelConfig& cfg) {
    const auto& h = cfg.hyper;
    const std::vector<DynamicsMoments> dyn(q.N(), lssm_W_moments(q.w));
    return likelihood_term(data, q.x, q.c, q.tau) + chain_term(q.x, cfg.mu0_x, cfg.lambda0, dyn) +
           ard_rows_term(q.c, q.gamma.mean(), q.gamma.log_mean()) +
           ard_rows_term(q.w, q.beta.mean(), q.beta.log_mean()) + tau_term(q.tau, h, cfg.isotropic_noise) -
           gamma_kl(q.gamma, h.a_gamma, h.b_gamma) - gamma_kl(q.beta, h.a_beta, h.b_beta);
}

inline RotationObjective lssm_rotation_objective(const LssmPosteriors& q, const ModelConfig& cfg) {
    return RotationObjective(chain_rotation_stats(q.x, cfg.mu0_x, cfg.lambda0), loading_compensation(q.c, cfg.hyper),
                             transition_regression_stats(q.x, q.beta));
}

inline void apply_lssm_rotation(LssmPosteriors& q, const Matrix& r, const ModelConfig& cfg) {
    q.x.transform(r);
    q.c.transform(r.inverse().transpose());
    update_gamma(q.gamma, q.c, cfg.hyper);
    update_W(q.w, q.beta, q.x);
    update_W_precision(q.beta, q.w, cfg.hyper);
}

inline RotationStep optimize_rotation_lssm(LssmPosteriors& q, const ObservationSet& data, const ModelConfig& cfg,
                                           const RotationOptions& opt = {}, std::optional<double> elbo_before = {}) {
    return detail::rotation_step(
        q, q.D(), [&](const LssmPosteriors& s) { return lssm_rotation_objective(s, cfg); },
        [&](LssmPosteriors& s, const Matrix& r) { apply_lssm_rotation(s, r, cfg); },
        [&](const LssmPosteriors& s) { return lssm_elbo(s, data, cfg); }, opt, elbo_before, "X");
}

using LssmFitResult = FitOutcome<LssmPosteriors>;

/// Same schedule as the time-varying model: warmup updates X, C, W, tau;
/// full sweeps add gamma and beta and rotate X.
inline LssmFitResult fit_lssm_from(LssmPosteriors q, const ObservationSet& data, const ModelConfig& cfg,
                                   std::ostream* log = nullptr) {
    cfg.validate();
    const auto& h = cfg.hyper;
    const auto& sch = cfg.schedule;
    LssmFitResult out;
    auto elbo = [&] { return lssm_elbo(q, data, cfg); };
    run_schedule(
        sch, elbo(),
        [&](int, bool warm, double prev) {
            SweepMonitor mon(elbo, sch.check_each_update, sch.monotone_rel_tol, prev);
            mon.run("X", [&] {
                const std::vector<DynamicsMoments> dyn(q.N(), lssm_W_moments(q.w));
                update_X(q.x, data, q.c, q.tau, dyn, cfg.mu0_x, cfg.lambda0);
            });
            mon.run("C", [&] { update_C(q.c, data, q.x, q.tau, q.gamma); });
            mon.run("W", [&] { update_W(q.w, q.beta, q.x); });
            mon.run("tau", [&] { update_tau(q.tau, data, q.x, q.c, h, cfg.isotropic_noise); });
            if (!warm) {
                mon.run("gamma", [&] { update_gamma(q.gamma, q.c, h); });
                mon.run("beta", [&] { update_W_precision(q.beta, q.w, h); });
            }
            double value = sch.check_each_update ? mon.last() : elbo();
            if (!warm && sch.rotate) {
                RotationStep rx;
                mon.run("rotate X", [&] { rx = optimize_rotation_lssm(q, data, cfg, {}, value); });
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

inline LssmFitResult fit_lssm(const ObservationSet& data, const ModelConfig& cfg, std::ostream* log = nullptr) {
    return fit_lssm_from(init_lssm(cfg, data, cfg.seed), data, cfg, log);
}

inline Reconstruction reconstruct(const LssmPosteriors& q, bool predictive = false) {
    return reconstruct(q.x, q.c, q.tau, predictive);
}

}  // namespace tvdyn

#endif  // TVDYN_LSSM_HPP
