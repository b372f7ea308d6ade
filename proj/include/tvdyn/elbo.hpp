#ifndef TVDYN_ELBO_HPP
#define TVDYN_ELBO_HPP

// Evidence lower bound, assembled factor by factor. Every Gaussian term is
// E_q[log prior] + entropy, every Gamma term is -KL(q || prior), so each
// factor carries its own complete contribution.

#include "model.hpp"
#include "updates.hpp"

#include <cmath>
#include <span>

namespace tvdyn {

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// E[log p(Y | C, X, tau)] over the observed entries.
inline double likelihood_term(const ObservationSet& data, const GaussianChainPosterior& x, const GaussianRows& c,
                              const GammaArray& tau) {
    const Vector tau_mean = tau.mean();
    const Vector tau_log = tau.log_mean();
    double total = 0.0;
    for (Index m = 0; m < data.rows(); ++m) {
        const double count = static_cast<double>(data.row_count(m));
        if (count == 0.0) continue;
        total += 0.5 * count * (tau_log[m] - kLog2Pi) - 0.5 * tau_mean[m] * residual_statistic(data, m, x, c);
    }
    return total;
}

/// E[log p(chain)] + H[q(chain)] for a chain with initial prior
/// N(mu0, prec0^{-1}) and unit-noise transitions with the given moments.
inline double chain_term(const GaussianChainPosterior& q, const Vector& mu0, const Matrix& prec0,
                         std::span<const DynamicsMoments> transitions) {
    const Index d = q.dim(), N = q.length() - 1;
    require(static_cast<Index>(transitions.size()) == N, "chain_term: need transition moments for n = 1..N");
    const double dd = static_cast<double>(d);
    const Matrix xx0 = q.second_moment(0);
    double e = 0.5 * logdet_spd(prec0) - 0.5 * dd * kLog2Pi -
               0.5 * (prec0.cwiseProduct(xx0).sum() - 2.0 * mu0.dot(prec0 * q.means[0]) + mu0.dot(prec0 * mu0));
    Matrix xx_prev = xx0;
    for (Index n = 1; n <= N; ++n) {
        const Matrix xx = q.second_moment(n);
        const Matrix cross = q.cross_moment(n);
        const auto& w = transitions[n - 1];
        const double quad = xx.trace() - 2.0 * w.mean.cwiseProduct(cross).sum() + w.second.cwiseProduct(xx_prev).sum();
        e += -0.5 * dd * kLog2Pi - 0.5 * quad;
        xx_prev = xx;
    }
    return e + q.entropy();
}

/// E[log N(v_i | 0, diag(lambda)^{-1})] + H[q(v_i)] summed over the rows,
/// where lambda has the given posterior means and log-means per coordinate.
inline double ard_rows_term(const GaussianRows& rows, const Vector& prec_mean, const Vector& prec_log_mean) {
    const double d = static_cast<double>(rows.dim());
    double total = 0.0;
    for (Index i = 0; i < rows.count(); ++i) {
        const Vector second_diag = rows.second_moment(i).diagonal();
        total += 0.5 * prec_log_mean.sum() - 0.5 * d * kLog2Pi - 0.5 * prec_mean.dot(second_diag);
    }
    return total + rows.entropy();
}

/// -KL of the noise precisions; a tied (isotropic) posterior counts once.
inline double tau_term(const GammaArray& tau, const Hyperparameters& h, bool isotropic) {
    if (isotropic && tau.size() > 0) return -gamma_kl(tau.shape[0], tau.rate[0], h.a_tau, h.b_tau);
    return -gamma_kl(tau, h.a_tau, h.b_tau);
}

struct ElboTerms {
    double likelihood = 0.0;
    double x = 0.0;
    double s = 0.0;
    double c = 0.0;
    double b = 0.0;
    double a = 0.0;
    double tau = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double alpha = 0.0;

    double total() const { return likelihood + x + s + c + b + a + tau + gamma + beta + alpha; }
};

inline std::vector<DynamicsMoments> constant_transitions(const GaussianRows& a, Index N) {
    return std::vector<DynamicsMoments>(N, DynamicsMoments{a.mean_matrix(), a.second_moment_sum()});
}

inline ElboTerms elbo_terms(const FactorPosteriors& q, const ObservationSet& data, const ModelConfig& cfg) {
    const auto& h = cfg.hyper;
    const Index N = q.N();
    ElboTerms t;
    t.likelihood = likelihood_term(data, q.x, q.c, q.tau);
    const BasisMoments bm = basis_moments(q.b, q.K());
    const auto weights = chain_weight_moments(q.s);
    t.x = chain_term(q.x, cfg.mu0_x, cfg.lambda0, dynamics_moments(weights, bm));
    if (!q.pinned_weights) {
        t.s = chain_term(q.s, cfg.mu0_s, cfg.v0, constant_transitions(q.a, N));
        t.a = ard_rows_term(q.a, q.alpha.mean(), q.alpha.log_mean());
        t.alpha = -gamma_kl(q.alpha, h.a_alpha, h.b_alpha);
    }
    t.c = ard_rows_term(q.c, q.gamma.mean(), q.gamma.log_mean());
    t.b = ard_rows_term(q.b, q.beta.mean(), q.beta.log_mean());
    t.tau = tau_term(q.tau, h, cfg.isotropic_noise);
    t.gamma = -gamma_kl(q.gamma, h.a_gamma, h.b_gamma);
    t.beta = -gamma_kl(q.beta, h.a_beta, h.b_beta);
    return t;
}

inline double compute_elbo(const FactorPosteriors& q, const ObservationSet& data, const ModelConfig& cfg) {
    return elbo_terms(q, data, cfg).total();
}

}  // namespace tvdyn

#endif  // TVDYN_ELBO_HPP
