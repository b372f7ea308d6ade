#ifndef TVDYN_ENGINE_HPP
#define TVDYN_ENGINE_HPP

// VB-EM orchestration for the time-varying-dynamics model: warmup sweeps,
// full sweeps with rotations, convergence on the bound, reconstruction.

#include "elbo.hpp"
#include "rotation.hpp"
#include "updates.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace tvdyn {

/// Raised when the bound decreases by more than the configured tolerance.
class MonotonicityError : public std::runtime_error {
public:
    MonotonicityError(const std::string& update, double before, double after)
        : std::runtime_error("ELBO decreased in update '" + update + "': " + std::to_string(before) + " -> " +
                             std::to_string(after)),
          update_(update) {}
    const std::string& update() const noexcept { return update_; }

private:
    std::string update_;
};

struct UpdateTiming {
    std::string name;
    double seconds = 0.0;
};

struct SweepReport {
    int sweep_index = 0;
    double elbo = 0.0;
    bool warmup = false;
    std::vector<UpdateTiming> timings;
    bool rotation_x = false;
    bool rotation_s = false;
    /// Smallest (delta ELBO / |ELBO|) over the checked steps of this sweep;
    /// only filled when every update is checked.
    double worst_relative_change = 0.0;
};

/// Outcome of one rotation step.
struct RotationStep {
    Matrix rotation;
    bool applied = false;
    double elbo_before = 0.0;
    double elbo_after = 0.0;
};

/// Runs updates under a stopwatch and, when enabled, evaluates the bound
/// after each one.
class SweepMonitor {
public:
    SweepMonitor(std::function<double()> elbo, bool check, double rel_tol, double start)
        : elbo_(std::move(elbo)), check_(check), rel_tol_(rel_tol), last_(start) {}

    template <class F>
    void run(const std::string& name, F&& update) {
        const auto t0 = std::chrono::steady_clock::now();
        update();
        const auto t1 = std::chrono::steady_clock::now();
        report_.timings.push_back({name, std::chrono::duration<double>(t1 - t0).count()});
        if (check_) observe(name, elbo_());
    }

    /// Records an externally computed bound value after step `name`.
    void observe(const std::string& name, double value) {
        const double rel = (value - last_) / std::max(std::abs(last_), 1e-300);
        report_.worst_relative_change = std::min(report_.worst_relative_change, rel);
        if (value < last_ - rel_tol_ * std::abs(last_)) throw MonotonicityError(name, last_, value);
        last_ = value;
    }

    double last() const { return last_; }
    SweepReport& report() { return report_; }

private:
    std::function<double()> elbo_;
    bool check_;
    double rel_tol_;
    double last_;
    SweepReport report_;
};

inline std::vector<WeightMoments> weight_moments(const FactorPosteriors& q) { return chain_weight_moments(q.s); }

/// Loading-side statistics of an X rotation: rows of C mapped by R^{-T}
/// with gamma at its optimum.
inline CompensationStats loading_compensation(const GaussianRows& c, const Hyperparameters& h) {
    CompensationStats comp;
    comp.count = static_cast<double>(c.count());
    comp.grams = {c.second_moment_sum()};
    comp.ard_shape = h.a_gamma + 0.5 * static_cast<double>(c.count());
    comp.ard_prior_rate = h.b_gamma;
    return comp;
}

/// Rotation of X compensated in C and in a basis tensor driven by the
/// given weight moments.
inline RotationObjective rotation_objective_X(const GaussianChainPosterior& x, const GaussianRows& c,
                                             const GammaArray& beta, std::span<const WeightMoments> weights,
                                             Index K, const ModelConfig& cfg) {
    return RotationObjective(chain_rotation_stats(x, cfg.mu0_x, cfg.lambda0), loading_compensation(c, cfg.hyper),
                             basis_regression_stats(x, weights, beta, K));
}

inline RotationObjective rotation_objective_X(const FactorPosteriors& q, const ModelConfig& cfg) {
    return rotation_objective_X(q.x, q.c, q.beta, weight_moments(q), q.K(), cfg);
}

/// Rotation of S compensated in the slices of B and in A, with beta at its
/// optimum.
inline RotationObjective rotation_objective_S(const FactorPosteriors& q, const ModelConfig& cfg) {
    const auto& h = cfg.hyper;
    const Index D = q.D(), K = q.K();
    const Matrix gram = q.b.second_moment_sum();
    CompensationStats comp;
    comp.count = static_cast<double>(D * D);
    for (Index j = 0; j < D; ++j) comp.grams.push_back(gram.block(j * K, j * K, K, K));
    comp.ard_shape = h.a_beta + 0.5 * static_cast<double>(D);
    comp.ard_prior_rate = h.b_beta;
    return RotationObjective(chain_rotation_stats(q.s, cfg.mu0_s, cfg.v0), std::move(comp),
                             transition_regression_stats(q.s, q.alpha));
}

/// Applies an X rotation: X by R, C by R^{-T}, then gamma, B and beta
/// re-fitted in that order.
inline void apply_rotation_X(GaussianChainPosterior& x, GaussianRows& c, GammaArray& gamma, GaussianRows& b,
                             GammaArray& beta, std::span<const WeightMoments> weights, Index K, const Matrix& r,
                             const Hyperparameters& h) {
    x.transform(r);
    c.transform(r.inverse().transpose());
    update_gamma(gamma, c, h);
    update_B(b, beta, x, weights, K);
    update_beta(beta, b, h);
}

inline void apply_rotation_X(FactorPosteriors& q, const Matrix& r, const ModelConfig& cfg) {
    apply_rotation_X(q.x, q.c, q.gamma, q.b, q.beta, weight_moments(q), q.K(), r, cfg.hyper);
}

inline void apply_rotation_S(FactorPosteriors& q, const Matrix& r, const ModelConfig& cfg) {
    q.s.transform(r);
    q.b.transform(kron(Matrix::Identity(q.D(), q.D()), r.inverse().transpose()));
    update_beta(q.beta, q.b, cfg.hyper);
    update_A(q.a, q.alpha, q.s);
    update_alpha(q.alpha, q.a, cfg.hyper);
}

namespace detail {

template <class State, class Objective, class Apply, class Elbo>
RotationStep rotation_step(State& q, Index dim, Objective&& make_objective, Apply&& apply, Elbo&& elbo,
                           const RotationOptions& opt, std::optional<double> elbo_before, const char* label) {
    const Matrix eye = Matrix::Identity(dim, dim);
    RotationStep step;
    step.rotation = eye;
    step.elbo_before = elbo_before ? *elbo_before : elbo(q);
    step.elbo_after = step.elbo_before;
    for (int round = 0; round < std::max(opt.max_rounds, 1); ++round) {
        RotationResult res;
        try {
            res = optimize_rotation(make_objective(q), opt);
        } catch (const std::exception& e) {
            log_warning(std::string(label) + " rotation failed: " + e.what());
            res.ok = false;
        }
        if (!res.ok) log_warning(std::string(label) + " rotation optimizer failed; keeping identity");
        if (!res.ok || is_identity(res.rotation)) break;
        State trial = q;
        try {
            apply(trial, res.rotation);
        } catch (const std::exception& e) {
            log_warning(std::string(label) + " rotation could not be applied: " + e.what());
            break;
        }
        const double before = step.elbo_after;
        const double after = elbo(trial);
        if (!std::isfinite(after) || after < before - 1e-10 * std::abs(before)) break;
        q = std::move(trial);
        step.applied = true;
        step.elbo_after = after;
        step.rotation = res.rotation * step.rotation;
        if (after - before < opt.round_tol * std::abs(after)) break;
    }
    return step;
}

}  // namespace detail

/// Finds the bound-maximizing rotation of X and applies it when it does
/// not lower the bound.
inline RotationStep optimize_rotation_X(FactorPosteriors& q, const ObservationSet& data, const ModelConfig& cfg,
                                        const RotationOptions& opt = {}, std::optional<double> elbo_before = {}) {
    return detail::rotation_step(
        q, q.D(), [&](const FactorPosteriors& s) { return rotation_objective_X(s, cfg); },
        [&](FactorPosteriors& s, const Matrix& r) { apply_rotation_X(s, r, cfg); },
        [&](const FactorPosteriors& s) { return compute_elbo(s, data, cfg); }, opt, elbo_before, "X");
}

inline RotationStep optimize_rotation_S(FactorPosteriors& q, const ObservationSet& data, const ModelConfig& cfg,
                                        const RotationOptions& opt = {}, std::optional<double> elbo_before = {}) {
    if (q.pinned_weights) {
        RotationStep step;
        step.rotation = Matrix::Identity(q.K(), q.K());
        step.elbo_before = step.elbo_after = elbo_before ? *elbo_before : compute_elbo(q, data, cfg);
        return step;
    }
    RotationStep step = detail::rotation_step(
        q, q.K(), [&](const FactorPosteriors& s) { return rotation_objective_S(s, cfg); },
        [&](FactorPosteriors& s, const Matrix& r) { apply_rotation_S(s, r, cfg); },
        [&](const FactorPosteriors& s) { return compute_elbo(s, data, cfg); }, opt, elbo_before, "S");
    return step;
}

template <class Posteriors>
struct FitOutcome {
    Posteriors posteriors;
    std::vector<SweepReport> reports;
    bool converged = false;
    int sweeps = 0;
    double elbo = 0.0;
};

using FitResult = FitOutcome<FactorPosteriors>;

inline void write_sweep_json(std::ostream& os, const SweepReport& r);

/// Shared sweep loop. `sweep` performs one sweep (warmup or full) and
/// returns the bound after it.
template <class SweepFn, class Outcome>
void run_schedule(const Schedule& sch, double initial_elbo, SweepFn&& sweep, Outcome& out, std::ostream* log) {
    double prev = initial_elbo;
    out.elbo = initial_elbo;
    for (int it = 0; it < sch.max_sweeps; ++it) {
        const bool warm = it < sch.warmup_sweeps;
        SweepReport rep = sweep(it, warm, prev);
        rep.sweep_index = it;
        rep.warmup = warm;
        if (rep.elbo < prev - sch.monotone_rel_tol * std::abs(prev))
            throw MonotonicityError("sweep " + std::to_string(it), prev, rep.elbo);
        const double rel = (rep.elbo - prev) / std::max(std::abs(rep.elbo), 1e-300);
        out.reports.push_back(rep);
        if (log) write_sweep_json(*log, rep);
        out.sweeps = it + 1;
        out.elbo = rep.elbo;
        prev = rep.elbo;
        if (!warm && rel < sch.elbo_rel_tol) {
            out.converged = true;
            break;
        }
    }
}

/// Fits the time-varying-dynamics model. Warmup sweeps update X, C, B and
/// tau only; full sweeps update X, S, C, B, A, tau, gamma, beta, alpha and
/// then rotate X and S.
inline FitResult fit_from(FactorPosteriors q, const ObservationSet& data, const ModelConfig& cfg,
                          std::ostream* log = nullptr) {
    cfg.validate();
    const auto& h = cfg.hyper;
    const auto& sch = cfg.schedule;
    FitResult out;
    const double initial = compute_elbo(q, data, cfg);
    auto elbo = [&] { return compute_elbo(q, data, cfg); };

    run_schedule(
        sch, initial,
        [&](int, bool warm, double prev) {
            SweepMonitor mon(elbo, sch.check_each_update, sch.monotone_rel_tol, prev);
            mon.run("X", [&] {
                const auto dyn = dynamics_moments(weight_moments(q), basis_moments(q.b, q.K()));
                update_X(q.x, data, q.c, q.tau, dyn, cfg.mu0_x, cfg.lambda0);
            });
            if (!warm && !q.pinned_weights)
                mon.run("S", [&] { update_S(q.s, q.x, basis_moments(q.b, q.K()), q.a, cfg.mu0_s, cfg.v0); });
            mon.run("C", [&] { update_C(q.c, data, q.x, q.tau, q.gamma); });
            mon.run("B", [&] { update_B(q.b, q.beta, q.x, weight_moments(q), q.K()); });
            if (!warm && !q.pinned_weights) mon.run("A", [&] { update_A(q.a, q.alpha, q.s); });
            mon.run("tau", [&] { update_tau(q.tau, data, q.x, q.c, h, cfg.isotropic_noise); });
            if (!warm) {
                mon.run("gamma", [&] { update_gamma(q.gamma, q.c, h); });
                mon.run("beta", [&] { update_beta(q.beta, q.b, h); });
                if (!q.pinned_weights) mon.run("alpha", [&] { update_alpha(q.alpha, q.a, h); });
            }
            double value = sch.check_each_update ? mon.last() : elbo();
            if (!warm && sch.rotate) {
                RotationStep rx;
                mon.run("rotate X", [&] { rx = optimize_rotation_X(q, data, cfg, {}, value); });
                value = rx.elbo_after;
                mon.report().rotation_x = rx.applied;
                if (!q.pinned_weights) {
                    RotationStep rs;
                    mon.run("rotate S", [&] { rs = optimize_rotation_S(q, data, cfg, {}, value); });
                    value = rs.elbo_after;
                    mon.report().rotation_s = rs.applied;
                }
            }
            SweepReport rep = mon.report();
            rep.elbo = value;
            return rep;
        },
        out, log);
    out.posteriors = std::move(q);
    return out;
}

inline FitResult fit(const ObservationSet& data, const ModelConfig& cfg, std::ostream* log = nullptr) {
    return fit_from(init_posteriors(cfg, data, cfg.seed), data, cfg, log);
}

struct Reconstruction {
    Matrix mean;
    Matrix std;
};

/// Posterior mean and standard deviation of C x_n for n = 1..N; with
/// `predictive` the noise variance 1/<tau_m> is added.
inline Reconstruction reconstruct(const GaussianChainPosterior& x, const GaussianRows& c, const GammaArray& tau,
                                  bool predictive = false) {
    const Index M = c.count(), N = x.length() - 1;
    Reconstruction r;
    r.mean.resize(M, N);
    r.std.resize(M, N);
    const Vector tau_mean = tau.mean();
    std::vector<Matrix> cc(M);
    for (Index m = 0; m < M; ++m) cc[m] = c.second_moment(m);
    for (Index n = 0; n < N; ++n) {
        const Matrix xx = x.second_moment(n + 1);
        for (Index m = 0; m < M; ++m) {
            const double mu = c.means[m].dot(x.means[n + 1]);
            double var = cc[m].cwiseProduct(xx).sum() - mu * mu;
            if (predictive) var += 1.0 / tau_mean[m];
            r.mean(m, n) = mu;
            r.std(m, n) = std::sqrt(std::max(var, 0.0));
        }
    }
    return r;
}

inline Reconstruction reconstruct(const FactorPosteriors& q, bool predictive = false) {
    return reconstruct(q.x, q.c, q.tau, predictive);
}

}  // namespace tvdyn

#include "sweep_log.hpp"

#endif  // TVDYN_ENGINE_HPP
