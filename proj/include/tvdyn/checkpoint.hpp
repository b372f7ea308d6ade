#ifndef TVDYN_CHECKPOINT_HPP
#define TVDYN_CHECKPOINT_HPP

// Versioned JSON checkpoints of fitted posteriors.
//
// Top level:
//   {"format": "tvdyn-checkpoint", "version": 1,
//    "variant": "tvd" | "lssm" | "sd",
//    "config": {...}, "sweeps": int, "elbo": number, "converged": bool,
//    "posteriors": {...}}
// Vectors are JSON arrays; matrices are {"rows", "cols", "data"} with data
// in row-major order; Gaussian chains hold means, covs, cross_covs and
// log_det_precision; Gaussian rows hold means and covs; Gamma arrays hold
// shape and rate. Numbers are written in shortest round-trip form, so a
// save/load cycle reproduces every double exactly.

#include "lssm.hpp"
#include "switching.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <variant>

namespace tvdyn {

inline constexpr int kCheckpointVersion = 1;

namespace ckpt {

using nlohmann::json;

inline double finite(double v) {
    require(std::isfinite(v), "checkpoint: non-finite value cannot be stored");
    return v;
}

inline json vec(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(finite(v[i]));
    return a;
}

inline Vector vec(const json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
    return v;
}

inline json mat(const Matrix& m) {
    json data = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index k = 0; k < m.cols(); ++k) data.push_back(finite(m(i, k)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix mat(const json& j) {
    const Index r = j.at("rows").get<Index>(), c = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    require(static_cast<Index>(data.size()) == r * c, "checkpoint: matrix data has wrong length");
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index k = 0; k < c; ++k) m(i, k) = data[i * c + k].get<double>();
    return m;
}

inline json vecs(const std::vector<Vector>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(vec(x));
    return a;
}
inline std::vector<Vector> vecs(const json& j) {
    std::vector<Vector> out;
    for (const auto& x : j) out.push_back(vec(x));
    return out;
}
inline json mats(const std::vector<Matrix>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(mat(x));
    return a;
}
inline std::vector<Matrix> mats(const json& j) {
    std::vector<Matrix> out;
    for (const auto& x : j) out.push_back(mat(x));
    return out;
}

inline json chain(const GaussianChainPosterior& c) {
    return {{"means", vecs(c.means)},
            {"covs", mats(c.covs)},
            {"cross_covs", mats(c.cross_covs)},
            {"log_det_precision", finite(c.log_det_precision)}};
}
inline GaussianChainPosterior chain(const json& j) {
    GaussianChainPosterior c;
    c.means = vecs(j.at("means"));
    c.covs = mats(j.at("covs"));
    c.cross_covs = mats(j.at("cross_covs"));
    c.log_det_precision = j.at("log_det_precision").get<double>();
    return c;
}

inline json rows(const GaussianRows& r) { return {{"means", vecs(r.means)}, {"covs", mats(r.covs)}}; }
inline GaussianRows rows(const json& j) {
    GaussianRows r;
    r.means = vecs(j.at("means"));
    r.covs = mats(j.at("covs"));
    return r;
}

inline json gamma(const GammaArray& g) { return {{"shape", vec(g.shape)}, {"rate", vec(g.rate)}}; }
inline GammaArray gamma(const json& j) {
    GammaArray g;
    g.shape = vec(j.at("shape"));
    g.rate = vec(j.at("rate"));
    return g;
}

inline json hmm(const HmmPosterior& z) {
    return {{"state_probs", mat(z.state_probs)},
            {"pairwise", mats(z.pairwise)},
            {"transition", mat(z.transition)},
            {"initial", vec(z.initial)},
            {"log_normalizer", finite(z.log_normalizer)}};
}
inline HmmPosterior hmm(const json& j) {
    HmmPosterior z;
    z.state_probs = mat(j.at("state_probs"));
    z.pairwise = mats(j.at("pairwise"));
    z.transition = mat(j.at("transition"));
    z.initial = vec(j.at("initial"));
    z.log_normalizer = j.at("log_normalizer").get<double>();
    return z;
}

}  // namespace ckpt

inline nlohmann::json config_to_json(const ModelConfig& c) {
    using namespace ckpt;
    const auto& h = c.hyper;
    const auto& s = c.schedule;
    return {{"D", c.D},
            {"K", c.K},
            {"hyper",
             {{"a_alpha", h.a_alpha}, {"b_alpha", h.b_alpha}, {"a_beta", h.a_beta}, {"b_beta", h.b_beta},
              {"a_gamma", h.a_gamma}, {"b_gamma", h.b_gamma}, {"a_tau", h.a_tau}, {"b_tau", h.b_tau}}},
            {"mu0_x", vec(c.mu0_x)},
            {"lambda0", mat(c.lambda0)},
            {"mu0_s", vec(c.mu0_s)},
            {"v0", mat(c.v0)},
            {"isotropic_noise", c.isotropic_noise},
            {"schedule",
             {{"warmup_sweeps", s.warmup_sweeps}, {"max_sweeps", s.max_sweeps}, {"elbo_rel_tol", s.elbo_rel_tol},
              {"rotate", s.rotate}, {"check_each_update", s.check_each_update},
              {"monotone_rel_tol", s.monotone_rel_tol}}},
            {"seed", c.seed}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    using namespace ckpt;
    ModelConfig c;
    c.D = j.at("D").get<Index>();
    c.K = j.at("K").get<Index>();
    const auto& h = j.at("hyper");
    c.hyper = {h.at("a_alpha"), h.at("b_alpha"), h.at("a_beta"), h.at("b_beta"),
               h.at("a_gamma"), h.at("b_gamma"), h.at("a_tau"),  h.at("b_tau")};
    c.mu0_x = vec(j.at("mu0_x"));
    c.lambda0 = mat(j.at("lambda0"));
    c.mu0_s = vec(j.at("mu0_s"));
    c.v0 = mat(j.at("v0"));
    c.isotropic_noise = j.at("isotropic_noise").get<bool>();
    const auto& s = j.at("schedule");
    c.schedule.warmup_sweeps = s.at("warmup_sweeps");
    c.schedule.max_sweeps = s.at("max_sweeps");
    c.schedule.elbo_rel_tol = s.at("elbo_rel_tol");
    c.schedule.rotate = s.at("rotate");
    c.schedule.check_each_update = s.at("check_each_update");
    c.schedule.monotone_rel_tol = s.at("monotone_rel_tol");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

inline nlohmann::json posteriors_to_json(const FactorPosteriors& q) {
    using namespace ckpt;
    return {{"x", chain(q.x)},         {"s", chain(q.s)},         {"c", rows(q.c)},
            {"b", rows(q.b)},          {"a", rows(q.a)},          {"tau", gamma(q.tau)},
            {"gamma", gamma(q.gamma)}, {"beta", gamma(q.beta)},   {"alpha", gamma(q.alpha)},
            {"pinned_weights", q.pinned_weights}};
}
inline nlohmann::json posteriors_to_json(const LssmPosteriors& q) {
    using namespace ckpt;
    return {{"x", chain(q.x)},         {"c", rows(q.c)},        {"w", rows(q.w)},
            {"tau", gamma(q.tau)},     {"gamma", gamma(q.gamma)}, {"beta", gamma(q.beta)}};
}
inline nlohmann::json posteriors_to_json(const SwitchingPosteriors& q) {
    using namespace ckpt;
    return {{"x", chain(q.x)},     {"c", rows(q.c)},         {"b", rows(q.b)},       {"z", hmm(q.z)},
            {"tau", gamma(q.tau)}, {"gamma", gamma(q.gamma)}, {"beta", gamma(q.beta)}};
}

inline void posteriors_from_json(const nlohmann::json& j, FactorPosteriors& q) {
    using namespace ckpt;
    q.x = chain(j.at("x"));
    q.s = chain(j.at("s"));
    q.c = rows(j.at("c"));
    q.b = rows(j.at("b"));
    q.a = rows(j.at("a"));
    q.tau = gamma(j.at("tau"));
    q.gamma = gamma(j.at("gamma"));
    q.beta = gamma(j.at("beta"));
    q.alpha = gamma(j.at("alpha"));
    q.pinned_weights = j.at("pinned_weights").get<bool>();
}
inline void posteriors_from_json(const nlohmann::json& j, LssmPosteriors& q) {
    using namespace ckpt;
    q.x = chain(j.at("x"));
    q.c = rows(j.at("c"));
    q.w = rows(j.at("w"));
    q.tau = gamma(j.at("tau"));
    q.gamma = gamma(j.at("gamma"));
    q.beta = gamma(j.at("beta"));
}
inline void posteriors_from_json(const nlohmann::json& j, SwitchingPosteriors& q) {
    using namespace ckpt;
    q.x = chain(j.at("x"));
    q.c = rows(j.at("c"));
    q.b = rows(j.at("b"));
    q.z = hmm(j.at("z"));
    q.tau = gamma(j.at("tau"));
    q.gamma = gamma(j.at("gamma"));
    q.beta = gamma(j.at("beta"));
}

inline const char* variant_name(const FactorPosteriors&) { return "tvd"; }
inline const char* variant_name(const LssmPosteriors&) { return "lssm"; }
inline const char* variant_name(const SwitchingPosteriors&) { return "sd"; }

/// A loaded checkpoint; `posteriors` holds the tagged variant.
struct Checkpoint {
    ModelConfig config;
    int sweeps = 0;
    double elbo = 0.0;
    bool converged = false;
    std::variant<FactorPosteriors, LssmPosteriors, SwitchingPosteriors> posteriors;

    std::string variant() const {
        return std::visit([](const auto& q) { return std::string(variant_name(q)); }, posteriors);
    }
};

template <class Posteriors>
nlohmann::json checkpoint_to_json(const FitOutcome<Posteriors>& fit, const ModelConfig& cfg) {
    return {{"format", "tvdyn-checkpoint"},
            {"version", kCheckpointVersion},
            {"variant", variant_name(fit.posteriors)},
            {"config", config_to_json(cfg)},
            {"sweeps", fit.sweeps},
            {"elbo", ckpt::finite(fit.elbo)},
            {"converged", fit.converged},
            {"posteriors", posteriors_to_json(fit.posteriors)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    require(j.value("format", "") == "tvdyn-checkpoint", "checkpoint: not a tvdyn checkpoint");
    const int version = j.at("version").get<int>();
    require(version == kCheckpointVersion, "checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.sweeps = j.at("sweeps").get<int>();
    c.elbo = j.at("elbo").get<double>();
    c.converged = j.at("converged").get<bool>();
    const std::string v = j.at("variant").get<std::string>();
    auto load = [&](auto q) {
        posteriors_from_json(j.at("posteriors"), q);
        c.posteriors = std::move(q);
    };
    if (v == "tvd")
        load(FactorPosteriors{});
    else if (v == "lssm")
        load(LssmPosteriors{});
    else if (v == "sd")
        load(SwitchingPosteriors{});
    else
        throw InvalidArgument("checkpoint: unknown variant '" + v + "'");
    return c;
}

template <class Posteriors>
void save_checkpoint(const std::string& path, const FitOutcome<Posteriors>& fit, const ModelConfig& cfg) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "cannot open '" + path + "' for writing");
    os << checkpoint_to_json(fit, cfg).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "cannot open '" + path + "' for reading");
    return checkpoint_from_json(nlohmann::json::parse(is));
}

}  // namespace tvdyn

#endif  // TVDYN_CHECKPOINT_HPP
