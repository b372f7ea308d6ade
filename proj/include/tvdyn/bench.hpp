#ifndef TVDYN_BENCH_HPP
#define TVDYN_BENCH_HPP

// Gap-reconstruction experiments: generate or load data, hold out gaps and
// random cells, fit each method on the rest and score the reconstructions.

#include "checkpoint.hpp"
#include "csv_io.hpp"
#include "datagen.hpp"
#include "lssm.hpp"
#include "switching.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace tvdyn {

/// Root-mean-square difference; throws on empty or mismatched input.
inline double rmse(const Vector& pred, const Vector& truth) {
    require(pred.size() == truth.size(), "rmse: length mismatch");
    require(pred.size() > 0, "rmse: empty test set");
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

inline double rmse(const Matrix& pred, const Matrix& truth, const std::vector<Cell>& cells) {
    require(!cells.empty(), "rmse: empty test set");
    Vector p(static_cast<Index>(cells.size())), t(static_cast<Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        p[static_cast<Index>(i)] = pred(cells[i].row, cells[i].col);
        t[static_cast<Index>(i)] = truth(cells[i].row, cells[i].col);
    }
    return rmse(p, t);
}

// ---------------------------------------------------------------------------
// Methods

enum class Method { lssm, sd, tvd };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::lssm: return "lssm";
        case Method::sd: return "sd";
        case Method::tvd: return "tvd";
    }
    return "";
}

inline Method parse_method(const std::string& s) {
    if (s == "lssm") return Method::lssm;
    if (s == "sd") return Method::sd;
    if (s == "tvd") return Method::tvd;
    throw InvalidArgument("unknown method '" + s + "' (expected lssm, sd or tvd)");
}

using AnyFit = std::variant<FitResult, LssmFitResult, SwitchingFitResult>;

struct MethodFit {
    AnyFit result;
    Reconstruction recon;
    int sweeps = 0;
    double elbo = 0.0;
    bool converged = false;
};

inline MethodFit fit_method(Method m, const ObservationSet& data, const ModelConfig& cfg, std::ostream* log = nullptr) {
    auto wrap = [](auto res) {
        MethodFit f{{}, reconstruct(res.posteriors), res.sweeps, res.elbo, res.converged};
        f.result = std::move(res);
        return f;
    };
    switch (m) {
        case Method::lssm: return wrap(fit_lssm(data, cfg, log));
        case Method::sd: return wrap(fit_switching(data, cfg, log));
        case Method::tvd: return wrap(fit(data, cfg, log));
    }
    throw InvalidArgument("fit_method: bad method");
}

// ---------------------------------------------------------------------------
// Datasets

struct DatasetSpec {
    std::string kind = "frequency";  // frequency | advection | csv
    FrequencySignalSpec frequency;
    AdvectionDiffusionSpec advection;
    std::string observations_path;   // csv
    std::string truth_path;          // csv, optional
};

struct Dataset {
    ObservationSet data;   // everything that was measured
    Matrix truth;          // scoring target, same shape
    nlohmann::json metadata;
};

inline nlohmann::json to_json(const FrequencySignalSpec& s) {
    return {{"a", s.a}, {"b", s.b}, {"c", s.c}, {"N", s.N}, {"noise_std", s.noise_std}, {"seed", s.seed}};
}

inline nlohmann::json to_json(const AdvectionDiffusionSpec& s) {
    return {{"grid", s.grid},
            {"domain", s.domain},
            {"diffusivity", s.diffusivity},
            {"rho", s.rho},
            {"velocity_std", s.velocity_std},
            {"source_length_scale", s.source_length_scale},
            {"source_std", s.source_std},
            {"dt", s.dt},
            {"substeps", s.substeps},
            {"burn_in", s.burn_in},
            {"n_kept", s.n_kept},
            {"sensors", s.sensors},
            {"obs_noise_std", s.obs_noise_std},
            {"initial_std", s.initial_std},
            {"seed", s.seed}};
}

namespace detail {

/// Rejects keys outside `allowed`, so typos in spec files do not pass silently.
inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        require(ok, where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline FrequencySignalSpec frequency_spec_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"a", "b", "c", "N", "noise_std", "seed"}, "frequency");
    FrequencySignalSpec s;
    detail::read_opt(j, "a", s.a);
    detail::read_opt(j, "b", s.b);
    detail::read_opt(j, "c", s.c);
    detail::read_opt(j, "N", s.N);
    detail::read_opt(j, "noise_std", s.noise_std);
    detail::read_opt(j, "seed", s.seed);
    s.validate();
    return s;
}

inline AdvectionDiffusionSpec advection_spec_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"grid", "domain", "diffusivity", "rho", "velocity_std", "source_length_scale", "source_std",
                        "dt", "substeps", "burn_in", "n_kept", "sensors", "obs_noise_std", "initial_std", "seed"},
                       "advection");
    AdvectionDiffusionSpec s;
    detail::read_opt(j, "grid", s.grid);
    detail::read_opt(j, "domain", s.domain);
    detail::read_opt(j, "diffusivity", s.diffusivity);
    detail::read_opt(j, "rho", s.rho);
    detail::read_opt(j, "velocity_std", s.velocity_std);
    detail::read_opt(j, "source_length_scale", s.source_length_scale);
    detail::read_opt(j, "source_std", s.source_std);
    detail::read_opt(j, "dt", s.dt);
    detail::read_opt(j, "substeps", s.substeps);
    detail::read_opt(j, "burn_in", s.burn_in);
    detail::read_opt(j, "n_kept", s.n_kept);
    detail::read_opt(j, "sensors", s.sensors);
    detail::read_opt(j, "obs_noise_std", s.obs_noise_std);
    detail::read_opt(j, "initial_std", s.initial_std);
    detail::read_opt(j, "seed", s.seed);
    s.validate();
    return s;
}

inline nlohmann::json to_json(const DatasetSpec& d) {
    nlohmann::json j{{"kind", d.kind}};
    if (d.kind == "frequency") j["frequency"] = to_json(d.frequency);
    if (d.kind == "advection") j["advection"] = to_json(d.advection);
    if (d.kind == "csv") {
        j["observations"] = d.observations_path;
        if (!d.truth_path.empty()) j["truth"] = d.truth_path;
    }
    return j;
}

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"kind", "frequency", "advection", "observations", "truth"}, "dataset");
    DatasetSpec d;
    detail::read_opt(j, "kind", d.kind);
    if (d.kind == "frequency") {
        d.frequency = frequency_spec_from_json(j.value("frequency", nlohmann::json::object()));
    } else if (d.kind == "advection") {
        d.advection = advection_spec_from_json(j.value("advection", nlohmann::json::object()));
    } else if (d.kind == "csv") {
        require(j.contains("observations"), "dataset: csv kind needs an 'observations' path");
        d.observations_path = j.at("observations").get<std::string>();
        detail::read_opt(j, "truth", d.truth_path);
    } else {
        throw InvalidArgument("dataset: unknown kind '" + d.kind + "'");
    }
    return d;
}

/// Builds the dataset; `seed` replaces the generator seed of synthetic kinds.
inline Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    Dataset out;
    if (spec.kind == "frequency") {
        auto s = spec.frequency;
        s.seed = seed;
        const auto sig = gen_frequency_signal(s);
        out.data = ObservationSet(Matrix(sig.noisy.transpose()));
        out.truth = sig.truth.transpose();
        out.metadata = {{"kind", "frequency"}, {"spec", to_json(s)}};
    } else if (spec.kind == "advection") {
        auto s = spec.advection;
        s.seed = seed;
        auto sim = simulate_advection_diffusion(s);
        out.data = std::move(sim.observations);
        out.truth = std::move(sim.truth);
        nlohmann::json coords = nlohmann::json::array();
        for (const auto& [r, c] : sim.sensor_coords) coords.push_back({r, c});
        out.metadata = {{"kind", "advection"}, {"spec", to_json(s)}, {"sensor_coords", coords}};
    } else if (spec.kind == "csv") {
        out.data = load_observations_csv(spec.observations_path);
        if (spec.truth_path.empty()) {
            // Score against the held-out measurements themselves.
            out.truth = out.data.values();
        } else {
            out.truth = load_matrix_csv(spec.truth_path);
            require(out.truth.rows() == out.data.rows() && out.truth.cols() == out.data.cols(),
                    "dataset: truth shape does not match observations");
        }
        out.metadata = {{"kind", "csv"}, {"observations", spec.observations_path}, {"truth", spec.truth_path}};
    } else {
        throw InvalidArgument("dataset: unknown kind '" + spec.kind + "'");
    }
    return out;
}

/// observations.csv, truth.csv and metadata.json in `dir`.
inline void save_dataset(const std::string& dir, const Dataset& d) {
    std::filesystem::create_directories(dir);
    save_observations_csv(dir + "/observations.csv", d.data);
    save_matrix_csv(dir + "/truth.csv", d.truth);
    auto os = detail::open_out(dir + "/metadata.json");
    os << d.metadata.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Masks applied to data

/// Training data: cells outside `train` are unobserved and zeroed, so a fit
/// cannot read them.
inline ObservationSet training_data(const ObservationSet& data, const Mask& train) {
    require(train.rows() == data.rows() && train.cols() == data.cols(), "training_data: mask shape mismatch");
    const Mask keep = train && data.observed();
    const Matrix values = keep.select(data.values(), Matrix::Zero(data.rows(), data.cols()));
    return ObservationSet(values, keep);
}

/// Throws unless no test cell is visible in `train_data`.
inline void audit_split(const ObservationSet& train_data, const MaskSplit& split) {
    for (const auto* set : {&split.gap_test, &split.random_test})
        for (const auto& c : *set)
            require(!train_data.observed(c.row, c.col) && train_data.value(c.row, c.col) == 0.0,
                    "audit: test cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) +
                        ") is visible to the fit");
    for (Index n : split.gap_columns)
        require(train_data.col_set(n).empty(), "audit: gap column " + std::to_string(n) + " is observed");
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentSpec {
    std::string name = "experiment";
    DatasetSpec dataset;
    MaskPlan mask;
    int replicates = 1;
    std::uint64_t seed = 0;
    std::vector<Method> methods{Method::lssm, Method::sd, Method::tvd};
    Index D = 5;
    Index K = 4;
    Schedule schedule;
    int workers = 1;
    std::string output_dir;
};

inline nlohmann::json to_json(const ExperimentSpec& e) {
    nlohmann::json methods = nlohmann::json::array();
    for (auto m : e.methods) methods.push_back(method_name(m));
    return {{"name", e.name},
            {"dataset", to_json(e.dataset)},
            {"mask",
             {{"gap_count", e.mask.gap_count},
              {"gap_length", e.mask.gap_length},
              {"random_fraction", e.mask.random_fraction}}},
            {"replicates", e.replicates},
            {"seed", e.seed},
            {"methods", methods},
            {"D", e.D},
            {"K", e.K},
            {"schedule",
             {{"warmup_sweeps", e.schedule.warmup_sweeps},
              {"max_sweeps", e.schedule.max_sweeps},
              {"elbo_rel_tol", e.schedule.elbo_rel_tol},
              {"rotate", e.schedule.rotate}}},
            {"workers", e.workers},
            {"output_dir", e.output_dir}};
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"name", "dataset", "mask", "replicates", "seed", "methods", "D", "K", "schedule", "workers",
                        "output_dir"},
                       "experiment");
    ExperimentSpec e;
    detail::read_opt(j, "name", e.name);
    if (j.contains("dataset")) e.dataset = dataset_spec_from_json(j.at("dataset"));
    if (j.contains("mask")) {
        const auto& m = j.at("mask");
        detail::check_keys(m, {"gap_count", "gap_length", "random_fraction"}, "mask");
        detail::read_opt(m, "gap_count", e.mask.gap_count);
        detail::read_opt(m, "gap_length", e.mask.gap_length);
        detail::read_opt(m, "random_fraction", e.mask.random_fraction);
    }
    detail::read_opt(j, "replicates", e.replicates);
    detail::read_opt(j, "seed", e.seed);
    if (j.contains("methods")) {
        e.methods.clear();
        for (const auto& m : j.at("methods")) e.methods.push_back(parse_method(m.get<std::string>()));
    }
    detail::read_opt(j, "D", e.D);
    detail::read_opt(j, "K", e.K);
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        detail::check_keys(s, {"warmup_sweeps", "max_sweeps", "elbo_rel_tol", "rotate"}, "schedule");
        detail::read_opt(s, "warmup_sweeps", e.schedule.warmup_sweeps);
        detail::read_opt(s, "max_sweeps", e.schedule.max_sweeps);
        detail::read_opt(s, "elbo_rel_tol", e.schedule.elbo_rel_tol);
        detail::read_opt(s, "rotate", e.schedule.rotate);
    }
    detail::read_opt(j, "workers", e.workers);
    detail::read_opt(j, "output_dir", e.output_dir);
    require(e.replicates >= 1, "experiment: replicates must be positive");
    require(e.workers >= 1, "experiment: workers must be positive");
    require(!e.methods.empty(), "experiment: no methods");
    require(e.D >= 1 && e.K >= 1, "experiment: D and K must be positive");
    return e;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    auto is = detail::open_in(path);
    return experiment_spec_from_json(nlohmann::json::parse(is));
}

/// Seeds of one replicate, derived from the experiment seed.
struct ReplicateSeeds {
    std::uint64_t data = 0;
    std::uint64_t mask = 0;
    std::uint64_t model = 0;
};

inline ReplicateSeeds replicate_seeds(std::uint64_t seed, int replicate) {
    auto draw = [&](std::uint64_t purpose) { return stream_engine(seed, 1000 * purpose + replicate)(); };
    return {draw(1), draw(2), draw(3)};
}

struct ResultRow {
    std::string method;
    int replicate = 0;
    ReplicateSeeds seeds;
    double gap_rmse = std::numeric_limits<double>::quiet_NaN();
    double random_rmse = std::numeric_limits<double>::quiet_NaN();
    int sweeps = 0;
    double elbo = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    std::string status = "ok";
};

struct AggregateRow {
    std::string method;
    int ok = 0;
    double gap_rmse_mean = std::numeric_limits<double>::quiet_NaN();
    double gap_rmse_std = std::numeric_limits<double>::quiet_NaN();
    double random_rmse_mean = std::numeric_limits<double>::quiet_NaN();
    double random_rmse_std = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
    std::vector<ResultRow> rows;  // replicate-major, methods in spec order
    std::vector<AggregateRow> aggregates;
};

/// Mean and sample standard deviation of the successful rows of each method.
inline std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows, const std::vector<Method>& methods) {
    std::vector<AggregateRow> out;
    for (auto m : methods) {
        AggregateRow a;
        a.method = method_name(m);
        std::vector<double> g, r;
        for (const auto& row : rows)
            if (row.method == a.method && row.status == "ok") {
                g.push_back(row.gap_rmse);
                r.push_back(row.random_rmse);
            }
        a.ok = static_cast<int>(g.size());
        auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
            if (v.empty()) return;
            mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        };
        stats(g, a.gap_rmse_mean, a.gap_rmse_std);
        stats(r, a.random_rmse_mean, a.random_rmse_std);
        out.push_back(a);
    }
    return out;
}

namespace detail {

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace detail

inline void write_results_csv(std::ostream& os, const ExperimentResult& r) {
    os << "kind,method,replicate,data_seed,mask_seed,model_seed,gap_rmse,random_rmse,sweeps,elbo,converged,status\n";
    for (const auto& row : r.rows) {
        std::string status = row.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        os << "replicate," << row.method << ',' << row.replicate << ',' << row.seeds.data << ',' << row.seeds.mask
           << ',' << row.seeds.model << ',' << detail::csv_number(row.gap_rmse) << ','
           << detail::csv_number(row.random_rmse) << ',' << row.sweeps << ',' << detail::csv_number(row.elbo) << ','
           << (row.converged ? 1 : 0) << ',' << status << '\n';
    }
    os << "kind,method,ok,gap_rmse_mean,gap_rmse_std,random_rmse_mean,random_rmse_std\n";
    for (const auto& a : r.aggregates)
        os << "aggregate," << a.method << ',' << a.ok << ',' << detail::csv_number(a.gap_rmse_mean) << ','
           << detail::csv_number(a.gap_rmse_std) << ',' << detail::csv_number(a.random_rmse_mean) << ','
           << detail::csv_number(a.random_rmse_std) << '\n';
}

inline nlohmann::json results_to_json(const ExperimentSpec& spec, const ExperimentResult& r) {
    nlohmann::json rows = nlohmann::json::array(), aggs = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"method", row.method},
                        {"replicate", row.replicate},
                        {"seeds", {{"data", row.seeds.data}, {"mask", row.seeds.mask}, {"model", row.seeds.model}}},
                        {"gap_rmse", detail::json_number(row.gap_rmse)},
                        {"random_rmse", detail::json_number(row.random_rmse)},
                        {"sweeps", row.sweeps},
                        {"elbo", detail::json_number(row.elbo)},
                        {"converged", row.converged},
                        {"status", row.status}});
    for (const auto& a : r.aggregates)
        aggs.push_back({{"method", a.method},
                        {"ok", a.ok},
                        {"gap_rmse_mean", detail::json_number(a.gap_rmse_mean)},
                        {"gap_rmse_std", detail::json_number(a.gap_rmse_std)},
                        {"random_rmse_mean", detail::json_number(a.random_rmse_mean)},
                        {"random_rmse_std", detail::json_number(a.random_rmse_std)}});
    return {{"spec", to_json(spec)}, {"rows", rows}, {"aggregates", aggs}};
}

/// Fitted state of one (method, replicate) cell, kept when requested.
/// Dataset, split and training view of one replicate.
struct Replicate {
    ReplicateSeeds seeds;
    Dataset data;
    MaskSplit split;
    ObservationSet train;
};

inline Replicate prepare_replicate(const ExperimentSpec& spec, int r) {
    Replicate rep;
    rep.seeds = replicate_seeds(spec.seed, r);
    rep.data = make_dataset(spec.dataset, rep.seeds.data);
    MaskPlan plan = spec.mask;
    plan.seed = rep.seeds.mask;
    rep.split = make_mask_plan(plan, rep.data.data.observed());
    rep.train = training_data(rep.data.data, rep.split.train);
    audit_split(rep.train, rep.split);
    return rep;
}

/// Model settings for one method; the classical LSSM has a single basis.
inline ModelConfig method_config(const ExperimentSpec& spec, Method m, std::uint64_t seed) {
    auto cfg = ModelConfig::make(spec.D, m == Method::lssm ? 1 : spec.K, seed);
    cfg.schedule = spec.schedule;
    return cfg;
}

struct CellFit {
    Method method;
    int replicate = 0;
    MethodFit fit;
};

struct ExperimentOptions {
    bool keep_fits = false;         // fill `fits`
    std::vector<CellFit>* fits = nullptr;
    std::ostream* progress = nullptr;  // one line per finished cell
};

/// Runs every (replicate, method) cell on `spec.workers` threads. Fit
/// failures are recorded in the row status. Output is independent of the
/// worker count and of completion order.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const ExperimentOptions& opt = {}) {
    const int R = spec.replicates;
    const auto n_methods = static_cast<int>(spec.methods.size());

    // Datasets and splits first; they are cheap next to the fits.
    std::vector<Replicate> reps;
    for (int r = 0; r < R; ++r) reps.push_back(prepare_replicate(spec, r));

    ExperimentResult out;
    out.rows.resize(static_cast<std::size_t>(R * n_methods));
    std::vector<std::optional<MethodFit>> kept(opt.keep_fits ? out.rows.size() : 0);
    std::atomic<int> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (int task = next++; task < R * n_methods; task = next++) {
            const int r = task / n_methods;
            const Method m = spec.methods[task % n_methods];
            const auto& rep = reps[r];
            ResultRow& row = out.rows[task];
            row.method = method_name(m);
            row.replicate = r;
            row.seeds = rep.seeds;
            try {
                const auto cfg = method_config(spec, m, rep.seeds.model);
                auto f = fit_method(m, rep.train, cfg);
                if (!rep.split.gap_test.empty()) row.gap_rmse = rmse(f.recon.mean, rep.data.truth, rep.split.gap_test);
                if (!rep.split.random_test.empty())
                    row.random_rmse = rmse(f.recon.mean, rep.data.truth, rep.split.random_test);
                row.sweeps = f.sweeps;
                row.elbo = f.elbo;
                row.converged = f.converged;
                if (opt.keep_fits) kept[task] = std::move(f);
            } catch (const std::exception& e) {
                row.status = std::string("error: ") + e.what();
            }
            if (opt.progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                *opt.progress << "replicate " << r << " " << row.method << ": " << row.status << " gap "
                              << row.gap_rmse << " random " << row.random_rmse << " sweeps " << row.sweeps << '\n';
            }
        }
    };
    const int threads = std::min(spec.workers, R * n_methods);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    out.aggregates = aggregate(out.rows, spec.methods);
    if (opt.keep_fits && opt.fits)
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (kept[i]) opt.fits->push_back({spec.methods[i % n_methods], static_cast<int>(i) / n_methods, *kept[i]});
    return out;
}

/// results.csv and results.json in `dir`.
inline void write_experiment_outputs(const std::string& dir, const ExperimentSpec& spec, const ExperimentResult& r) {
    std::filesystem::create_directories(dir);
    {
        auto os = detail::open_out(dir + "/results.csv");
        write_results_csv(os, r);
    }
    auto os = detail::open_out(dir + "/results.json");
    os << results_to_json(spec, r).dump(2) << '\n';
}

/// row,col per line after a header.
inline void write_cells_csv(std::ostream& os, const std::vector<Cell>& cells) {
    os << "row,col\n";
    for (const auto& c : cells) os << c.row << ',' << c.col << '\n';
}

inline std::vector<Cell> read_cells_csv(std::istream& is) {
    const auto rows = detail::read_csv_rows(is);
    require(!rows.empty() && rows[0].size() == 2 && rows[0][0] == "row" && rows[0][1] == "col",
            "cells: expected header 'row,col'");
    std::vector<Cell> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        require(rows[i].size() == 2, "cells: expected two columns");
        out.push_back({static_cast<Index>(parse_double(rows[i][0])), static_cast<Index>(parse_double(rows[i][1]))});
    }
    return out;
}

/// Dataset plus train.csv (test cells blanked), gap_cells.csv and random_cells.csv.
inline void save_replicate(const std::string& dir, const Replicate& rep) {
    save_dataset(dir, rep.data);
    save_observations_csv(dir + "/train.csv", rep.train);
    {
        auto os = detail::open_out(dir + "/gap_cells.csv");
        write_cells_csv(os, rep.split.gap_test);
    }
    auto os = detail::open_out(dir + "/random_cells.csv");
    write_cells_csv(os, rep.split.random_test);
}

// ---------------------------------------------------------------------------
// Mixing-weight summaries

/// Time series of <s_kn> for n = 0..N, one column per component.
inline Matrix weight_means(const GaussianChainPosterior& s) {
    Matrix out(s.length(), s.dim());
    for (Index n = 0; n < s.length(); ++n) out.row(n) = s.means[n].transpose();
    return out;
}

/// Components whose posterior mean stays below `threshold` in magnitude.
inline std::vector<Index> pruned_components(const GaussianChainPosterior& s, double threshold = 0.05) {
    const Matrix w = weight_means(s);
    std::vector<Index> out;
    for (Index k = 0; k < w.cols(); ++k)
        if (w.col(k).cwiseAbs().maxCoeff() < threshold) out.push_back(k);
    return out;
}

/// Temporal coefficient of variation std_n(<s_kn>) / |mean_n(<s_kn>)| per
/// component (infinite for a zero mean).
inline Vector weight_cov(const GaussianChainPosterior& s) {
    const Matrix w = weight_means(s);
    Vector out(w.cols());
    for (Index k = 0; k < w.cols(); ++k) {
        const double mean = w.col(k).mean();
        const double sd = std::sqrt((w.col(k).array() - mean).square().mean());
        out[k] = std::abs(mean) > 0.0 ? sd / std::abs(mean) : std::numeric_limits<double>::infinity();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plot data

/// row,time,mean,lower,upper with lower/upper = mean -/+ 2 std; time is the
/// 1-based observation index.
inline void write_reconstruction_series(std::ostream& os, const Reconstruction& r) {
    os << "row,time,mean,lower,upper\n";
    for (Index m = 0; m < r.mean.rows(); ++m)
        for (Index n = 0; n < r.mean.cols(); ++n) {
            const double mu = r.mean(m, n), sd = r.std(m, n);
            os << m << ',' << n + 1 << ',' << format_double(mu) << ',' << format_double(mu - 2.0 * sd) << ','
               << format_double(mu + 2.0 * sd) << '\n';
        }
}

/// component,time,mean,lower,upper for n = 0..N.
inline void write_weight_series(std::ostream& os, const GaussianChainPosterior& s) {
    os << "component,time,mean,lower,upper\n";
    for (Index k = 0; k < s.dim(); ++k)
        for (Index n = 0; n < s.length(); ++n) {
            const double mu = s.means[n][k], sd = std::sqrt(std::max(s.covs[n](k, k), 0.0));
            os << k << ',' << n << ',' << format_double(mu) << ',' << format_double(mu - 2.0 * sd) << ','
               << format_double(mu + 2.0 * sd) << '\n';
        }
}

/// time,p_0,...,p_{K-1} for n = 1..N.
inline void write_state_probabilities(std::ostream& os, const HmmPosterior& z) {
    os << "time";
    for (Index k = 0; k < z.K(); ++k) os << ",p_" << k;
    os << '\n';
    for (Index n = 0; n < z.N(); ++n) {
        os << n + 1;
        for (Index k = 0; k < z.K(); ++k) os << ',' << format_double(z.state_probs(n, k));
        os << '\n';
    }
}

enum class PlotSeries { reconstruction, weights, states };

inline PlotSeries parse_plot_series(const std::string& s) {
    if (s == "reconstruction") return PlotSeries::reconstruction;
    if (s == "weights") return PlotSeries::weights;
    if (s == "states") return PlotSeries::states;
    throw InvalidArgument("unknown plot series '" + s + "' (expected reconstruction, weights or states)");
}

/// Writes the requested series of a fitted checkpoint into `dir`; returns
/// the written paths. Weights need a time-varying fit, states a switching fit.
inline std::vector<std::string> export_plotdata(const std::string& dir, const Checkpoint& ck,
                                                const std::vector<PlotSeries>& series, bool predictive = false) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    for (auto s : series) {
        std::string path;
        switch (s) {
            case PlotSeries::reconstruction: {
                path = dir + "/reconstruction.csv";
                auto os = detail::open_out(path);
                std::visit([&](const auto& q) { write_reconstruction_series(os, reconstruct(q, predictive)); },
                           ck.posteriors);
                break;
            }
            case PlotSeries::weights: {
                const auto* q = std::get_if<FactorPosteriors>(&ck.posteriors);
                require(q != nullptr, "export: mixing weights exist only for a time-varying fit, not '" +
                                          ck.variant() + "'");
                path = dir + "/weights.csv";
                auto os = detail::open_out(path);
                write_weight_series(os, q->s);
                break;
            }
            case PlotSeries::states: {
                const auto* q = std::get_if<SwitchingPosteriors>(&ck.posteriors);
                require(q != nullptr, "export: state probabilities exist only for a switching fit, not '" +
                                          ck.variant() + "'");
                path = dir + "/states.csv";
                auto os = detail::open_out(path);
                write_state_probabilities(os, q->z);
                break;
            }
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace tvdyn

#endif  // TVDYN_BENCH_HPP
