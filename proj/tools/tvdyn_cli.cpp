// Command-line front end: data generation, single fits, scoring, experiment
// runs and plot-data export.

#include <tvdyn/tvdyn.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace tvdyn;

namespace {

struct GenerateArgs {
    std::string spec, out;
    std::optional<std::uint64_t> seed;
    int replicate = 0;
};

struct FitArgs {
    std::string data, out, spec, method = "tvd";
    std::optional<Index> D, K;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_sweeps;
};

struct ScoreArgs {
    std::string checkpoint, truth;
    std::vector<std::string> cells;
    bool predictive = false;
};

struct ExperimentArgs {
    std::string spec, out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> methods;
    std::optional<Index> D, K;
    std::optional<int> workers, replicates;
};

struct ExportArgs {
    std::string checkpoint, out;
    std::vector<std::string> series{"reconstruction"};
    bool predictive = false;
};

ExperimentSpec load_spec_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                                        std::optional<Index> D, std::optional<Index> K) {
    auto e = load_experiment_spec(path);
    if (seed) e.seed = *seed;
    if (D) e.D = *D;
    if (K) e.K = *K;
    return e;
}

int run_generate(const GenerateArgs& a) {
    const auto e = load_spec_with_overrides(a.spec, a.seed, {}, {});
    require(a.replicate >= 0, "generate: replicate must be non-negative");
    const auto rep = prepare_replicate(e, a.replicate);
    save_replicate(a.out, rep);
    std::cout << "wrote " << rep.data.data.rows() << "x" << rep.data.data.cols() << " dataset to " << a.out << " ("
              << rep.split.gap_test.size() << " gap cells, " << rep.split.random_test.size() << " random cells)\n";
    return 0;
}

template <class Outcome>
void write_fit_outputs(const std::string& dir, const Outcome& res, const ModelConfig& cfg) {
    save_checkpoint(dir + "/checkpoint.json", res, cfg);
    save_matrix_csv(dir + "/reconstruction.csv", reconstruct(res.posteriors).mean);
    std::cout << "sweeps " << res.sweeps << " elbo " << format_double(res.elbo)
              << (res.converged ? " converged" : " not converged") << '\n';
}

int run_fit(const FitArgs& a) {
    ExperimentSpec e;
    if (!a.spec.empty()) e = load_experiment_spec(a.spec);
    if (a.D) e.D = *a.D;
    if (a.K) e.K = *a.K;
    if (a.max_sweeps) e.schedule.max_sweeps = *a.max_sweeps;
    const Method m = parse_method(a.method);
    const auto cfg = method_config(e, m, a.seed.value_or(e.seed));
    const auto data = load_observations_csv(a.data);
    std::filesystem::create_directories(a.out);
    std::ofstream log(a.out + "/sweeps.jsonl");
    require(static_cast<bool>(log), "cannot open '" + a.out + "/sweeps.jsonl' for writing");
    switch (m) {
        case Method::lssm: write_fit_outputs(a.out, fit_lssm(data, cfg, &log), cfg); break;
        case Method::sd: write_fit_outputs(a.out, fit_switching(data, cfg, &log), cfg); break;
        case Method::tvd: write_fit_outputs(a.out, fit(data, cfg, &log), cfg); break;
    }
    return 0;
}

int run_score(const ScoreArgs& a) {
    const auto ck = load_checkpoint(a.checkpoint);
    const auto recon = std::visit([&](const auto& q) { return reconstruct(q, a.predictive); }, ck.posteriors);
    const Matrix truth = load_matrix_csv(a.truth);
    require(truth.rows() == recon.mean.rows() && truth.cols() == recon.mean.cols(),
            "score: truth shape does not match the fit");
    std::cout << "cells,count,rmse\n";
    for (const auto& path : a.cells) {
        auto is = detail::open_in(path);
        const auto cells = read_cells_csv(is);
        for (const auto& c : cells)
            require(c.row >= 0 && c.row < truth.rows() && c.col >= 0 && c.col < truth.cols(),
                    "score: cell outside the data in '" + path + "'");
        std::cout << path << ',' << cells.size() << ',' << format_double(rmse(recon.mean, truth, cells)) << '\n';
    }
    return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
    auto e = load_spec_with_overrides(a.spec, a.seed, a.D, a.K);
    if (!a.methods.empty()) {
        e.methods.clear();
        for (const auto& m : a.methods) e.methods.push_back(parse_method(m));
    }
    if (a.workers) e.workers = *a.workers;
    if (a.replicates) e.replicates = *a.replicates;
    if (!a.out.empty()) e.output_dir = a.out;
    require(e.workers >= 1 && e.replicates >= 1, "experiment: workers and replicates must be positive");
    ExperimentOptions opt;
    opt.progress = &std::cerr;
    const auto r = run_experiment(e, opt);
    if (e.output_dir.empty()) {
        write_results_csv(std::cout, r);
    } else {
        write_experiment_outputs(e.output_dir, e, r);
        std::cout << "wrote " << e.output_dir << "/results.csv and results.json\n";
    }
    for (const auto& row : r.rows)
        if (row.status != "ok") return 2;
    return 0;
}

int run_export(const ExportArgs& a) {
    const auto ck = load_checkpoint(a.checkpoint);
    std::vector<PlotSeries> series;
    for (const auto& s : a.series) series.push_back(parse_plot_series(s));
    for (const auto& path : export_plotdata(a.out, ck, series, a.predictive)) std::cout << "wrote " << path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear state-space models with time-varying dynamics"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Simulate one replicate of an experiment's dataset and split");
    g->add_option("-s,--spec", gen.spec, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    g->add_option("-o,--out", gen.out, "Output directory")->required();
    g->add_option("--seed", gen.seed, "Override the experiment seed");
    g->add_option("-r,--replicate", gen.replicate, "Replicate index");

    FitArgs fa;
    auto* f = app.add_subcommand("fit", "Fit one model to an observation CSV");
    f->add_option("-d,--data", fa.data, "Observations CSV (empty cell = missing)")->required()->check(CLI::ExistingFile);
    f->add_option("-o,--out", fa.out, "Output directory")->required();
    f->add_option("-m,--method", fa.method, "lssm, sd or tvd")->check(CLI::IsMember({"lssm", "sd", "tvd"}));
    f->add_option("-s,--spec", fa.spec, "Experiment spec supplying D, K and the schedule")->check(CLI::ExistingFile);
    f->add_option("-D", fa.D, "Latent dimension")->check(CLI::PositiveNumber);
    f->add_option("-K", fa.K, "Number of dynamics bases")->check(CLI::PositiveNumber);
    f->add_option("--seed", fa.seed, "Initialization seed");
    f->add_option("--max-sweeps", fa.max_sweeps, "Sweep limit")->check(CLI::NonNegativeNumber);

    ScoreArgs sa;
    auto* s = app.add_subcommand("score", "RMSE of a fitted reconstruction over listed cells");
    s->add_option("-c,--checkpoint", sa.checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
    s->add_option("-t,--truth", sa.truth, "Truth matrix CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--cells", sa.cells, "Cell lists (row,col CSV)")->required()->check(CLI::ExistingFile);
    s->add_flag("--predictive", sa.predictive, "Score the predictive mean (identical to the latent mean)");

    ExperimentArgs ea;
    auto* e = app.add_subcommand("experiment", "Run a benchmark experiment");
    e->add_option("-s,--spec", ea.spec, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    e->add_option("-o,--out", ea.out, "Output directory (default: spec output_dir, else stdout)");
    e->add_option("--seed", ea.seed, "Override the experiment seed");
    e->add_option("-m,--method", ea.methods, "Methods to run (repeatable)")
        ->check(CLI::IsMember({"lssm", "sd", "tvd"}));
    e->add_option("-D", ea.D, "Latent dimension")->check(CLI::PositiveNumber);
    e->add_option("-K", ea.K, "Number of dynamics bases")->check(CLI::PositiveNumber);
    e->add_option("-j,--workers", ea.workers, "Worker threads")->check(CLI::PositiveNumber);
    e->add_option("--replicates", ea.replicates, "Replicate count")->check(CLI::PositiveNumber);

    ExportArgs xa;
    auto* x = app.add_subcommand("export-plotdata", "Write plot-ready CSV series from a checkpoint");
    x->add_option("-c,--checkpoint", xa.checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
    x->add_option("-o,--out", xa.out, "Output directory")->required();
    x->add_option("--series", xa.series, "reconstruction, weights, states")
        ->check(CLI::IsMember({"reconstruction", "weights", "states"}));
    x->add_flag("--predictive", xa.predictive, "Include observation noise in the bands");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*g) return run_generate(gen);
        if (*f) return run_fit(fa);
        if (*s) return run_score(sa);
        if (*e) return run_experiment_cmd(ea);
        if (*x) return run_export(xa);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 1;
}
