#ifndef TVDYN_DATAGEN_HPP
#define TVDYN_DATAGEN_HPP

// Synthetic data: a sinusoid with modulated frequency, stochastic
// advection-diffusion on a periodic grid, and gap / random-missing masks.

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace tvdyn {

/// Independent engine for one named stream of a seed, so that changing how
/// much one part of a generator draws never shifts the others.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Changing-frequency signal

struct FrequencySignalSpec {
    double a = 0.1;
    double b = 0.01;
    double c = 8.0;
    Index N = 1000;
    double noise_std = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        require(N >= 1, "FrequencySignalSpec: N must be positive");
        require(noise_std >= 0.0 && std::isfinite(noise_std), "FrequencySignalSpec: noise_std must be >= 0");
    }
};

struct FrequencySignal {
    Vector truth;
    Vector noisy;
};

/// Phase in cycles: a (n + c sin(2 pi b n)).
inline double frequency_signal_phase(const FrequencySignalSpec& s, double n) {
    return s.a * (n + s.c * std::sin(2.0 * M_PI * s.b * n));
}

/// f(n) = sin(2 pi a (n + c sin(2 pi b n))) plus Gaussian noise.
inline FrequencySignal gen_frequency_signal(const FrequencySignalSpec& s) {
    s.validate();
    auto rng = stream_engine(s.seed, 1);
    std::normal_distribution<double> z(0.0, 1.0);
    FrequencySignal out{Vector(s.N), Vector(s.N)};
    for (Index n = 0; n < s.N; ++n) {
        out.truth[n] = std::sin(2.0 * M_PI * frequency_signal_phase(s, static_cast<double>(n)));
        out.noisy[n] = out.truth[n] + s.noise_std * z(rng);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stochastic advection-diffusion on the unit torus

struct AdvectionDiffusionSpec {
    Index grid = 32;                   // G, nodes per side
    double domain = 1.0;               // side length
    double diffusivity = 0.002;        // delta
    double rho = 0.99;                 // velocity persistence per kept sample
    double velocity_std = 0.04;        // stationary std of each velocity component
    double source_length_scale = 0.2;  // squared-exponential, in domain units
    double source_std = 1.0;           // source amplitude per unit time
    double dt = 0.061;
    Index substeps = 20;               // kept sample every `substeps` steps
    Index burn_in = 100;               // kept-sample intervals discarded first
    Index n_kept = 500;
    Index sensors = 50;
    double obs_noise_std = 0.05;
    double initial_std = 0.0;          // optional GP initial field
    std::uint64_t seed = 0;

    double spacing() const { return domain / static_cast<double>(grid); }

    /// Velocity bound used by the stability checks (six stationary std).
    double velocity_bound() const { return 6.0 * velocity_std; }

    void validate() const {
        require(grid >= 3, "AdvectionDiffusionSpec: grid must be at least 3");
        require(domain > 0.0 && dt > 0.0, "AdvectionDiffusionSpec: domain and dt must be positive");
        require(substeps >= 1 && n_kept >= 1 && burn_in >= 0, "AdvectionDiffusionSpec: bad step counts");
        require(rho > 0.0 && rho < 1.0, "AdvectionDiffusionSpec: rho must lie in (0, 1)");
        require(diffusivity >= 0.0 && velocity_std >= 0.0 && source_std >= 0.0 && obs_noise_std >= 0.0 &&
                    initial_std >= 0.0,
                "AdvectionDiffusionSpec: scales must be non-negative");
        require(source_length_scale > 0.0, "AdvectionDiffusionSpec: source length-scale must be positive");
        require(sensors >= 1 && sensors <= grid * grid, "AdvectionDiffusionSpec: sensor count out of range");
        const double h = spacing();
        require(diffusivity * dt / (h * h) <= 0.25,
                "AdvectionDiffusionSpec: diffusion stability bound delta*dt/h^2 <= 0.25 violated");
        require(velocity_bound() * dt / h <= 0.5,
                "AdvectionDiffusionSpec: advection bound max|v|*dt/h <= 0.5 violated");
        // Forward Euler with central advection also needs |v|^2 dt <= 2 delta.
        require(velocity_bound() * velocity_bound() * dt <= 2.0 * diffusivity,
                "AdvectionDiffusionSpec: advection-diffusion bound |v|^2*dt <= 2*delta violated");
    }
};

struct AdvectionDiffusionResult {
    std::vector<Matrix> fields;                 // n_kept fields, G x G, indexed (row = y, col = x)
    Matrix velocities;                          // n_kept x 2, (vx, vy) used after each kept sample
    std::vector<std::pair<Index, Index>> sensor_coords;  // (row, col) grid nodes
    Matrix truth;                               // sensors x n_kept, noiseless field at the sensors
    ObservationSet observations;                // noisy, fully observed
};

namespace detail {

/// Square root factor A of the G x G periodic squared-exponential
/// covariance (A A^T = K), from its eigendecomposition.
inline Matrix periodic_se_factor(Index G, double h, double length_scale) {
    Matrix k(G, G);
    for (Index i = 0; i < G; ++i)
        for (Index j = 0; j < G; ++j) {
            const Index d = std::min(std::abs(i - j), G - std::abs(i - j));
            const double r = static_cast<double>(d) * h;
            k(i, j) = std::exp(-0.5 * r * r / (length_scale * length_scale));
        }
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

inline Matrix standard_normal_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = z(rng);
    return m;
}

/// One forward-Euler step of f_t = delta lap f - v . grad f on the torus.
inline void advection_diffusion_step(Matrix& f, double delta, double vx, double vy, double dt, double h) {
    const Index G = f.rows();
    Matrix next(G, G);
    const double dc = delta * dt / (h * h);
    const double ax = vx * dt / (2.0 * h), ay = vy * dt / (2.0 * h);
    for (Index i = 0; i < G; ++i) {
        const Index ip = (i + 1) % G, im = (i + G - 1) % G;
        for (Index j = 0; j < G; ++j) {
            const Index jp = (j + 1) % G, jm = (j + G - 1) % G;
            const double lap = f(ip, j) + f(im, j) + f(i, jp) + f(i, jm) - 4.0 * f(i, j);
            next(i, j) = f(i, j) + dc * lap - ax * (f(i, jp) - f(i, jm)) - ay * (f(ip, j) - f(im, j));
        }
    }
    f.swap(next);
}

}  // namespace detail

/// Stationary AR(1) velocity path, one row per kept sample:
/// v(t+1) = sqrt(rho) v(t) + sqrt(1 - rho) xi, xi ~ N(0, velocity_std^2).
inline Matrix simulate_velocity(const AdvectionDiffusionSpec& s, Index steps, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, s.velocity_std);
    Matrix v(steps, 2);
    Vector cur(2);
    cur << z(rng), z(rng);
    const double keep = std::sqrt(s.rho), fresh = std::sqrt(1.0 - s.rho);
    for (Index t = 0; t < steps; ++t) {
        if (t > 0) cur = keep * cur + fresh * Vector{{z(rng), z(rng)}};
        v.row(t) = cur.transpose();
    }
    return v;
}

inline AdvectionDiffusionResult simulate_advection_diffusion(const AdvectionDiffusionSpec& s) {
    s.validate();
    const Index G = s.grid;
    const double h = s.spacing();
    auto vel_rng = stream_engine(s.seed, 11);
    auto src_rng = stream_engine(s.seed, 12);
    auto init_rng = stream_engine(s.seed, 13);
    auto sensor_rng = stream_engine(s.seed, 14);
    auto noise_rng = stream_engine(s.seed, 15);

    const Matrix factor = detail::periodic_se_factor(G, h, s.source_length_scale);
    auto gp_sample = [&](std::mt19937_64& rng) {
        return Matrix(factor * detail::standard_normal_matrix(rng, G, G) * factor.transpose());
    };

    Matrix f = Matrix::Zero(G, G);
    if (s.initial_std > 0.0) f = s.initial_std * gp_sample(init_rng);

    const Index total = s.burn_in + s.n_kept;
    const Matrix vel = simulate_velocity(s, total, vel_rng);
    const double bound = s.velocity_bound();
    const double src_scale = s.source_std * std::sqrt(s.dt);

    AdvectionDiffusionResult out;
    out.velocities.resize(s.n_kept, 2);
    for (Index t = 0; t < total; ++t) {
        const double vx = vel(t, 0), vy = vel(t, 1);
        require(std::abs(vx) <= bound && std::abs(vy) <= bound,
                "simulate_advection_diffusion: velocity exceeded the stability bound max|v|*dt/h <= 0.5");
        for (Index k = 0; k < s.substeps; ++k) {
            detail::advection_diffusion_step(f, s.diffusivity, vx, vy, s.dt, h);
            if (s.source_std > 0.0) f += src_scale * gp_sample(src_rng);
        }
        if (t >= s.burn_in) {
            out.fields.push_back(f);
            out.velocities.row(t - s.burn_in) = vel.row(t);
        }
    }

    // Distinct random sensor nodes.
    std::vector<Index> nodes(G * G);
    std::iota(nodes.begin(), nodes.end(), Index{0});
    for (Index i = 0; i < s.sensors; ++i) {
        std::uniform_int_distribution<Index> pick(i, G * G - 1);
        std::swap(nodes[i], nodes[pick(sensor_rng)]);
    }
    std::normal_distribution<double> noise(0.0, s.obs_noise_std);
    out.truth.resize(s.sensors, s.n_kept);
    Matrix y(s.sensors, s.n_kept);
    for (Index m = 0; m < s.sensors; ++m) {
        const Index r = nodes[m] / G, c = nodes[m] % G;
        out.sensor_coords.emplace_back(r, c);
        for (Index t = 0; t < s.n_kept; ++t) {
            out.truth(m, t) = out.fields[t](r, c);
            y(m, t) = out.truth(m, t) + (s.obs_noise_std > 0.0 ? noise(noise_rng) : 0.0);
        }
    }
    out.observations = ObservationSet(y);
    return out;
}

// ---------------------------------------------------------------------------
// Masks

struct MaskPlan {
    Index gap_count = 0;
    Index gap_length = 15;
    double random_fraction = 0.0;
    std::uint64_t seed = 0;
};

struct Cell {
    Index row;
    Index col;
    bool operator==(const Cell&) const = default;
};

struct MaskSplit {
    Mask train;
    std::vector<Index> gap_columns;   // sorted
    std::vector<Cell> gap_test;       // every observed cell in a gap column
    std::vector<Cell> random_test;    // sorted by (col, row)
};

/// Places gap_count gaps of gap_length columns uniformly at random among
/// all arrangements that keep at least one column before, between and
/// after the gaps, then withholds round(fraction * remaining) of the
/// remaining observed cells.
inline MaskSplit make_mask_plan(const MaskPlan& plan, const Mask& observed) {
    const Index M = observed.rows(), N = observed.cols();
    require(plan.gap_count >= 0 && plan.gap_length >= 1, "make_mask_plan: bad gap sizes");
    require(plan.random_fraction >= 0.0 && plan.random_fraction <= 1.0, "make_mask_plan: fraction outside [0, 1]");
    const Index g = plan.gap_count, len = plan.gap_length;
    const Index free = N - g * len;
    require(g == 0 || free >= g + 1, "make_mask_plan: gaps do not fit in the sequence");
    auto gap_rng = stream_engine(plan.seed, 21);
    auto rnd_rng = stream_engine(plan.seed, 22);

    MaskSplit out;
    out.train = observed;
    if (g > 0) {
        // Spacer lengths s_0..s_g >= 1 summing to `free`: choose g distinct
        // cut points in 1..free-1.
        std::vector<Index> cuts(free - 1);
        std::iota(cuts.begin(), cuts.end(), Index{1});
        for (Index i = 0; i < g; ++i) {
            std::uniform_int_distribution<Index> pick(i, static_cast<Index>(cuts.size()) - 1);
            std::swap(cuts[i], cuts[pick(gap_rng)]);
        }
        cuts.resize(g);
        std::sort(cuts.begin(), cuts.end());
        for (Index i = 0; i < g; ++i) {
            const Index start = cuts[i] + i * len;
            for (Index n = start; n < start + len; ++n) out.gap_columns.push_back(n);
        }
    }
    for (Index n : out.gap_columns)
        for (Index m = 0; m < M; ++m) {
            if (observed(m, n)) out.gap_test.push_back({m, n});
            out.train(m, n) = false;
        }

    std::vector<Cell> remaining;
    for (Index n = 0; n < N; ++n)
        for (Index m = 0; m < M; ++m)
            if (out.train(m, n)) remaining.push_back({m, n});
    const auto take = static_cast<Index>(std::llround(plan.random_fraction * static_cast<double>(remaining.size())));
    for (Index i = 0; i < take; ++i) {
        std::uniform_int_distribution<Index> pick(i, static_cast<Index>(remaining.size()) - 1);
        std::swap(remaining[i], remaining[pick(rnd_rng)]);
    }
    out.random_test.assign(remaining.begin(), remaining.begin() + take);
    std::sort(out.random_test.begin(), out.random_test.end(),
              [](const Cell& x, const Cell& y) { return x.col != y.col ? x.col < y.col : x.row < y.row; });
    for (const auto& c : out.random_test) out.train(c.row, c.col) = false;
    return out;
}

inline MaskSplit make_mask_plan(const MaskPlan& plan, Index M, Index N) {
    return make_mask_plan(plan, Mask::Constant(M, N, true));
}

}  // namespace tvdyn

#endif  // TVDYN_DATAGEN_HPP
