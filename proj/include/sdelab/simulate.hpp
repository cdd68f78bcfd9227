#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdelab/fields.hpp"

namespace sdelab {

enum class StoreMode { FullPaths, Marginals, FunctionalsOnly };

struct SimConfig {
    double dt = 1e-3;
    double T = 1.0;
    Vec y;                       // start point
    std::int64_t n_paths = 1;
    std::uint64_t seed = 0;
    double R_explode = 0.0;      // 0 -> take the spec's explode radius
    StoreMode store = StoreMode::Marginals;
    std::vector<double> marginal_times;  // snapped to the grid
    std::vector<double> exit_radii;      // first-exit radii to track
    int n_threads = 1;           // 0 -> hardware concurrency
};

struct PathRecord {
    std::int64_t path_index = 0;
    // Flat row-major state storage: FullPaths keeps (n_steps+1)*d values,
    // Marginals keeps one d-block per requested time.
    std::vector<double> states;
    std::vector<double> marginals;
    // Steps spent in {sqrt(1/psi) <= eps}, one counter per ladder entry.
    // Multiply by dt for time; kept integral so T is reproduced exactly.
    std::vector<std::uint32_t> occupation_counts;
    std::vector<std::int64_t> exit_steps;  // per exit radius, -1 = never
    std::int64_t explode_step = -1;
    Vec final_state;

    bool exploded() const { return explode_step >= 0; }
};

struct Ensemble {
    SdeSpec spec;
    SimConfig cfg;
    std::int64_t n_steps = 0;
    double t_end = 0.0;  // n_steps * dt
    std::vector<double> eps_ladder;
    std::vector<double> marginal_times_snapped;
    std::vector<std::int64_t> marginal_steps;
    std::vector<PathRecord> paths;
    std::int64_t n_exploded = 0;

    double occupation_time(const PathRecord& rec, std::size_t eps_idx) const {
        return static_cast<double>(rec.occupation_counts[eps_idx]) * cfg.dt;
    }
};

void validate_sim_config(const SdeSpec& spec, const SimConfig& cfg);

// Euler-Maruyama: X_{k+1} = X_k + sigma_hat(X_k) sqrt(dt) Z_k + H_hat(X_k) dt.
// Z_k comes from a counter-based stream keyed by (seed, path, step), so the
// ensemble is a deterministic function of (spec, cfg) regardless of thread
// count. A path freezes in place once |X_k| >= R_explode; functionals keep
// accumulating over the frozen state.
Ensemble euler_maruyama(const SdeSpec& spec, const SimConfig& cfg);

struct OccupationEntry {
    double eps = 0.0;
    double mean = 0.0;
    double ci95 = 0.0;
};

std::vector<OccupationEntry> occupation_profile(const Ensemble& ens);

struct KrylovResult {
    double estimate = 0.0;
    double ci95 = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t n_infinite = 0;
};

// MC estimate of E[ int_0^{t ^ D_R} g(X_s) ds ] by left-endpoint Riemann
// sums; D_R is the first grid time with |X| >= stop_radius. Requires a
// FullPaths ensemble. An infinite estimate is a legitimate outcome: steps
// where g evaluates to +inf contribute +inf.
KrylovResult krylov_functional(const Ensemble& ens, const ScalarField& g,
                               double t, std::optional<double> stop_radius);

// The field psi_bar: 1/inv_psi where inv_psi > 0, +inf at its zeros.
ScalarField psi_bar_field(const CoefficientSet& coeffs);

// g restricted to the closed ball of the given radius; g is not evaluated
// outside (the indicator short-circuits, so 0 * inf never arises).
ScalarField restrict_to_ball(ScalarField g, double radius);

}  // namespace sdelab
