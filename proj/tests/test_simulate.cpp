#include <doctest.h>

#include <cmath>

#include "sdelab/builtins.hpp"
#include "sdelab/errors.hpp"
#include "sdelab/exprlang.hpp"
#include "sdelab/simulate.hpp"

using namespace sdelab;

namespace {

SimConfig base_cfg(int dim) {
    SimConfig cfg;
    cfg.y = Vec::Zero(dim);
    return cfg;
}

}  // namespace

TEST_CASE("config validation rejects malformed runs") {
    const SdeSpec spec = make_brownian(2);
    SimConfig cfg = base_cfg(2);
    cfg.store = StoreMode::FunctionalsOnly;

    SimConfig bad = cfg;
    bad.dt = 0.0;
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
    bad = cfg;
    bad.dt = 2.0;  // T < dt
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
    bad = cfg;
    bad.y = Vec::Zero(3);
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
    bad = cfg;
    bad.n_paths = 0;
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
    bad = cfg;
    bad.store = StoreMode::Marginals;  // no times given
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
    bad = cfg;
    bad.y = Vec::Constant(2, 2e6);  // outside the explosion radius
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
    bad = cfg;
    bad.exit_radii = {0.0};
    CHECK_THROWS_AS(euler_maruyama(spec, bad), ConfigError);
}

TEST_CASE("flat dispersion gives the exact Gaussian law at any step size") {
    const SdeSpec spec = make_brownian(2);
    SimConfig cfg = base_cfg(2);
    cfg.dt = 0.25;
    cfg.T = 1.0;
    cfg.n_paths = 20000;
    cfg.store = StoreMode::Marginals;
    cfg.marginal_times = {1.0};
    const Ensemble ens = euler_maruyama(spec, cfg);
    CHECK(ens.n_steps == 4);
    CHECK(ens.n_exploded == 0);

    double sum = 0.0, sum2 = 0.0;
    for (const PathRecord& rec : ens.paths) {
        sum += rec.marginals[0];
        sum2 += rec.marginals[0] * rec.marginals[0];
    }
    const double n = static_cast<double>(cfg.n_paths);
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::fabs(mean) < 0.03);       // se ~ 0.007
    CHECK(std::fabs(var - 1.0) < 0.04);  // se ~ 0.010
}

TEST_CASE("linear mean reversion matches the exact moments weakly") {
    const SdeSpec spec = make_ou(2);
    SimConfig cfg = base_cfg(2);
    cfg.y[0] = 1.0;
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.n_paths = 4000;
    cfg.store = StoreMode::Marginals;
    cfg.marginal_times = {1.0};
    const Ensemble ens = euler_maruyama(spec, cfg);

    double sum0 = 0.0, sum1 = 0.0;
    for (const PathRecord& rec : ens.paths) {
        sum0 += rec.marginals[0];
        sum1 += rec.marginals[1];
    }
    const double n = static_cast<double>(cfg.n_paths);
    const double sd = std::sqrt(1.0 - std::exp(-2.0));
    const double tol = 3.0 * sd / std::sqrt(n) + 2.0 * cfg.dt;
    CHECK(std::fabs(sum0 / n - std::exp(-1.0)) < tol);
    CHECK(std::fabs(sum1 / n - 0.0) < tol);
}

TEST_CASE("ensembles are identical across thread counts and reruns") {
    const SdeSpec spec = make_ou(2);
    SimConfig cfg = base_cfg(2);
    cfg.y[0] = 0.5;
    cfg.dt = 0.01;
    cfg.T = 0.1;
    cfg.n_paths = 7;
    cfg.store = StoreMode::FullPaths;
    cfg.seed = 99;

    cfg.n_threads = 1;
    const Ensemble a = euler_maruyama(spec, cfg);
    cfg.n_threads = 3;
    const Ensemble b = euler_maruyama(spec, cfg);
    cfg.n_threads = 1;
    const Ensemble c = euler_maruyama(spec, cfg);

    REQUIRE(a.paths.size() == b.paths.size());
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        CHECK(a.paths[i].states == b.paths[i].states);  // bitwise
        CHECK(a.paths[i].states == c.paths[i].states);
    }
}

TEST_CASE("cubic drift freezes instead of overflowing") {
    const SdeSpec spec = make_quartic(2);
    SimConfig cfg = base_cfg(2);
    cfg.y[0] = 2.0;
    cfg.dt = 0.05;
    cfg.T = 5.0;
    cfg.n_paths = 3;
    cfg.store = StoreMode::FullPaths;
    cfg.exit_radii = {3.0};
    const Ensemble ens = euler_maruyama(spec, cfg);
    CHECK(ens.n_exploded == 3);
    const int d = 2;
    for (const PathRecord& rec : ens.paths) {
        REQUIRE(rec.exploded());
        CHECK(rec.final_state.allFinite());
        // Frozen: every stored state from the freeze step on is the same.
        for (std::int64_t k = rec.explode_step; k <= ens.n_steps; ++k) {
            CHECK(rec.states[static_cast<std::size_t>(k * d)] ==
                  rec.final_state[0]);
            CHECK(rec.states[static_cast<std::size_t>(k * d + 1)] ==
                  rec.final_state[1]);
        }
        // The tracked exit happened no later than the freeze.
        REQUIRE(rec.exit_steps[0] >= 0);
        CHECK(rec.exit_steps[0] <= rec.explode_step);
    }
}

TEST_CASE("exit steps record the first threshold crossing") {
    const SdeSpec spec = make_brownian(2);
    SimConfig cfg = base_cfg(2);
    cfg.dt = 0.01;
    cfg.T = 1.0;
    cfg.n_paths = 50;
    cfg.store = StoreMode::FullPaths;
    cfg.exit_radii = {0.2, 1e5};
    const Ensemble ens = euler_maruyama(spec, cfg);
    for (const PathRecord& rec : ens.paths) {
        CHECK(rec.exit_steps[1] == -1);  // nobody reaches 1e5
        const std::int64_t k = rec.exit_steps[0];
        if (k < 0) continue;
        const auto at = [&](std::int64_t step) {
            return std::hypot(rec.states[static_cast<std::size_t>(2 * step)],
                              rec.states[static_cast<std::size_t>(2 * step + 1)]);
        };
        CHECK(at(k) >= 0.2);
        for (std::int64_t j = 0; j < k; ++j) CHECK(at(j) < 0.2);
    }
}

TEST_CASE("degenerate start reproduces the trivial solution exactly") {
    const SdeSpec spec = make_girsanov(1.0, 2);
    SimConfig cfg = base_cfg(2);
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.n_paths = 10;
    cfg.store = StoreMode::FullPaths;
    const Ensemble ens = euler_maruyama(spec, cfg);
    for (const PathRecord& rec : ens.paths) {
        CHECK(rec.final_state[0] == 0.0);
        CHECK(rec.final_state[1] == 0.0);
        for (std::size_t e = 0; e < ens.eps_ladder.size(); ++e)
            CHECK(ens.occupation_time(rec, e) == ens.t_end);  // bitwise
    }

    // A frozen-at-degeneracy path makes the psi-bar functional infinite
    // while occupation stays the whole horizon.
    const ScalarField g =
        restrict_to_ball(psi_bar_field(spec.coeffs), 5.0);
    const KrylovResult kr = krylov_functional(ens, g, 1.0, std::nullopt);
    CHECK(std::isinf(kr.estimate));
    CHECK(kr.n_infinite == 10);
}

TEST_CASE("psi_bar and ball restriction") {
    const SdeSpec spec = make_girsanov(1.0, 2);
    const ScalarField pb = psi_bar_field(spec.coeffs);
    Vec x = Vec::Zero(2);
    CHECK(std::isinf(pb.eval(x)));
    x[0] = 2.0;
    CHECK(pb.eval(x) == 0.5);

    const ScalarField raw = expr::compile("log(x[0])", 2);
    const ScalarField g = restrict_to_ball(raw, 1.0);
    Vec far(2);
    far << -5.0, 0.0;
    CHECK(g.eval(far) == 0.0);  // indicator short-circuits, no NaN
    Vec in(2);
    in << 0.5, 0.0;
    CHECK(g.eval(in) == std::log(0.5));
    CHECK_THROWS_AS(restrict_to_ball(raw, 0.0), ConfigError);
}

TEST_CASE("left-endpoint functional sums are exact for flat integrands") {
    const SdeSpec spec = make_brownian(2);
    SimConfig cfg = base_cfg(2);
    cfg.dt = 0.25;
    cfg.T = 1.0;
    cfg.n_paths = 5;
    cfg.store = StoreMode::FullPaths;
    const Ensemble ens = euler_maruyama(spec, cfg);

    const ScalarField one = expr::compile("1", 2);
    const KrylovResult kr1 = krylov_functional(ens, one, 1.0, std::nullopt);
    CHECK(kr1.estimate == 1.0);
    CHECK(kr1.ci95 == 0.0);
    CHECK(krylov_functional(ens, one, 0.5, std::nullopt).estimate == 0.5);

    // A vanishing stop radius truncates after the very first step.
    const KrylovResult kr2 = krylov_functional(ens, one, 1.0, 1e-12);
    CHECK(kr2.estimate == 0.25);

    CHECK_THROWS_AS(krylov_functional(ens, one, 2.0, std::nullopt),
                    ConfigError);
    SimConfig marg = cfg;
    marg.store = StoreMode::Marginals;
    marg.marginal_times = {1.0};
    const Ensemble ens2 = euler_maruyama(spec, marg);
    CHECK_THROWS_AS(krylov_functional(ens2, one, 1.0, std::nullopt), Error);
}

TEST_CASE("occupation profile aggregates the ladder") {
    const SdeSpec spec = make_piecewise_inv_psi();
    SimConfig cfg = base_cfg(2);
    cfg.dt = 0.01;
    cfg.T = 1.0;
    cfg.n_paths = 40;
    cfg.store = StoreMode::FunctionalsOnly;
    const Ensemble ens = euler_maruyama(spec, cfg);
    const auto prof = occupation_profile(ens);
    REQUIRE(prof.size() == ens.eps_ladder.size());
    // sqrt(1/psi) is 0.5 inside the unit disk, above it outside; the ladder
    // caps at 0.2, so nothing is ever counted.
    for (const auto& e : prof) CHECK(e.mean == 0.0);

    // A ladder entry at 0.5 catches exactly the time inside the unit disk,
    // which at this horizon is most of it.
    SdeSpec wide = spec;
    wide.degeneracy_eps_ladder = {0.5};
    const Ensemble ens2 = euler_maruyama(wide, cfg);
    const auto prof2 = occupation_profile(ens2);
    CHECK(prof2[0].mean > 0.5);
    CHECK(prof2[0].mean <= 1.0);
}

TEST_CASE("marginal times snap to the step grid") {
    const SdeSpec spec = make_brownian(2);
    SimConfig cfg = base_cfg(2);
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.n_paths = 2;
    cfg.store = StoreMode::Marginals;
    cfg.marginal_times = {0.5004, 1.0};
    const Ensemble ens = euler_maruyama(spec, cfg);
    CHECK(ens.marginal_steps[0] == 500);
    CHECK(ens.marginal_times_snapped[0] == 500 * 1e-3);
    CHECK(ens.marginal_steps[1] == 1000);
}
