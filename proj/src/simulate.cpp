#include "sdelab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "sdelab/errors.hpp"
#include "sdelab/linalg.hpp"
#include "sdelab/rng.hpp"

namespace sdelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MarginalSlot {
    std::int64_t step;
    std::size_t slot;
};

// Everything the per-step loop needs, resolved once per ensemble.
struct StepPlan {
    const SdeSpec* spec = nullptr;
    const SimConfig* cfg = nullptr;
    int dim = 0;
    std::int64_t n_steps = 0;
    double sqrt_dt = 0.0;
    double explode_radius = 0.0;
    std::vector<double> eps_ladder;
    std::vector<MarginalSlot> marginal_slots;

    bool inv_psi_const = false;
    double inv_psi_value = 0.0;
    bool drift_const = false;
    Vec drift_value;
    bool factor_const = false;
    Mat factor_value;  // sigma_hat / sqrt(inv_psi), cached when x-independent
};

double fast_inv_psi(const StepPlan& plan, const Vec& x) {
    if (plan.inv_psi_const) return plan.inv_psi_value;
    return inv_psi_at(plan.spec->coeffs, x);
}

void eval_factor(const StepPlan& plan, const Vec& x, Mat& out) {
    if (plan.factor_const) {
        out = plan.factor_value;
        return;
    }
    const CoefficientSet& c = plan.spec->coeffs;
    if (plan.spec->factorization == FactorizationMethod::ExplicitSigma) {
        out = c.sigma->eval(x);
        return;
    }
    out = factorize(c.A.eval(x), plan.spec->factorization);
}

void simulate_one(const StepPlan& plan, std::int64_t p, PathRecord& rec) {
    const SimConfig& cfg = *plan.cfg;
    const int d = plan.dim;
    const std::int64_t n_steps = plan.n_steps;
    const std::size_t n_eps = plan.eps_ladder.size();
    const std::size_t n_radii = cfg.exit_radii.size();

    rec.path_index = p;
    rec.occupation_counts.assign(n_eps, 0);
    rec.exit_steps.assign(n_radii, -1);
    rec.explode_step = -1;
    if (cfg.store == StoreMode::FullPaths)
        rec.states.resize(static_cast<std::size_t>(n_steps + 1) * d);
    if (cfg.store == StoreMode::Marginals)
        rec.marginals.assign(plan.marginal_slots.size() * d, 0.0);

    NormalStream noise(cfg.seed, static_cast<std::uint64_t>(p));

    Vec x = cfg.y;
    Vec z(d), drift(d);
    Mat factor(d, d);

    auto record_state = [&](std::int64_t k) {
        if (cfg.store == StoreMode::FullPaths)
            std::memcpy(rec.states.data() + static_cast<std::size_t>(k) * d,
                        x.data(), sizeof(double) * d);
        if (cfg.store == StoreMode::Marginals)
            for (const MarginalSlot& m : plan.marginal_slots)
                if (m.step == k)
                    std::memcpy(rec.marginals.data() + m.slot * d, x.data(),
                                sizeof(double) * d);
    };
    auto check_exits = [&](std::int64_t k, double r) {
        for (std::size_t i = 0; i < n_radii; ++i)
            if (rec.exit_steps[i] < 0 && r >= cfg.exit_radii[i])
                rec.exit_steps[i] = k;
    };

    record_state(0);
    check_exits(0, x.norm());

    bool frozen = false;
    Vec x_prev = x;
    for (std::int64_t k = 0; k < n_steps; ++k) {
        const double m = fast_inv_psi(plan, x);
        const double s = std::sqrt(m);
        for (std::size_t e = 0; e < n_eps; ++e)
            if (s <= plan.eps_ladder[e]) ++rec.occupation_counts[e];

        if (!frozen) {
            x_prev = x;
            if (plan.drift_const) {
                drift = plan.drift_value;
            } else {
                drift = plan.spec->coeffs.H_hat.eval(x);
            }
            if (m > 0.0) {
                eval_factor(plan, x, factor);
                noise.fill(static_cast<std::uint64_t>(k), z.data(), d);
                const double scale = std::sqrt(m) * plan.sqrt_dt;
                x.noalias() += factor * (scale * z);
            }
            x.noalias() += cfg.dt * drift;
            bool overflowed = !x.allFinite();
            if (overflowed) x = x_prev;  // park at the last finite state
            const double r = x.norm();
            if (r >= plan.explode_radius || overflowed) {
                frozen = true;
                rec.explode_step = k + 1;
            }
            check_exits(k + 1, r);
        }
        record_state(k + 1);
    }

    rec.final_state = x;
}

}  // namespace

void validate_sim_config(const SdeSpec& spec, const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
        throw ConfigError("dt must be positive and finite");
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T))
        throw ConfigError("T must be positive and finite");
    if (cfg.T < cfg.dt) throw ConfigError("T must be at least dt");
    if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
    if (cfg.y.size() != spec.coeffs.dim)
        throw ConfigError("start point dimension does not match the system");
    const double R = cfg.R_explode > 0.0 ? cfg.R_explode : spec.explode_radius;
    if (!(cfg.y.norm() < R))
        throw ConfigError("start point must lie inside the explosion radius");
    const double steps = std::llround(cfg.T / cfg.dt);
    if (steps >= 4294967296.0)
        throw ConfigError("too many steps for the noise counter layout");
    if (cfg.store == StoreMode::Marginals && cfg.marginal_times.empty())
        throw ConfigError("Marginals store mode needs at least one time");
    for (double t : cfg.marginal_times)
        if (t < 0.0 || t > cfg.T + 0.5 * cfg.dt)
            throw ConfigError("marginal time outside [0, T]");
    for (double r : cfg.exit_radii)
        if (!(r > 0.0)) throw ConfigError("exit radii must be positive");
}

Ensemble euler_maruyama(const SdeSpec& spec, const SimConfig& cfg) {
    validate_sim_config(spec, cfg);

    Ensemble ens;
    ens.spec = spec;
    ens.cfg = cfg;
    ens.n_steps = std::llround(cfg.T / cfg.dt);
    ens.t_end = static_cast<double>(ens.n_steps) * cfg.dt;
    ens.eps_ladder = spec.degeneracy_eps_ladder;

    StepPlan plan;
    plan.spec = &ens.spec;
    plan.cfg = &ens.cfg;
    plan.dim = spec.coeffs.dim;
    plan.n_steps = ens.n_steps;
    plan.sqrt_dt = std::sqrt(cfg.dt);
    plan.explode_radius = cfg.R_explode > 0.0 ? cfg.R_explode : spec.explode_radius;
    plan.eps_ladder = ens.eps_ladder;

    for (std::size_t i = 0; i < cfg.marginal_times.size(); ++i) {
        std::int64_t k = std::llround(cfg.marginal_times[i] / cfg.dt);
        k = std::clamp<std::int64_t>(k, 0, ens.n_steps);
        plan.marginal_slots.push_back({k, i});
        ens.marginal_steps.push_back(k);
        ens.marginal_times_snapped.push_back(static_cast<double>(k) * cfg.dt);
    }

    const CoefficientSet& c = spec.coeffs;
    if (c.inv_psi.constant && c.singular_points.empty()) {
        plan.inv_psi_const = true;
        plan.inv_psi_value = inv_psi_at(c, cfg.y);
    }
    if (c.H_hat.constant) {
        plan.drift_const = true;
        plan.drift_value = c.H_hat.eval(cfg.y);
    }
    const bool explicit_sigma =
        spec.factorization == FactorizationMethod::ExplicitSigma;
    if ((explicit_sigma && c.sigma && c.sigma->constant) ||
        (!explicit_sigma && c.A.constant)) {
        Mat probe(plan.dim, plan.dim);
        eval_factor(plan, cfg.y, probe);
        plan.factor_value = probe;
        plan.factor_const = true;
    }

    ens.paths.resize(static_cast<std::size_t>(cfg.n_paths));

    int n_workers = cfg.n_threads;
    if (n_workers <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        n_workers = hc > 0 ? static_cast<int>(hc) : 1;
    }
    n_workers = static_cast<int>(
        std::min<std::int64_t>(n_workers, cfg.n_paths));

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<bool> abort{false};

    auto run_chunk = [&](std::int64_t lo, std::int64_t hi) {
        try {
            for (std::int64_t p = lo; p < hi && !abort.load(); ++p)
                simulate_one(plan, p, ens.paths[static_cast<std::size_t>(p)]);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            abort.store(true);
        }
    };

    if (n_workers <= 1) {
        run_chunk(0, cfg.n_paths);
    } else {
        const std::int64_t chunk =
            (cfg.n_paths + n_workers - 1) / n_workers;
        std::vector<std::thread> workers;
        for (int w = 0; w < n_workers; ++w) {
            const std::int64_t lo = w * chunk;
            const std::int64_t hi = std::min<std::int64_t>(lo + chunk, cfg.n_paths);
            if (lo >= hi) break;
            workers.emplace_back(run_chunk, lo, hi);
        }
        for (std::thread& t : workers) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (const PathRecord& rec : ens.paths)
        if (rec.exploded()) ++ens.n_exploded;
    return ens;
}

std::vector<OccupationEntry> occupation_profile(const Ensemble& ens) {
    std::vector<OccupationEntry> out;
    std::vector<double> values(ens.paths.size());
    for (std::size_t e = 0; e < ens.eps_ladder.size(); ++e) {
        for (std::size_t p = 0; p < ens.paths.size(); ++p)
            values[p] = ens.occupation_time(ens.paths[p], e);
        const MeanCi mc = mean_ci(values);
        out.push_back({ens.eps_ladder[e], mc.mean, mc.ci95});
    }
    return out;
}

KrylovResult krylov_functional(const Ensemble& ens, const ScalarField& g,
                               double t, std::optional<double> stop_radius) {
    if (ens.cfg.store != StoreMode::FullPaths)
        throw Error("krylov_functional needs a FullPaths ensemble");
    if (g.dim != ens.spec.coeffs.dim)
        throw ConfigError("integrand dimension does not match the system");
    if (!(t > 0.0)) throw ConfigError("t must be positive");
    const std::int64_t steps_t = std::llround(t / ens.cfg.dt);
    if (steps_t > ens.n_steps)
        throw ConfigError("t exceeds the simulated horizon");

    const int d = ens.spec.coeffs.dim;
    std::vector<double> values(ens.paths.size());
    for (std::size_t p = 0; p < ens.paths.size(); ++p) {
        const PathRecord& rec = ens.paths[p];
        std::int64_t limit = steps_t;
        if (stop_radius) {
            for (std::int64_t k = 0; k < limit; ++k) {
                Eigen::Map<const Vec> xk(
                    rec.states.data() + static_cast<std::size_t>(k) * d, d);
                if (xk.norm() >= *stop_radius) {
                    limit = k;
                    break;
                }
            }
        }
        double sum = 0.0;
        for (std::int64_t k = 0; k < limit; ++k) {
            Eigen::Map<const Vec> xk(
                rec.states.data() + static_cast<std::size_t>(k) * d, d);
            sum += g.eval(xk);
        }
        values[p] = sum * ens.cfg.dt;
    }

    KrylovResult res;
    res.n_paths = static_cast<std::int64_t>(values.size());
    for (double v : values)
        if (std::isinf(v)) ++res.n_infinite;
    const MeanCi mc = mean_ci(values);
    res.estimate = mc.mean;
    res.ci95 = mc.ci95;
    return res;
}

ScalarField psi_bar_field(const CoefficientSet& coeffs) {
    ScalarField f;
    f.dim = coeffs.dim;
    f.constant = false;
    f.eval = [&coeffs](const Vec& x) {
        const double m = inv_psi_at(coeffs, x);
        return m > 0.0 ? 1.0 / m : kInf;
    };
    return f;
}

ScalarField restrict_to_ball(ScalarField g, double radius) {
    if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
    ScalarField f;
    f.dim = g.dim;
    f.constant = false;
    auto inner = std::make_shared<ScalarField>(std::move(g));
    f.eval = [inner, radius](const Vec& x) {
        if (x.norm() > radius) return 0.0;
        return inner->eval(x);
    };
    return f;
}

}  // namespace sdelab
